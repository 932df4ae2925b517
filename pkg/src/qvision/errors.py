"""
Exceptions raised by qvision.

Every error the command line can report derives from QVisionError and
carries the process exit code it maps to.
"""


class QVisionError(Exception):
    exit_code = 1


class UsageError(QVisionError):
    exit_code = 2


class ConfigError(QVisionError):
    exit_code = 3


class DataError(QVisionError):
    exit_code = 4


class IdxFormatError(DataError, ValueError):
    pass


class NumericError(QVisionError):
    exit_code = 5


# Validation errors of the simulator surface. They are ValueErrors for
# library callers and numeric failures for the command line.

class SimulatorCapacityError(NumericError, ValueError):
    pass


class DimensionError(NumericError, ValueError):
    pass


class QubitIndexError(NumericError, ValueError):
    pass


class ChannelParameterError(NumericError, ValueError):
    pass


class PostSelectionError(NumericError, ValueError):
    pass


class UnsupportedGeneratorError(NumericError, ValueError):
    pass


class CircuitParseError(DataError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        location = ''
        if line is not None:
            location = 'line {}'.format(line)
            if column is not None:
                location += ', column {}'.format(column)
            location += ': '
        super().__init__(location + message)
