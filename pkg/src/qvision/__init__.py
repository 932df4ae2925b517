#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
qvision

Hybrid quantum-classical image toolkit: an exact statevector and
density-matrix simulator with parameter-shift gradients, a data
re-uploading quantum-convolution classifier and a patch quantum GAN.
"""
import logging
import os

__version__ = '0.3.0'

log_levels = {
    'debug': logging.DEBUG,
    'info': logging.INFO,
    'warning': logging.WARNING,
    'error': logging.ERROR
}

logger = logging.getLogger('qvision')
logger.setLevel(
    log_levels.get(os.getenv('LOG', 'warning').lower(), logging.WARNING)
)

from qvision.errors import (  # noqa: E402
    QVisionError, UsageError, ConfigError, DataError, NumericError,
)
from qvision.qstate import (  # noqa: E402
    StateVector, DensityMatrix, Observable,
    new_zero_state, apply_gate, measure_probs, expectation, to_density,
    apply_gate_dm, partial_trace, postselect, bell_state,
)
from qvision.channels import (  # noqa: E402
    KrausSet, NoiseModel, make_channel, apply_channel, check_completeness,
)
from qvision.circuit import (  # noqa: E402
    Instruction, Circuit, BoundCircuit,
    parse_circuit, serialize_circuit, run_ideal, run_noisy, build_qpe,
)
from qvision.gradients import (  # noqa: E402
    ParamVector, OptimizerState,
    shift_rule_gradient, finite_diff_gradient, optimizer_step,
)

__all__ = [
    'logger', 'log_levels',
    'QVisionError', 'UsageError', 'ConfigError', 'DataError', 'NumericError',
    'StateVector', 'DensityMatrix', 'Observable',
    'new_zero_state', 'apply_gate', 'measure_probs', 'expectation',
    'to_density', 'apply_gate_dm', 'partial_trace', 'postselect', 'bell_state',
    'KrausSet', 'NoiseModel', 'make_channel', 'apply_channel',
    'check_completeness',
    'Instruction', 'Circuit', 'BoundCircuit', 'parse_circuit',
    'serialize_circuit', 'run_ideal', 'run_noisy', 'build_qpe',
    'ParamVector', 'OptimizerState', 'shift_rule_gradient',
    'finite_diff_gradient', 'optimizer_step',
]
