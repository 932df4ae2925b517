#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Single-qubit Kraus noise channels and noise models
"""
import re
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from qvision.errors import ChannelParameterError
from qvision.qstate import (
    DTYPE, I2, X, Y, Z, DensityMatrix, batch_apply_superoperator,
    check_qubits,
)

BIT_FLIP = 'bit_flip'
PHASE_FLIP = 'phase_flip'
AMPLITUDE_DAMPING = 'amplitude_damping'
DEPOLARIZING = 'depolarizing'

END_OF_CIRCUIT = 'end_of_circuit'
AFTER_EACH_LAYER = 'after_each_layer'
PLACEMENTS = (END_OF_CIRCUIT, AFTER_EACH_LAYER)

# Short names used by the circuit text format and the command line
ALIASES = {
    'bitflip': BIT_FLIP,
    'bit_flip': BIT_FLIP,
    'phaseflip': PHASE_FLIP,
    'phase_flip': PHASE_FLIP,
    'damp': AMPLITUDE_DAMPING,
    'amplitude_damping': AMPLITUDE_DAMPING,
    'depol': DEPOLARIZING,
    'depolarizing': DEPOLARIZING,
}
SHORT_NAMES = {
    BIT_FLIP: 'bitflip',
    PHASE_FLIP: 'phaseflip',
    AMPLITUDE_DAMPING: 'damp',
    DEPOLARIZING: 'depol',
}
PLACEMENT_ALIASES = {
    'end': END_OF_CIRCUIT,
    END_OF_CIRCUIT: END_OF_CIRCUIT,
    'layer': AFTER_EACH_LAYER,
    AFTER_EACH_LAYER: AFTER_EACH_LAYER,
}


def channel_kind(name):
    """Canonical channel kind for a long or short name"""
    try:
        return ALIASES[name.lower()]
    except KeyError:
        raise ChannelParameterError(
            'unknown channel kind {!r}'.format(name)
        ) from None


def check_parameter(parameter):
    parameter = float(parameter)
    if not 0.0 <= parameter <= 1.0:
        raise ChannelParameterError(
            'channel parameter {} outside [0, 1]'.format(parameter)
        )
    return parameter


def _bit_flip(p):
    return (np.sqrt(1 - p) * I2, np.sqrt(p) * X)


def _phase_flip(p):
    return (np.sqrt(1 - p) * I2, np.sqrt(p) * Z)


def _amplitude_damping(gamma):
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=DTYPE)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=DTYPE)
    return (k0, k1)


def _depolarizing(p):
    # (1 - p) rho + p I/2
    k0 = np.sqrt(max(0.0, 1 - 3 * p / 4))
    k = np.sqrt(p / 4)
    return (k0 * I2, k * X, k * Y, k * Z)


_BUILDERS = {
    BIT_FLIP: _bit_flip,
    PHASE_FLIP: _phase_flip,
    AMPLITUDE_DAMPING: _amplitude_damping,
    DEPOLARIZING: _depolarizing,
}


@dataclass(frozen=True)
class KrausSet:
    kind: str
    parameter: float
    operators: Tuple[np.ndarray, ...]

    def superoperator(self):
        """sum_i K_i (x) conj(K_i), acting on (row bit, column bit)"""
        return sum(np.kron(k, k.conj()) for k in self.operators)


def make_channel(kind, parameter):
    """Build the Kraus set of one of the four channel kinds.

    :raises ChannelParameterError:
        On unknown kinds or a parameter outside [0, 1]
    """
    kind = channel_kind(kind)
    parameter = check_parameter(parameter)
    return KrausSet(kind, parameter, _BUILDERS[kind](parameter))


def check_completeness(ch):
    """max |sum K^+ K - I|"""
    dim = ch.operators[0].shape[0]
    total = np.zeros((dim, dim), dtype=DTYPE)
    for k in ch.operators:
        total += k.conj().T @ k
    return float(np.max(np.abs(total - np.eye(dim))))


def apply_channel(rho, ch, qubit):
    """rho -> sum K_i rho K_i^+ on one qubit"""
    (qubit,) = check_qubits((qubit,), rho.num_qubits)
    matrix = batch_apply_superoperator(
        rho.matrix[None], ch.superoperator(), qubit, rho.num_qubits
    )
    return DensityMatrix(rho.num_qubits, matrix[0])


@dataclass(frozen=True)
class NoiseEntry:
    kind: str
    parameter: float
    placement: str = END_OF_CIRCUIT
    qubits: Optional[Tuple[int, ...]] = None  # None means every qubit

    def __post_init__(self):
        object.__setattr__(self, 'kind', channel_kind(self.kind))
        object.__setattr__(self, 'parameter', check_parameter(self.parameter))
        if self.placement not in PLACEMENTS:
            raise ChannelParameterError(
                'unknown placement {!r}'.format(self.placement)
            )
        if self.qubits is not None:
            object.__setattr__(self, 'qubits', tuple(self.qubits))

    @property
    def channel(self):
        return make_channel(self.kind, self.parameter)

    def targets(self, num_qubits):
        if self.qubits is None:
            return tuple(range(num_qubits))
        return check_qubits(self.qubits, num_qubits)

    def __str__(self):
        text = '{}:{!r}@{}'.format(
            SHORT_NAMES[self.kind], self.parameter,
            'end' if self.placement == END_OF_CIRCUIT else 'layer',
        )
        if self.qubits is not None:
            text += ':' + ','.join(str(q) for q in self.qubits)
        return text


re_noise_entry = re.compile(
    r'(?P<kind>[a-z_]+):(?P<parameter>[0-9.eE+-]+)'
    r'(@(?P<placement>[a-z_]+))?(:(?P<qubits>[0-9]+(,[0-9]+)*))?'
)


@dataclass(frozen=True)
class NoiseModel:
    entries: Tuple[NoiseEntry, ...] = ()

    def __bool__(self):
        return bool(self.entries)

    def at(self, placement):
        return tuple(e for e in self.entries if e.placement == placement)

    @staticmethod
    def flip(parameter, placement=END_OF_CIRCUIT):
        """Bit flip and phase flip of the same strength on every qubit"""
        return NoiseModel((
            NoiseEntry(BIT_FLIP, parameter, placement),
            NoiseEntry(PHASE_FLIP, parameter, placement),
        ))

    @staticmethod
    def single(kind, parameter, placement=END_OF_CIRCUIT, qubits=None):
        return NoiseModel((NoiseEntry(kind, parameter, placement, qubits),))

    @staticmethod
    def parse(text):
        """Parse ``"depol:0.05@end;bitflip:0.1@layer:0"`` style text.

        Entries are separated by ``;`` or whitespace; an entry is
        ``kind:parameter[@end|@layer][:q0,q1,...]``.
        """
        entries = []
        for token in re.split(r'[;\s]+', text.strip()):
            if not token:
                continue
            match = re_noise_entry.fullmatch(token)
            if match is None:
                raise ChannelParameterError(
                    'bad noise entry {!r}'.format(token)
                )
            placement = PLACEMENT_ALIASES.get(
                match.group('placement') or 'end'
            )
            if placement is None:
                raise ChannelParameterError(
                    'bad placement in {!r}'.format(token)
                )
            qubits = match.group('qubits')
            try:
                parameter = float(match.group('parameter'))
            except ValueError:
                raise ChannelParameterError(
                    'bad parameter in {!r}'.format(token)
                ) from None
            entries.append(NoiseEntry(
                match.group('kind'),
                parameter,
                placement,
                tuple(int(q) for q in qubits.split(',')) if qubits else None,
            ))
        return NoiseModel(tuple(entries))

    def __str__(self):
        return ';'.join(str(e) for e in self.entries)


def batch_apply_entries(rho, entries, num_qubits):
    """Apply noise entries to every qubit in their scope, in order"""
    for entry in entries:
        superop = entry.channel.superoperator()
        for qubit in entry.targets(num_qubits):
            rho = batch_apply_superoperator(rho, superop, qubit, num_qubits)
    return rho
