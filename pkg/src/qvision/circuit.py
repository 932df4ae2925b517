#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Parameterized circuits

A ``Circuit`` is an immutable instruction list over ``num_qubits`` qubits.
Rotation angles are literals (radians) or named symbols bound later through
``Circuit.bind``. Circuits round-trip through a small line-based text
format::

    # Bell pair
    qubits 2
    params theta
    h 0
    cx 0 1
    ry 1 theta
    noise depol 0 0.05

Execution is batched: ``simulate_states`` and ``simulate_densities`` run
one circuit for many rows of instruction angles at once, which is how the
gradient code evaluates all parameter-shifted copies of a circuit in a
single pass.
"""
import logging
import re
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from qvision.channels import (
    AFTER_EACH_LAYER, END_OF_CIRCUIT, SHORT_NAMES, NoiseModel,
    batch_apply_entries, channel_kind, check_parameter, make_channel,
)
from qvision.errors import (
    ChannelParameterError, CircuitParseError, DimensionError,
    QubitIndexError, SimulatorCapacityError,
)
from qvision.qstate import (
    CX, CZ, H, MAX_DENSITY_QUBITS, MAX_QUBITS, X, Y, Z, DensityMatrix,
    StateVector, batch_apply, batch_apply_dm, batch_apply_superoperator,
    batch_expectation, batch_expectation_dm, batch_to_density,
    batch_zero_states, cphase, rx, ry, rz,
)

logger = logging.getLogger(__name__)

NOISE = 'noise'
ROTATIONS = ('rx', 'ry', 'rz')

# kind -> (number of targets, takes an angle)
GATE_KINDS = {
    'h': (1, False),
    'x': (1, False),
    'y': (1, False),
    'z': (1, False),
    'rx': (1, True),
    'ry': (1, True),
    'rz': (1, True),
    'cx': (2, False),
    'cz': (2, False),
    'cp': (2, True),
}

FIXED_GATES = {'h': H, 'x': X, 'y': Y, 'z': Z, 'cx': CX, 'cz': CZ}
ANGLE_GATES = {'rx': rx, 'ry': ry, 'rz': rz, 'cp': cphase}

Argument = Union[None, float, str, Tuple[str, float]]


@dataclass(frozen=True)
class Instruction:
    kind: str
    targets: Tuple[int, ...]
    argument: Argument = None

    def __post_init__(self):
        object.__setattr__(self, 'targets', tuple(int(t) for t in self.targets))
        if self.kind == NOISE:
            if len(self.targets) != 1:
                raise DimensionError('noise acts on exactly one qubit')
            kind, parameter = self.argument
            object.__setattr__(self, 'argument', (
                channel_kind(kind), check_parameter(parameter)
            ))
            return
        if self.kind not in GATE_KINDS:
            raise ValueError('unknown instruction {!r}'.format(self.kind))
        arity, takes_angle = GATE_KINDS[self.kind]
        if len(self.targets) != arity:
            raise DimensionError('{} takes {} target(s), got {}'.format(
                self.kind, arity, len(self.targets)
            ))
        if len(set(self.targets)) != arity:
            raise QubitIndexError('{} targets must be distinct'.format(
                self.kind
            ))
        if takes_angle != (self.argument is not None):
            raise DimensionError('{} {} an angle'.format(
                self.kind, 'needs' if takes_angle else 'does not take'
            ))
        if isinstance(self.argument, (int, float)):
            if not np.isfinite(self.argument):
                raise ValueError('{} angle must be finite, got {}'.format(
                    self.kind, self.argument
                ))
            object.__setattr__(self, 'argument', float(self.argument))

    @property
    def symbol(self) -> Optional[str]:
        return self.argument if isinstance(self.argument, str) else None


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    instructions: Tuple[Instruction, ...] = ()
    symbols: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'instructions', tuple(self.instructions))
        object.__setattr__(self, 'symbols', tuple(self.symbols))
        if self.num_qubits < 1:
            raise SimulatorCapacityError('a circuit needs at least one qubit')
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError('duplicate symbols {}'.format(self.symbols))
        known = set(self.symbols)
        for ins in self.instructions:
            for t in ins.targets:
                if t >= self.num_qubits:
                    raise QubitIndexError(
                        'qubit {} out of range for {} qubits'.format(
                            t, self.num_qubits
                        )
                    )
            if ins.symbol is not None and ins.symbol not in known:
                raise ValueError('undeclared symbol {!r}'.format(ins.symbol))

    @staticmethod
    def from_instructions(num_qubits, instructions, symbols=()):
        """Build a circuit, appending undeclared symbols in first-use order"""
        symbols = list(symbols)
        for ins in instructions:
            if ins.symbol is not None and ins.symbol not in symbols:
                symbols.append(ins.symbol)
        return Circuit(num_qubits, tuple(instructions), tuple(symbols))

    @property
    def has_noise(self):
        return any(ins.kind == NOISE for ins in self.instructions)

    def bind(self, values=None):
        """Attach symbol values (sequence, mapping or ParamVector)"""
        if values is None:
            values = ()
        elif isinstance(values, dict):
            missing = [s for s in self.symbols if s not in values]
            if missing:
                raise DimensionError('no value for {}'.format(missing))
            values = [values[s] for s in self.symbols]
        elif hasattr(values, 'values') and not callable(values.values):
            values = values.values
        return BoundCircuit(self, np.asarray(values, dtype=float))

    def moments(self):
        """Group instruction indices into ASAP layers of disjoint qubits"""
        depth = [0] * self.num_qubits
        layers = []
        for i, ins in enumerate(self.instructions):
            level = max(depth[t] for t in ins.targets)
            if level == len(layers):
                layers.append([])
            layers[level].append(i)
            for t in ins.targets:
                depth[t] = level + 1
        return layers

    def angle_table(self, values):
        """Per-instruction angles for rows of symbol values.

        ``values`` has shape ``(batch, len(symbols))``; the result has shape
        ``(batch, len(instructions))`` with NaN where no angle applies.
        """
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[1] != len(self.symbols):
            raise DimensionError('{} values for {} symbols'.format(
                values.shape[1], len(self.symbols)
            ))
        index = {s: j for j, s in enumerate(self.symbols)}
        table = np.full((values.shape[0], len(self.instructions)), np.nan)
        for i, ins in enumerate(self.instructions):
            if ins.symbol is not None:
                table[:, i] = values[:, index[ins.symbol]]
            elif isinstance(ins.argument, float):
                table[:, i] = ins.argument
        return table


@dataclass(frozen=True)
class BoundCircuit:
    circuit: Circuit
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.shape[0] != len(self.circuit.symbols):
            raise DimensionError('{} values for {} symbols'.format(
                values.shape[0], len(self.circuit.symbols)
            ))
        object.__setattr__(self, 'values', values)


# Text format

number_regex = r'[-+]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][-+]?[0-9]+)?'
re_number = re.compile(number_regex)
re_integer = re.compile(r'[0-9]+')
re_symbol = re.compile(r'[A-Za-z_][A-Za-z0-9_]*')
re_token = re.compile(r'\S+')


def _tokens(line):
    return [(m.group(), m.start() + 1) for m in re_token.finditer(line)]


def _qubit(token, lineno, num_qubits):
    text, column = token
    if not re_integer.fullmatch(text):
        raise CircuitParseError('bad qubit index {!r}'.format(text),
                                lineno, column)
    qubit = int(text)
    if num_qubits is not None and qubit >= num_qubits:
        raise CircuitParseError(
            'qubit {} out of range for {} qubits'.format(qubit, num_qubits),
            lineno, column,
        )
    return qubit


def _angle(token, lineno):
    text, column = token
    if re_number.fullmatch(text):
        value = float(text)
        if not np.isfinite(value):
            raise CircuitParseError('angle {!r} is not finite'.format(text),
                                    lineno, column)
        return value
    if re_symbol.fullmatch(text):
        return text
    raise CircuitParseError('bad angle {!r}'.format(text), lineno, column)


def parse_circuit(text):
    """Parse the circuit text format.

    :raises CircuitParseError:
        With the 1-based line (and column) of the first problem
    """
    num_qubits = None
    declared = []
    instructions = []
    lineno = 0
    for lineno, raw in enumerate(text.split('\n'), start=1):
        tokens = _tokens(raw.split('#', 1)[0])
        if not tokens:
            continue
        head, column = tokens[0]
        head = head.lower()
        if num_qubits is None:
            if head != 'qubits' or len(tokens) != 2:
                raise CircuitParseError('missing "qubits N" header',
                                        lineno, column)
            num_qubits = _qubit(tokens[1], lineno, None)
            if num_qubits < 1:
                raise CircuitParseError('a circuit needs at least one qubit',
                                        lineno, tokens[1][1])
            continue
        if head == 'qubits':
            raise CircuitParseError('repeated "qubits" header', lineno, column)
        if head == 'params':
            for name, col in tokens[1:]:
                if not re_symbol.fullmatch(name):
                    raise CircuitParseError('bad symbol {!r}'.format(name),
                                            lineno, col)
                if name in declared:
                    raise CircuitParseError(
                        'symbol {!r} declared twice'.format(name), lineno, col
                    )
                declared.append(name)
            continue
        if head == NOISE:
            if len(tokens) != 4:
                raise CircuitParseError(
                    'noise takes a channel, a qubit and a probability',
                    lineno, column,
                )
            try:
                kind = channel_kind(tokens[1][0])
            except ChannelParameterError:
                raise CircuitParseError(
                    'unknown channel {!r}'.format(tokens[1][0]),
                    lineno, tokens[1][1],
                ) from None
            qubit = _qubit(tokens[2], lineno, num_qubits)
            probability = _angle(tokens[3], lineno)
            if not isinstance(probability, float) or \
                    not 0.0 <= probability <= 1.0:
                raise CircuitParseError(
                    'bad probability {!r}'.format(tokens[3][0]),
                    lineno, tokens[3][1],
                )
            instructions.append(Instruction(NOISE, (qubit,),
                                            (kind, probability)))
            continue
        if head not in GATE_KINDS:
            raise CircuitParseError('unknown gate {!r}'.format(tokens[0][0]),
                                    lineno, column)
        arity, takes_angle = GATE_KINDS[head]
        expected = 1 + arity + int(takes_angle)
        if len(tokens) != expected:
            raise CircuitParseError(
                '{} takes {} target(s){}'.format(
                    head, arity, ' and an angle' if takes_angle else ''
                ),
                lineno, column,
            )
        targets = tuple(_qubit(t, lineno, num_qubits)
                        for t in tokens[1:1 + arity])
        if len(set(targets)) != len(targets):
            raise CircuitParseError('{} targets must be distinct'.format(head),
                                    lineno, column)
        argument = _angle(tokens[-1], lineno) if takes_angle else None
        instructions.append(Instruction(head, targets, argument))

    if num_qubits is None:
        raise CircuitParseError('missing "qubits N" header', max(lineno, 1))
    return Circuit.from_instructions(num_qubits, instructions, declared)


def _format_real(value):
    return format(value, '.17g')


def serialize_circuit(c):
    """Canonical text form; ``parse_circuit`` restores an equal circuit"""
    lines = ['qubits {}'.format(c.num_qubits)]
    if c.symbols:
        lines.append('params ' + ' '.join(c.symbols))
    for ins in c.instructions:
        if ins.kind == NOISE:
            kind, parameter = ins.argument
            lines.append('noise {} {} {}'.format(
                SHORT_NAMES[kind], ins.targets[0], _format_real(parameter)
            ))
            continue
        parts = [ins.kind] + [str(t) for t in ins.targets]
        if isinstance(ins.argument, float):
            parts.append(_format_real(ins.argument))
        elif ins.argument is not None:
            parts.append(ins.argument)
        lines.append(' '.join(parts))
    return '\n'.join(lines) + '\n'


# Execution

def _gate_matrix(ins, angles):
    if ins.kind in FIXED_GATES:
        return FIXED_GATES[ins.kind]
    builder = ANGLE_GATES[ins.kind]
    if np.all(angles == angles[0]):
        return builder(angles[0])
    return builder(angles)


def simulate_states(circuit, table, ignore_noise=False):
    """Statevectors for every row of an angle table, shape (batch, 2**n)"""
    if circuit.num_qubits > MAX_QUBITS:
        raise SimulatorCapacityError('{} qubits exceed {}'.format(
            circuit.num_qubits, MAX_QUBITS
        ))
    amps = batch_zero_states(table.shape[0], circuit.num_qubits)
    for i, ins in enumerate(circuit.instructions):
        if ins.kind == NOISE:
            if ignore_noise:
                continue
            raise ValueError(
                'circuit contains noise; use run_noisy or ignore_noise=True'
            )
        amps = batch_apply(amps, _gate_matrix(ins, table[:, i]),
                           ins.targets, circuit.num_qubits)
    return amps


def simulate_densities(circuit, table, nm=None):
    """Density matrices for every row of an angle table"""
    n = circuit.num_qubits
    if n > MAX_DENSITY_QUBITS:
        raise SimulatorCapacityError(
            '{} qubits exceed the density-matrix limit {}'.format(
                n, MAX_DENSITY_QUBITS
            )
        )
    nm = nm or NoiseModel()
    layer_noise = nm.at(AFTER_EACH_LAYER)
    rho = batch_to_density(batch_zero_states(table.shape[0], n))
    for moment in circuit.moments():
        for i in moment:
            ins = circuit.instructions[i]
            if ins.kind == NOISE:
                superop = make_channel(*ins.argument).superoperator()
                rho = batch_apply_superoperator(rho, superop, ins.targets[0], n)
            else:
                rho = batch_apply_dm(rho, _gate_matrix(ins, table[:, i]),
                                     ins.targets, n)
        rho = batch_apply_entries(rho, layer_noise, n)
    return batch_apply_entries(rho, nm.at(END_OF_CIRCUIT), n)


def simulate_expectations(circuit, table, obs, nm=None):
    """Expectation values for every row of an angle table.

    The density-matrix backend is used when a noise model is given or the
    circuit carries noise instructions, the statevector backend otherwise.
    """
    if nm or circuit.has_noise:
        rho = simulate_densities(circuit, table, nm)
        return batch_expectation_dm(rho, obs, circuit.num_qubits)
    amps = simulate_states(circuit, table)
    return batch_expectation(amps, obs, circuit.num_qubits)


def run_ideal(bc, ignore_noise=False):
    """U(theta)|0...0>

    :raises ValueError:
        If the circuit contains noise and ``ignore_noise`` is not set
    """
    table = bc.circuit.angle_table(bc.values[None, :])
    amps = simulate_states(bc.circuit, table, ignore_noise)
    return StateVector(bc.circuit.num_qubits, amps[0])


def run_noisy(bc, nm=None):
    """Density matrix after gates, inline noise and the noise model"""
    table = bc.circuit.angle_table(bc.values[None, :])
    rho = simulate_densities(bc.circuit, table, nm)
    return DensityMatrix(bc.circuit.num_qubits, rho[0])


# Phase estimation

MAX_COUNTING_QUBITS = 8


def _swap(a, b):
    return [Instruction('cx', (a, b)), Instruction('cx', (b, a)),
            Instruction('cx', (a, b))]


def build_qpe(eigenphase, counting_qubits):
    """Phase estimation of P(2 pi eigenphase) on its eigenstate |1>.

    Counting qubits are ``0..m-1`` (qubit 0 least significant) and the target
    is qubit ``m``. Reading the counting register as an integer gives
    ``round(eigenphase * 2**m)``.
    """
    m = int(counting_qubits)
    if not 1 <= m <= MAX_COUNTING_QUBITS:
        raise SimulatorCapacityError(
            'counting qubits must be in 1..{}, got {}'.format(
                MAX_COUNTING_QUBITS, m
            )
        )
    if not 0.0 <= eigenphase < 1.0:
        raise ValueError('eigenphase must lie in [0, 1)')
    target = m
    ins = [Instruction('x', (target,))]
    ins += [Instruction('h', (j,)) for j in range(m)]
    ins += [Instruction('cp', (j, target), 2 * np.pi * eigenphase * 2 ** j)
            for j in range(m)]
    # Inverse QFT, most significant counting qubit first
    for j in reversed(range(m)):
        for i in reversed(range(j + 1, m)):
            ins.append(Instruction('cp', (i, j), -2 * np.pi / 2 ** (i - j + 1)))
        ins.append(Instruction('h', (j,)))
    for j in range(m // 2):
        ins += _swap(j, m - 1 - j)
    return Circuit(m + 1, tuple(ins))


def counting_distribution(probs, counting_qubits):
    """Marginal over the counting register of a QPE outcome distribution"""
    probs = np.asarray(probs)
    return probs.reshape(-1, 1 << counting_qubits).sum(axis=0)


def qpe_distribution(eigenphase, counting_qubits, nm=None):
    bc = build_qpe(eigenphase, counting_qubits).bind()
    if nm:
        probs = np.real(np.diag(run_noisy(bc, nm).matrix))
    else:
        probs = np.abs(run_ideal(bc).amplitudes) ** 2
    return counting_distribution(probs, counting_qubits)


def random_circuit(rng, num_qubits, num_gates, num_symbols=0, noise=False):
    """Random circuit over every instruction kind, used by the oracle suites.

    Each of the ``num_symbols`` symbols parameterizes at least one rotation
    when ``num_gates`` allows it.
    """
    symbols = tuple('t{}'.format(j) for j in range(num_symbols))
    kinds = [k for k in GATE_KINDS if num_qubits > 1 or GATE_KINDS[k][0] == 1]
    if noise:
        kinds.append(NOISE)
    pending = list(symbols)
    instructions = []
    for _ in range(num_gates):
        kind = ROTATIONS[rng.integers(3)] if pending else \
            kinds[rng.integers(len(kinds))]
        if kind == NOISE:
            channel = sorted(SHORT_NAMES)[rng.integers(len(SHORT_NAMES))]
            instructions.append(Instruction(
                NOISE, (int(rng.integers(num_qubits)),),
                (channel, float(rng.uniform(0, 0.3))),
            ))
            continue
        arity, takes_angle = GATE_KINDS[kind]
        targets = tuple(int(t) for t in
                        rng.choice(num_qubits, size=arity, replace=False))
        argument = None
        if takes_angle:
            if pending:
                argument = pending.pop(0)
            elif kind in ROTATIONS and symbols and rng.random() < 0.5:
                argument = symbols[rng.integers(len(symbols))]
            else:
                argument = float(rng.uniform(-np.pi, np.pi))
        instructions.append(Instruction(kind, targets, argument))
    return Circuit(num_qubits, tuple(instructions), symbols)
