#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Pure and mixed qubit states

States use little-endian qubit order: qubit ``k`` is bit ``k`` of the basis
index, so a single-qubit gate on qubit ``k`` touches amplitude pairs that are
``2**k`` apart. Gates are applied by reshaping the amplitude array around the
target bits; the full ``2**n x 2**n`` operator is never built.

Every operation has a batched form working on arrays with a leading batch
axis (``batch_*`` functions). The public single-state operations are thin
wrappers over them, and the circuit, gradient and model code use the batched
forms directly to simulate many shifted circuits in one pass.

Density matrices are handled as vectorised states over ``2n`` bits: column
bits occupy qubits ``0..n-1`` and row bits qubits ``n..2n-1``. ``U rho U^+``
is then ``U`` on the row bits followed by ``conj(U)`` on the column bits.
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from qvision.errors import (
    DimensionError, PostSelectionError, QubitIndexError,
    SimulatorCapacityError,
)

logger = logging.getLogger(__name__)

MAX_QUBITS = 20
MAX_DENSITY_QUBITS = 12
NORM_TOLERANCE = 1e-10
POSTSELECT_MIN_PROBABILITY = 1e-12
DTYPE = np.complex128

SQRT_HALF = 1 / np.sqrt(2)

I2 = np.eye(2, dtype=DTYPE)
X = np.array([[0, 1], [1, 0]], dtype=DTYPE)
Y = np.array([[0, -1j], [1j, 0]], dtype=DTYPE)
Z = np.array([[1, 0], [0, -1]], dtype=DTYPE)
H = np.array([[1, 1], [1, -1]], dtype=DTYPE) * SQRT_HALF
CX = np.array([
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 0, 1],
    [0, 0, 1, 0],
], dtype=DTYPE)
CZ = np.diag([1, 1, 1, -1]).astype(DTYPE)

PAULIS = {'I': I2, 'X': X, 'Y': Y, 'Z': Z}


def rx(theta):
    """RX(theta) = exp(-i theta X / 2); array input gives stacked matrices"""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=DTYPE)
    out[..., 0, 0] = c
    out[..., 0, 1] = -1j * s
    out[..., 1, 0] = -1j * s
    out[..., 1, 1] = c
    return out


def ry(theta):
    """RY(theta) = exp(-i theta Y / 2)"""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=DTYPE)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def rz(theta):
    """RZ(theta) = exp(-i theta Z / 2)"""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (2, 2), dtype=DTYPE)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def cphase(lam):
    """Controlled phase diag(1, 1, 1, exp(i lam)); symmetric in its qubits"""
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(lam.shape + (4, 4), dtype=DTYPE)
    out[..., 0, 0] = 1
    out[..., 1, 1] = 1
    out[..., 2, 2] = 1
    out[..., 3, 3] = np.exp(1j * lam)
    return out


def check_qubits(targets, num_qubits):
    """Validate qubit indices and return them as a tuple of ints.

    :raises QubitIndexError:
        On repeated or out-of-range indices
    """
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise QubitIndexError('repeated qubit index in {}'.format(targets))
    for t in targets:
        if not 0 <= t < num_qubits:
            raise QubitIndexError(
                'qubit {} out of range for {} qubits'.format(t, num_qubits)
            )
    return targets


def _check_capacity(num_qubits, limit=MAX_QUBITS):
    if not 1 <= num_qubits <= limit:
        raise SimulatorCapacityError(
            '{} qubits requested, simulator supports 1..{}'.format(
                num_qubits, limit
            )
        )


def _num_qubits_of(length):
    num_qubits = int(length).bit_length() - 1
    if num_qubits < 0 or 1 << num_qubits != length:
        raise DimensionError('length {} is not a power of two'.format(length))
    return num_qubits


# Batched kernels

def batch_zero_states(batch, num_qubits):
    amps = np.zeros((batch, 1 << num_qubits), dtype=DTYPE)
    amps[:, 0] = 1
    return amps


def batch_apply(amps, gate, targets, num_qubits):
    """Apply a gate to every row of ``amps``.

    ``amps`` has shape ``(batch, 2**num_qubits)``. ``gate`` is either one
    ``(d, d)`` matrix shared by the batch or a ``(batch, d, d)`` stack. Within
    the gate matrix ``targets[0]`` is the most significant bit, so
    ``CX`` on ``(control, target)`` has its usual textbook form.
    """
    batch = amps.shape[0]
    m = len(targets)
    if m == 1:
        view = amps.reshape(batch, -1, 2, 1 << targets[0])
        if gate.ndim == 2:
            out = np.einsum('ij,bhjl->bhil', gate, view)
        else:
            out = np.einsum('bij,bhjl->bhil', gate, view)
        return out.reshape(batch, -1)

    tensor = amps.reshape((batch,) + (2,) * num_qubits)
    axes = [num_qubits - t for t in targets]
    tail = list(range(num_qubits + 1 - m, num_qubits + 1))
    tensor = np.moveaxis(tensor, axes, tail)
    shape = tensor.shape
    flat = tensor.reshape(batch, -1, 1 << m)
    if gate.ndim == 2:
        flat = flat @ gate.T
    else:
        flat = np.einsum('brj,bij->bri', flat, gate)
    tensor = np.moveaxis(flat.reshape(shape), tail, axes)
    return tensor.reshape(batch, -1)


def basis_bits(num_qubits):
    """(2**n, n) table, entry [i, q] is bit q of basis index i"""
    index = np.arange(1 << num_qubits)
    return (index[:, None] >> np.arange(num_qubits)) & 1


def cz_diagonal(pairs, num_qubits):
    """Diagonal of a product of CZ gates over the given qubit pairs"""
    bits = basis_bits(num_qubits)
    parity = np.zeros(1 << num_qubits, dtype=int)
    for a, b in pairs:
        parity ^= bits[:, a] & bits[:, b]
    return (1 - 2 * parity).astype(DTYPE)


def batch_probabilities(amps):
    return np.abs(amps) ** 2


def batch_to_density(amps):
    return amps[:, :, None] * amps.conj()[:, None, :]


def batch_apply_dm(rho, gate, targets, num_qubits):
    """U rho U^+ for a stack of density matrices of shape (batch, 2**n, 2**n)"""
    batch = rho.shape[0]
    vec = rho.reshape(batch, -1)
    vec = batch_apply(vec, gate, [t + num_qubits for t in targets],
                      2 * num_qubits)
    vec = batch_apply(vec, gate.conj(), list(targets), 2 * num_qubits)
    return vec.reshape(rho.shape)


def batch_apply_superoperator(rho, superop, qubit, num_qubits):
    """Apply a single-qubit superoperator (sum K (x) K*) to ``qubit``"""
    batch = rho.shape[0]
    vec = batch_apply(rho.reshape(batch, -1), superop,
                      (qubit + num_qubits, qubit), 2 * num_qubits)
    return vec.reshape(rho.shape)


def batch_dm_probabilities(rho):
    return np.real(np.diagonal(rho, axis1=1, axis2=2)).copy()


def batch_z_expectations(probs, num_qubits):
    """<Z_q> for every qubit from basis probabilities, shape (batch, n)"""
    signs = 1 - 2 * basis_bits(num_qubits)
    return probs @ signs


def batch_postselect(probs, ancilla, outcome, num_qubits):
    """Condition basis probabilities on ``ancilla`` reading ``outcome``.

    :returns:
        ``(conditional, success)`` where ``conditional`` has one row of
        ``2**(n - len(ancilla))`` entries per batch row, ordered little-endian
        over the remaining qubits, and ``success`` holds P(ancilla = outcome)
    :raises PostSelectionError:
        When any success probability is below 1e-12
    """
    ancilla = check_qubits(ancilla, num_qubits)
    outcome = tuple(int(b) for b in outcome)
    if len(outcome) != len(ancilla) or any(b not in (0, 1) for b in outcome):
        raise DimensionError(
            'outcome {} does not match ancilla {}'.format(outcome, ancilla)
        )
    batch = probs.shape[0]
    tensor = probs.reshape((batch,) + (2,) * num_qubits)
    index = [slice(None)] * (num_qubits + 1)
    for qubit, bit in zip(ancilla, outcome):
        index[num_qubits - qubit] = bit
    selected = tensor[tuple(index)].reshape(batch, -1)
    success = selected.sum(axis=1)
    if np.any(success < POSTSELECT_MIN_PROBABILITY):
        raise PostSelectionError(
            'post-selection on {}={} is impossible (p={:.3g})'.format(
                ancilla, outcome, float(success.min())
            )
        )
    if np.any(success < 1e-6):
        logger.warning('post-selection success probability %.3g',
                       float(success.min()))
    return selected / success[:, None], success


# State types

class StateVector(object):
    """Pure state of ``num_qubits`` qubits"""

    def __init__(self, num_qubits, amplitudes):
        amplitudes = np.asarray(amplitudes, dtype=DTYPE).reshape(-1)
        if amplitudes.shape[0] != 1 << num_qubits:
            raise DimensionError('{} amplitudes for {} qubits'.format(
                amplitudes.shape[0], num_qubits
            ))
        self.num_qubits = int(num_qubits)
        self.amplitudes = amplitudes

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def copy(self):
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def __repr__(self):
        return '<StateVector qubits={} />'.format(self.num_qubits)


class DensityMatrix(object):
    """Mixed state of ``num_qubits`` qubits"""

    def __init__(self, num_qubits, matrix):
        dim = 1 << num_qubits
        matrix = np.asarray(matrix, dtype=DTYPE)
        if matrix.shape != (dim, dim):
            raise DimensionError('matrix shape {} for {} qubits'.format(
                matrix.shape, num_qubits
            ))
        self.num_qubits = int(num_qubits)
        self.matrix = matrix

    @property
    def trace(self):
        return float(np.real(np.trace(self.matrix)))

    def copy(self):
        return DensityMatrix(self.num_qubits, self.matrix.copy())

    def __repr__(self):
        return '<DensityMatrix qubits={} />'.format(self.num_qubits)


@dataclass(frozen=True)
class Observable:
    """Product of single-qubit Paulis, ``terms`` = ((pauli, qubit), ...)"""
    terms: Tuple[Tuple[str, int], ...]
    coefficient: float = 1.0

    def __post_init__(self):
        qubits = [q for _, q in self.terms]
        if len(set(qubits)) != len(qubits):
            raise QubitIndexError('repeated qubit in observable')
        for pauli, qubit in self.terms:
            if pauli not in PAULIS:
                raise ValueError('unknown Pauli {!r}'.format(pauli))
            if qubit < 0:
                raise QubitIndexError('negative qubit {}'.format(qubit))

    @staticmethod
    def pauli(label, *qubits, coefficient=1.0):
        """``Observable.pauli('ZZ', 0, 1)`` is Z0 Z1"""
        if len(label) != len(qubits):
            raise ValueError('{} Paulis for {} qubits'.format(
                len(label), len(qubits)
            ))
        return Observable(tuple(zip(label.upper(), qubits)), coefficient)

    @staticmethod
    def parse(text):
        """Parse ``"Z0 Z1"`` or ``"0.5 X2"`` style text"""
        coefficient = 1.0
        terms = []
        for token in text.split():
            if token[0].upper() in PAULIS and token[1:].isdigit():
                terms.append((token[0].upper(), int(token[1:])))
            else:
                try:
                    coefficient *= float(token)
                except ValueError:
                    raise ValueError(
                        'bad observable token {!r}'.format(token)
                    ) from None
        return Observable(tuple(terms), coefficient)

    @property
    def is_diagonal(self):
        return all(p in 'IZ' for p, _ in self.terms)

    @property
    def max_qubit(self):
        return max((q for _, q in self.terms), default=-1)

    def diagonal(self, num_qubits):
        bits = basis_bits(num_qubits)
        parity = np.zeros(1 << num_qubits, dtype=int)
        for pauli, qubit in self.terms:
            if pauli == 'Z':
                parity ^= bits[:, qubit]
        return self.coefficient * (1 - 2 * parity)

    def __str__(self):
        body = ' '.join('{}{}'.format(p, q) for p, q in self.terms) or 'I0'
        if self.coefficient != 1.0:
            return '{!r} {}'.format(self.coefficient, body)
        return body


Observables = Union[Observable, Sequence[Observable]]


def _as_observables(obs):
    if isinstance(obs, Observable):
        return (obs,)
    return tuple(obs)


def _check_observable(obs, num_qubits):
    for term in _as_observables(obs):
        if term.max_qubit >= num_qubits:
            raise QubitIndexError('observable {} exceeds {} qubits'.format(
                term, num_qubits
            ))


def batch_expectation(amps, obs, num_qubits):
    """Expectation of a (sum of) Pauli products for a batch of pure states"""
    total = np.zeros(amps.shape[0])
    for term in _as_observables(obs):
        if term.is_diagonal:
            total += batch_probabilities(amps) @ term.diagonal(num_qubits)
            continue
        out = amps
        for pauli, qubit in term.terms:
            out = batch_apply(out, PAULIS[pauli], (qubit,), num_qubits)
        value = np.einsum('bi,bi->b', amps.conj(), out)
        total += term.coefficient * np.real(value)
    return total


def batch_expectation_dm(rho, obs, num_qubits):
    """Tr(rho O) for a stack of density matrices"""
    total = np.zeros(rho.shape[0])
    for term in _as_observables(obs):
        if term.is_diagonal:
            total += batch_dm_probabilities(rho) @ term.diagonal(num_qubits)
            continue
        batch = rho.shape[0]
        vec = rho.reshape(batch, -1)
        for pauli, qubit in term.terms:
            vec = batch_apply(vec, PAULIS[pauli], (qubit + num_qubits,),
                              2 * num_qubits)
        product = vec.reshape(rho.shape)
        value = np.trace(product, axis1=1, axis2=2)
        total += term.coefficient * np.real(value)
    return total


# Single-state operations

def new_zero_state(num_qubits):
    """|0...0> on ``num_qubits`` qubits.

    :raises SimulatorCapacityError:
        Outside 1..20 qubits
    """
    _check_capacity(num_qubits)
    return StateVector(num_qubits, batch_zero_states(1, num_qubits)[0])


def _check_gate(gate, targets, num_qubits):
    targets = check_qubits(targets, num_qubits)
    gate = np.asarray(gate, dtype=DTYPE)
    dim = 1 << len(targets)
    if gate.shape != (dim, dim):
        raise DimensionError('gate of shape {} on {} targets'.format(
            gate.shape, len(targets)
        ))
    return gate, targets


def apply_gate(state, gate, targets):
    """Return ``gate`` applied to ``targets`` of ``state``"""
    gate, targets = _check_gate(gate, targets, state.num_qubits)
    amps = batch_apply(state.amplitudes[None, :], gate, targets,
                       state.num_qubits)
    return StateVector(state.num_qubits, amps[0])


def measure_probs(state):
    return batch_probabilities(state.amplitudes[None, :])[0]


def expectation(state, obs):
    """<psi|O|psi> or Tr(rho O); ``obs`` may be a sequence (summed)"""
    _check_observable(obs, state.num_qubits)
    if isinstance(state, DensityMatrix):
        return float(batch_expectation_dm(
            state.matrix[None], obs, state.num_qubits
        )[0])
    return float(batch_expectation(
        state.amplitudes[None, :], obs, state.num_qubits
    )[0])


def to_density(state):
    _check_capacity(state.num_qubits, MAX_DENSITY_QUBITS)
    return DensityMatrix(
        state.num_qubits, batch_to_density(state.amplitudes[None, :])[0]
    )


def apply_gate_dm(rho, gate, targets):
    gate, targets = _check_gate(gate, targets, rho.num_qubits)
    matrix = batch_apply_dm(rho.matrix[None], gate, targets, rho.num_qubits)
    return DensityMatrix(rho.num_qubits, matrix[0])


_LETTERS = 'abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ'


def partial_trace(rho, keep):
    """Reduced density matrix over ``keep``; kept qubit ``keep[i]`` becomes
    qubit ``i`` of the result.
    """
    keep = check_qubits(keep, rho.num_qubits)
    if not keep:
        raise QubitIndexError('partial trace needs at least one kept qubit')
    n = rho.num_qubits
    rows = list(_LETTERS[:n])
    cols = [rows[i] if (n - 1 - i) not in keep else _LETTERS[n + i]
            for i in range(n)]
    out_rows = ''.join(rows[n - 1 - q] for q in reversed(keep))
    out_cols = ''.join(cols[n - 1 - q] for q in reversed(keep))
    subscripts = '{}{}->{}{}'.format(''.join(rows), ''.join(cols),
                                     out_rows, out_cols)
    tensor = rho.matrix.reshape((2,) * (2 * n))
    dim = 1 << len(keep)
    return DensityMatrix(len(keep),
                         np.einsum(subscripts, tensor).reshape(dim, dim))


def postselect(probs, ancilla, outcome):
    """Condition a probability vector on an ancilla outcome.

    :returns:
        ``(conditional, success_probability)``
    """
    probs = np.asarray(probs, dtype=float)
    num_qubits = _num_qubits_of(probs.shape[0])
    if abs(probs.sum() - 1) > 1e-8:
        raise DimensionError('probabilities sum to {}'.format(probs.sum()))
    conditional, success = batch_postselect(
        probs[None, :], ancilla, outcome, num_qubits
    )
    return conditional[0], float(success[0])


_BELL = {
    'phi+': (0, 3, 1),
    'phi-': (0, 3, -1),
    'psi+': (1, 2, 1),
    'psi-': (1, 2, -1),
}


def bell_state(kind='phi+'):
    """One of the four maximally entangled two-qubit states"""
    try:
        first, second, sign = _BELL[kind]
    except KeyError:
        raise ValueError('unknown Bell state {!r}'.format(kind)) from None
    amps = np.zeros(4, dtype=DTYPE)
    amps[first] = SQRT_HALF
    amps[second] = sign * SQRT_HALF
    return StateVector(2, amps)


def plus_state():
    return StateVector(1, [SQRT_HALF, SQRT_HALF])


def minus_state():
    return StateVector(1, [SQRT_HALF, -SQRT_HALF])
