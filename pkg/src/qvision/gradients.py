#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Parameter-shift gradients, a finite-difference oracle and optimizers
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from qvision.circuit import ROTATIONS, random_circuit, simulate_expectations
from qvision.errors import (
    DimensionError, NumericError, UnsupportedGeneratorError,
)
from qvision.qstate import Observable

logger = logging.getLogger(__name__)

SHIFT = np.pi / 2

SGD = 'sgd'
SGD_MOMENTUM = 'sgd_momentum'
ADAPTIVE = 'adaptive'
OPTIMIZERS = (SGD, SGD_MOMENTUM, ADAPTIVE)


@dataclass
class ParamVector:
    values: np.ndarray
    names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float).reshape(-1)
        if self.names is not None:
            self.names = tuple(self.names)
            if len(self.names) != self.values.shape[0]:
                raise DimensionError('{} names for {} values'.format(
                    len(self.names), self.values.shape[0]
                ))

    def __len__(self):
        return self.values.shape[0]

    def copy(self):
        return ParamVector(self.values.copy(), self.names)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.values)))

    def as_dict(self):
        names = self.names or tuple('p{}'.format(i) for i in range(len(self)))
        return dict(zip(names, self.values.tolist()))


def shift_table(angles):
    """Stack base and +-pi/2 shifted copies of every row of ``angles``.

    ``angles`` has shape ``(batch, P)``. The result has shape
    ``(batch * (2P + 1), P)``: per input row, the unshifted row followed by
    the ``+`` and ``-`` shift of each column in turn.
    """
    angles = np.atleast_2d(angles)
    batch, count = angles.shape
    shifts = np.zeros((2 * count + 1, count))
    shifts[1::2] = np.eye(count) * SHIFT
    shifts[2::2] = -np.eye(count) * SHIFT
    return (angles[:, None, :] + shifts[None]).reshape(-1, count)


def shift_combine(outputs, count):
    """Split outputs evaluated on a ``shift_table`` into values and jacobian.

    :returns:
        ``(base, jacobian)`` with shapes ``(batch, ...)`` and
        ``(batch, count, ...)``; ``jacobian[b, k]`` is d output / d angle k
    """
    outputs = np.asarray(outputs)
    grouped = outputs.reshape((-1, 2 * count + 1) + outputs.shape[1:])
    base = grouped[:, 0]
    jacobian = (grouped[:, 1::2] - grouped[:, 2::2]) / 2
    return base, jacobian


def _values_of(theta):
    return theta.values if isinstance(theta, ParamVector) else \
        np.asarray(theta, dtype=float).reshape(-1)


def _evaluate(c, table, obs, nm, workers):
    if workers <= 1 or table.shape[0] < 2 * workers:
        return simulate_expectations(c, table, obs, nm)
    chunks = np.array_split(table, workers)
    with ThreadPoolExecutor(max_workers=workers,
                            thread_name_prefix='qvision') as pool:
        parts = list(pool.map(
            lambda rows: simulate_expectations(c, rows, obs, nm), chunks
        ))
    return np.concatenate(parts)


def shift_rule_gradient(c, theta, obs, nm=None, workers=1):
    """d<obs>/d theta by the parameter-shift rule.

    Each occurrence of a symbol is shifted on its own and the contributions
    summed, so a symbol may parameterize several rotations.

    :raises UnsupportedGeneratorError:
        If a symbol parameterizes anything but rx/ry/rz
    """
    values = _values_of(theta)
    for ins in c.instructions:
        if ins.symbol is not None and ins.kind not in ROTATIONS:
            raise UnsupportedGeneratorError(
                'symbol {!r} drives {}, only rx/ry/rz have a shift rule'.format(
                    ins.symbol, ins.kind
                )
            )
    base = c.angle_table(values[None, :])
    occurrences = [i for i, ins in enumerate(c.instructions)
                   if ins.symbol is not None]
    grad = np.zeros(len(c.symbols))
    if not occurrences:
        return grad
    shifted = shift_table(base[:, occurrences])
    table = np.repeat(base, shifted.shape[0], axis=0)
    table[:, occurrences] = shifted
    _, jacobian = shift_combine(_evaluate(c, table, obs, nm, workers),
                                len(occurrences))
    index = {s: j for j, s in enumerate(c.symbols)}
    np.add.at(grad, [index[c.instructions[i].symbol] for i in occurrences],
              jacobian[0])
    return grad


def finite_diff_gradient(c, theta, obs, nm=None, h=1e-4):
    """Central differences (E(theta_j + h) - E(theta_j - h)) / 2h"""
    if h <= 0:
        raise ValueError('step h must be positive')
    values = _values_of(theta)
    count = len(c.symbols)
    if count == 0:
        return np.zeros(0)
    offsets = np.concatenate([np.eye(count) * h, -np.eye(count) * h])
    energies = simulate_expectations(
        c, c.angle_table(values[None, :] + offsets), obs, nm
    )
    return (energies[:count] - energies[count:]) / (2 * h)


def glorot_uniform(rng, fan_in, fan_out):
    """Dense-layer weights from U(-l, l), l = sqrt(6 / (fan_in + fan_out))"""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class OptimizerState:
    kind: str = SGD
    learning_rate: float = 0.01
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    first: Optional[np.ndarray] = None
    second: Optional[np.ndarray] = None
    step_count: int = 0

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise ValueError('unknown optimizer {!r}'.format(self.kind))
        if not self.learning_rate > 0:
            raise ValueError('learning rate must be positive')


def optimizer_step(state, theta, grad):
    """One update of ``theta`` along ``-grad``; ``state`` is advanced in place.

    :raises NumericError:
        On a length mismatch or a non-finite gradient or result
    """
    grad = np.asarray(grad, dtype=float).reshape(-1)
    if grad.shape[0] != len(theta):
        raise NumericError('gradient of length {} for {} parameters'.format(
            grad.shape[0], len(theta)
        ))
    if not np.all(np.isfinite(grad)):
        raise NumericError('non-finite gradient')

    lr = state.learning_rate
    if state.kind == SGD:
        step = lr * grad
    elif state.kind == SGD_MOMENTUM:
        if state.first is None:
            state.first = np.zeros_like(grad)
        state.first = state.momentum * state.first + grad
        step = lr * state.first
    else:
        if state.first is None:
            state.first = np.zeros_like(grad)
            state.second = np.zeros_like(grad)
        t = state.step_count + 1
        state.first = state.beta1 * state.first + (1 - state.beta1) * grad
        state.second = state.beta2 * state.second + \
            (1 - state.beta2) * grad ** 2
        first = state.first / (1 - state.beta1 ** t)
        second = state.second / (1 - state.beta2 ** t)
        step = lr * first / (np.sqrt(second) + state.epsilon)

    state.step_count += 1
    updated = ParamVector(theta.values - step, theta.names)
    if not updated.is_finite():
        raise NumericError('optimizer produced non-finite parameters')
    return updated


@dataclass
class OracleReport:
    trials: int = 0
    ideal_deviation: float = 0.0
    noisy_deviation: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures


def run_oracle_suite(rng, trials=50, tolerance=1e-5, h=1e-4, workers=1):
    """Compare shift-rule and finite-difference gradients on random circuits.

    Circuits have up to 3 qubits and 12 parameters with angles drawn from
    [-pi, pi]; each is checked on the ideal backend and with inline noise.
    """
    report = OracleReport()
    for trial in range(trials):
        num_qubits = int(rng.integers(1, 4))
        num_symbols = int(rng.integers(1, 13))
        num_gates = num_symbols + int(rng.integers(0, 10))
        obs = Observable.pauli('Z' * num_qubits, *range(num_qubits))
        for noisy in (False, True):
            c = random_circuit(rng, num_qubits, num_gates, num_symbols,
                               noise=noisy)
            theta = rng.uniform(-np.pi, np.pi, size=num_symbols)
            shift = shift_rule_gradient(c, theta, obs, workers=workers)
            oracle = finite_diff_gradient(c, theta, obs, h=h)
            deviation = float(np.max(np.abs(shift - oracle)))
            if noisy:
                report.noisy_deviation = max(report.noisy_deviation,
                                             deviation)
            else:
                report.ideal_deviation = max(report.ideal_deviation,
                                             deviation)
            if deviation >= tolerance:
                report.failures.append((trial, noisy, deviation))
                logger.warning('trial %d (noisy=%s): deviation %.3g',
                               trial, noisy, deviation)
        report.trials += 1
    return report
