"""Tests for parameter-shift gradients and the optimizers"""
import unittest

import numpy as np
from numpy.testing import assert_allclose

from qvision.channels import NoiseModel
from qvision.circuit import Circuit, Instruction, parse_circuit
from qvision.errors import NumericError, UnsupportedGeneratorError
from qvision.gradients import (
    OptimizerState, ParamVector, finite_diff_gradient, glorot_uniform,
    optimizer_step, run_oracle_suite, shift_combine, shift_rule_gradient,
    shift_table,
)
from qvision.qstate import Observable

Z0 = Observable.pauli('Z', 0)


class TestShiftRule(unittest.TestCase):
    def test_single_rotation(self):
        c = parse_circuit('qubits 1\nparams t\nry 0 t\n')
        for theta in (-2.0, 0.3, 1.4):
            grad = shift_rule_gradient(c, [theta], Z0)
            assert_allclose(grad, [-np.sin(theta)], atol=1e-12)

    def test_shared_symbol(self):
        c = parse_circuit('qubits 1\nparams t\nry 0 t\nry 0 t\n')
        grad = shift_rule_gradient(c, [0.4], Z0)
        assert_allclose(grad, [-2 * np.sin(0.8)], atol=1e-12)

    def test_noise_model(self):
        c = parse_circuit('qubits 1\nparams t\nrx 0 t\n')
        nm = NoiseModel.single('depolarizing', 0.1)
        grad = shift_rule_gradient(c, [0.9], Z0, nm)
        assert_allclose(grad, [-0.9 * np.sin(0.9)], atol=1e-12)

    def test_matches_finite_differences(self):
        c = parse_circuit(
            'qubits 2\nparams a b c\nh 0\nrx 0 a\ncx 0 1\nry 1 b\n'
            'noise damp 1 0.1\nrz 0 c\nry 0 a\ncz 0 1\nh 1\n'
        )
        obs = [Observable.pauli('ZZ', 0, 1), Observable.pauli('X', 1)]
        theta = ParamVector([0.3, -1.2, 2.0], ('a', 'b', 'c'))
        assert_allclose(shift_rule_gradient(c, theta, obs),
                        finite_diff_gradient(c, theta, obs), atol=1e-7)

    def test_workers_agree(self):
        c = parse_circuit('qubits 2\nparams a b\nry 0 a\ncx 0 1\nrx 1 b\n')
        obs = Observable.pauli('ZZ', 0, 1)
        assert_allclose(shift_rule_gradient(c, [0.1, 0.2], obs, workers=3),
                        shift_rule_gradient(c, [0.1, 0.2], obs))

    def test_unsupported_generator(self):
        c = Circuit.from_instructions(2, [Instruction('cp', (0, 1), 'phi')])
        with self.assertRaises(UnsupportedGeneratorError):
            shift_rule_gradient(c, [0.1], Z0)

    def test_no_symbols(self):
        c = parse_circuit('qubits 1\nh 0\n')
        self.assertEqual(shift_rule_gradient(c, [], Z0).shape, (0,))

    def test_shift_table(self):
        table = shift_table(np.array([[1.0, 2.0], [3.0, 4.0]]))
        self.assertEqual(table.shape, (10, 2))
        assert_allclose(table[0], [1, 2])
        assert_allclose(table[1], [1 + np.pi / 2, 2])
        assert_allclose(table[4], [1, 2 - np.pi / 2])
        base, jac = shift_combine(np.sin(table[:, 0]), 2)
        assert_allclose(base, [np.sin(1), np.sin(3)])
        assert_allclose(jac[:, 0], [np.cos(1), np.cos(3)], atol=1e-12)
        assert_allclose(jac[:, 1], 0, atol=1e-12)

    def test_linear_in_observable(self):
        c = parse_circuit('qubits 2\nparams a b\nry 0 a\ncx 0 1\nrx 1 b\n'
                          'ry 1 a\n')
        theta = [0.7, -1.1]
        z0, z1 = Observable.pauli('Z', 0), Observable.pauli('Z', 1)
        for a, b in ((1.0, 0.0), (0.5, -2.0), (-3.0, 0.25)):
            combined = [Observable.pauli('Z', 0, coefficient=a),
                        Observable.pauli('Z', 1, coefficient=b)]
            assert_allclose(shift_rule_gradient(c, theta, combined),
                            a * shift_rule_gradient(c, theta, z0)
                            + b * shift_rule_gradient(c, theta, z1),
                            atol=1e-12)

    def test_oracle_suite(self):
        report = run_oracle_suite(np.random.default_rng(3), trials=50)
        self.assertTrue(report.passed, report.failures)
        self.assertEqual(report.trials, 50)
        self.assertLess(report.ideal_deviation, 1e-5)
        self.assertLess(report.noisy_deviation, 1e-5)


class TestOptimizers(unittest.TestCase):
    def test_sgd(self):
        state = OptimizerState('sgd', 0.1)
        theta = optimizer_step(state, ParamVector([1.0, 2.0]), [1.0, -2.0])
        assert_allclose(theta.values, [0.9, 2.2])
        self.assertEqual(state.step_count, 1)

    def test_momentum(self):
        state = OptimizerState('sgd_momentum', 0.1, momentum=0.5)
        theta = optimizer_step(state, ParamVector([0.0]), [1.0])
        theta = optimizer_step(state, theta, [1.0])
        # velocities 1 then 1.5
        assert_allclose(theta.values, [-0.25])

    def test_adaptive_first_step(self):
        state = OptimizerState('adaptive', 0.01)
        theta = optimizer_step(state, ParamVector([0.0, 0.0]), [3.0, -0.5])
        assert_allclose(theta.values, [-0.01, 0.01], rtol=1e-6)

    def test_names_survive(self):
        state = OptimizerState('sgd', 0.1)
        theta = optimizer_step(state, ParamVector([1.0], ('w',)), [0.0])
        self.assertEqual(theta.names, ('w',))
        self.assertEqual(theta.as_dict(), {'w': 1.0})

    def test_rejects_bad_gradients(self):
        state = OptimizerState('sgd', 0.1)
        with self.assertRaises(NumericError):
            optimizer_step(state, ParamVector([1.0]), [np.nan])
        with self.assertRaises(NumericError):
            optimizer_step(state, ParamVector([1.0]), [1.0, 2.0])

    def test_trajectory_is_reproducible(self):
        c = parse_circuit('qubits 2\nparams a b\nry 0 a\ncx 0 1\nrx 1 b\n')
        obs = Observable.pauli('ZZ', 0, 1)

        def trajectory():
            state = OptimizerState('adaptive', 0.05)
            theta = ParamVector(np.random.default_rng(8).uniform(-1, 1, 2))
            path = []
            for _ in range(30):
                grad = shift_rule_gradient(c, theta, obs)
                theta = optimizer_step(state, theta, grad)
                path.append(theta.values.tobytes())
            return path

        self.assertEqual(trajectory(), trajectory())

    def test_bad_settings(self):
        with self.assertRaises(ValueError):
            OptimizerState('lbfgs', 0.1)
        with self.assertRaises(ValueError):
            OptimizerState('sgd', 0.0)

    def test_glorot_uniform(self):
        weights = glorot_uniform(np.random.default_rng(0), 10, 6)
        self.assertEqual(weights.shape, (10, 6))
        self.assertLessEqual(np.abs(weights).max(), np.sqrt(6 / 16))
        again = glorot_uniform(np.random.default_rng(0), 10, 6)
        self.assertEqual(weights.tobytes(), again.tobytes())


if __name__ == "__main__":
    unittest.main()
