import unittest
import numpy as np
from hypothesis import given, settings, strategies as st

from kinflow._CustomClasses.SpectralBasis import SpectralBasis, SpectralCoefficients
from kinflow._CustomClasses.CylinderFunction import CylinderFunction
from kinflow._CustomClasses.CustomExceptions import ConfigError, PositivityViolation
from kinflow._HelperFunctions.spectral_flow_helpers import (dirichlet_basis, basis_from_config, flow, z_and_zprime,
                                                            generator_af, generator_jacobian, zprime_bound, h_norm,
                                                            is_nonnegative, flow_sensitivity, flow_tangent_residual,
                                                            decay_rate, trajectory, ground_state_distance,
                                                            density_values, cylinder_af)


class SpectralFlowTests(unittest.TestCase):

    def setUp(self):
        self.basis = dirichlet_basis("interval", 8, L=np.pi)
        raw = np.zeros(8)
        raw[:4] = [1.0, 0.2, 0.05, 0.01]
        self.c0 = SpectralCoefficients.normalized(raw, self.basis).c

    ############# BASIS #############

    def test_interval_eigenvalues_and_moments(self):
        np.testing.assert_allclose(self.basis.lambdas[:3], [-0.5, -2.0, -4.5], rtol=1e-14)
        self.assertAlmostEqual(self.basis.moments[0], 2.0 * np.sqrt(2.0 / np.pi), places=14)
        self.assertAlmostEqual(self.basis.moments[2], 2.0 * np.sqrt(2.0 / np.pi) / 3.0, places=14)
        self.assertEqual(self.basis.moments[1], 0.0)

    def test_eigenfunctions_are_orthonormal(self):
        np.testing.assert_allclose(self.basis.gram_matrix(), np.eye(8), rtol=0, atol=1e-12)

    def test_rectangle_modes_are_sorted(self):
        basis = dirichlet_basis("rectangle", 4, Lx=1.0, Ly=1.0)
        self.assertEqual(basis.modes[0], (1, 1))
        self.assertAlmostEqual(basis.lambdas[0], -np.pi ** 2, places=12)
        self.assertTrue(np.all(np.diff(basis.lambdas) <= 0.0))
        self.assertAlmostEqual(basis.moments[0], 8.0 / np.pi ** 2, places=12)

    def test_bad_bases_rejected(self):
        with self.assertRaises(ConfigError):
            SpectralBasis("disc", 4)
        with self.assertRaises(ConfigError):
            SpectralBasis("interval", 1)
        with self.assertRaises(ConfigError):
            basis_from_config({"domain": "interval", "L": -1.0})

    def test_normalized_coefficients(self):
        coeffs = SpectralCoefficients.normalized(np.arange(1.0, 9.0), self.basis)
        self.assertTrue(coeffs.probability)
        self.assertAlmostEqual(float(coeffs.c @ self.basis.moments), 1.0, places=14)
        with self.assertRaises(ConfigError):
            SpectralCoefficients.normalized(-np.ones(8), self.basis)

    ############# FLOW #############

    def test_ground_state_is_fixed(self):
        ground = self.basis.ground_state()
        np.testing.assert_allclose(flow(ground, 3.0, self.basis), ground, rtol=0, atol=1e-15)
        self.assertTrue(is_nonnegative(ground, self.basis))

    def test_zero_time_and_probability(self):
        np.testing.assert_allclose(flow(self.c0, 0.0, self.basis), self.c0, rtol=0, atol=1e-15)
        for t in (0.1, 1.0, 5.0):
            self.assertAlmostEqual(float(flow(self.c0, t, self.basis) @ self.basis.moments), 1.0, places=13)

    def test_semigroup_and_backward_laws(self):
        composed = flow(flow(self.c0, 0.7, self.basis), 1.3, self.basis)
        np.testing.assert_allclose(composed, flow(self.c0, 2.0, self.basis), rtol=0, atol=1e-12)
        later = flow(self.c0, 1.0, self.basis)
        np.testing.assert_allclose(flow(flow(later, -1.0, self.basis), 1.0, self.basis), later, rtol=0, atol=1e-12)

    def test_backward_flow_leaves_the_cone(self):
        with self.assertRaises(PositivityViolation):
            flow(self.c0, -5.0, self.basis)

    def test_flow_needs_a_probability(self):
        with self.assertRaises(ValueError):
            flow(2.0 * self.c0, 1.0, self.basis)

    def test_decay_rate_toward_ground_state(self):
        rate = decay_rate(self.c0, 2.5, 5.0, self.basis)
        self.assertAlmostEqual(rate / -1.5, 1.0, delta=0.05)
        self.assertLess(ground_state_distance(flow(self.c0, 5.0, self.basis)), ground_state_distance(self.c0))

    def test_trajectory_rows(self):
        rows = trajectory(self.c0, [0.0, 1.0], self.basis)
        self.assertEqual(len(rows), 2)
        self.assertEqual(set(rows[0]), {"t", "z", "zprime"} | {f"c_{j}" for j in range(1, 9)})
        self.assertAlmostEqual(rows[0]["z"], 1.0, places=14)

    ############# GENERATOR #############

    def test_generator_is_mass_neutral(self):
        self.assertLess(abs(float(generator_af(self.c0, self.basis) @ self.basis.moments)), 1e-13)

    def test_density_values_on_the_grid(self):
        values = density_values(self.c0, self.basis)
        grid = self.basis.evaluation_grid()
        np.testing.assert_allclose(values, self.c0 @ self.basis.evaluate(grid), rtol=1e-14, atol=1e-14)
        # midpoint rule
        self.assertAlmostEqual(float(np.mean(values)) * np.pi, 1.0, delta=1e-3)

    def test_cylinder_generator_is_the_time_derivative(self):
        eps = 1e-6
        functions = [
            CylinderFunction.sine_product([0, 1], [2.0, 3.0]),
            CylinderFunction.sine_product([1], [3.0]).weighted([0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                                                               np.cos, lambda s: -np.sin(s)),
        ]
        for f in functions:
            fd = (f.value(flow(self.c0, eps, self.basis)) - f.value(flow(self.c0, -eps, self.basis))) / (2.0 * eps)
            self.assertAlmostEqual(float(cylinder_af(f, self.c0, self.basis)), float(fd), delta=1e-7)

    def test_generator_jacobian_matches_differences(self):
        eps = 1e-6
        jac = generator_jacobian(self.c0, self.basis)
        for k in range(8):
            step = np.zeros(8)
            step[k] = eps
            fd = (generator_af(self.c0 + step, self.basis) - generator_af(self.c0 - step, self.basis)) / (2.0 * eps)
            np.testing.assert_allclose(jac[:, k], fd, rtol=0, atol=1e-7)

    def test_zprime_and_its_bound(self):
        z, zprime = z_and_zprime(self.c0, 0.0, self.basis)
        self.assertAlmostEqual(z, 1.0, places=14)
        self.assertLessEqual(abs(zprime), zprime_bound(self.c0, self.basis))

    def test_h_norm_domain(self):
        self.assertGreater(h_norm(self.c0, 0.5, self.basis), 0.0)
        with self.assertRaises(ValueError):
            h_norm(self.c0, 1.5, self.basis)

    def test_h_norm_closed_form_and_growth(self):
        lambdas = -0.5 * np.arange(1, 9) ** 2
        self.assertAlmostEqual(h_norm(self.c0, 0.0, self.basis), float(np.sqrt(np.sum(lambdas ** 2 * self.c0 ** 2))),
                               places=13)
        values = [h_norm(self.c0, t, self.basis) for t in np.linspace(0.0, 1.0, 11)]
        self.assertTrue(np.all(np.diff(values) > 0.0))

    def test_flow_tangent_law(self):
        self.assertLess(flow_tangent_residual(self.c0, 1.0, self.basis), 1e-6)

    def test_flow_sensitivity_matches_differences(self):
        rng = np.random.default_rng(2)
        e = self.basis.moments
        direction = rng.normal(size=8)
        direction -= (direction @ e) / (e @ e) * e
        g = rng.normal(size=8)
        eps = 1e-6
        fd = (flow(self.c0 + eps * direction, 0.5, self.basis) - flow(self.c0 - eps * direction, 0.5, self.basis)) @ g / (2.0 * eps)
        self.assertAlmostEqual(float(fd), float(direction @ flow_sensitivity(self.c0, 0.5, g, self.basis)), delta=1e-7)

    @given(weights=st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=3, max_size=3),
           t=st.floats(min_value=0.0, max_value=3.0))
    @settings(max_examples=40, deadline=None)
    def test_forward_flow_keeps_probabilities(self, weights, t):
        raw = np.zeros(8)
        raw[0] = 1.0
        raw[1:4] = 0.05 * np.asarray(weights)
        c = SpectralCoefficients.normalized(raw, self.basis).c
        out = flow(c, t, self.basis)
        self.assertAlmostEqual(float(out @ self.basis.moments), 1.0, places=12)
        self.assertAlmostEqual(float(generator_af(out, self.basis) @ self.basis.moments), 0.0, places=12)


if __name__ == '__main__':
    unittest.main()
