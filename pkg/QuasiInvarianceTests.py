import unittest
import numpy as np
from scipy import integrate
from hypothesis import given, settings, strategies as st

from kinflow._CustomClasses.EnsembleSpec import EnsembleSpec
from kinflow._CustomClasses.CylinderFunction import CylinderFunction, CylinderSum
from kinflow._CustomClasses.CustomExceptions import ConfigError, SupportExit
from kinflow._HelperFunctions.spectral_flow_helpers import dirichlet_basis
from kinflow._HelperFunctions.parallel_helpers import chunk_sizes
from kinflow._HelperFunctions.quasi_invariance_helpers import (build_chart, build_ensemble, drift_in_chart,
                                                               divergence_delta, chart_flow_exact, rn_jacobian,
                                                               rn_formula, rn_jacobian_batch, rn_formula_batch,
                                                               sample_ensemble, sample_orbit_interior, ibp_statistics,
                                                               ibp_check, divergence_identity_check, generator_b_check,
                                                               adjoint_semigroup_check)

WIDTHS = [0.02, 1e-3, 2e-5]
N_SIGMA = 3.0


class QuasiInvarianceTests(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.basis = dirichlet_basis("interval", 4, L=np.pi)
        cls.chart = build_chart(cls.basis)
        cls.ensemble = build_ensemble(cls.chart, cls.basis, WIDTHS, seed=1)
        cls.widths = cls.ensemble.widths

    ############# CHART #############

    def test_chart_is_an_orthonormal_slice(self):
        N = self.chart.tangent
        np.testing.assert_allclose(N.T @ N, np.eye(3), rtol=0, atol=1e-14)
        np.testing.assert_allclose(self.basis.moments @ N, np.zeros(3), rtol=0, atol=1e-14)
        u = np.array([0.01, -5e-4, 1e-5])
        np.testing.assert_allclose(self.chart.to_chart(self.chart.to_coeffs(u)), u, rtol=0, atol=1e-15)
        self.assertAlmostEqual(float(self.chart.to_coeffs(u) @ self.basis.moments), 1.0, places=14)

    ############# ENSEMBLE #############

    def test_ensemble_rejects_bad_widths(self):
        with self.assertRaises(ConfigError):
            EnsembleSpec([0.1, 0.0])
        with self.assertRaises(ConfigError):
            build_ensemble(self.chart, self.basis, [0.1, 0.1])

    def test_bump_density_is_normalized(self):
        ensemble = EnsembleSpec([0.5])
        total, _ = integrate.quad(lambda x: float(ensemble.density(np.array([x]))), -0.5, 0.5)
        self.assertAlmostEqual(total, 1.0, places=8)

    def test_density_vanishes_outside(self):
        outside = np.array([2.0 * self.widths[0], 0.0, 0.0])
        self.assertEqual(float(self.ensemble.density(outside)), 0.0)
        self.assertFalse(bool(self.ensemble.inside(outside)))

    def test_grad_log_density_matches_differences(self):
        u = 0.4 * self.widths * np.array([1.0, -1.0, 0.5])
        grad = self.ensemble.grad_log_density(u)
        for j in range(3):
            step = np.zeros(3)
            step[j] = 1e-6 * self.widths[j]
            fd = (self.ensemble.log_density(u + step) - self.ensemble.log_density(u - step)) / (2.0 * step[j])
            self.assertAlmostEqual(float(fd) / grad[j], 1.0, delta=1e-6)

    ############# DRIFT AND DIVERGENCE #############

    def test_drift_at_the_ground_state(self):
        B, DB = drift_in_chart(np.zeros(3), self.chart, self.basis, self.ensemble)
        np.testing.assert_allclose(B, np.zeros(3), rtol=0, atol=1e-14)
        # sum over the excited modes of lam_i - lam_1
        self.assertAlmostEqual(float(np.trace(DB)), -13.0, places=12)
        self.assertAlmostEqual(divergence_delta(np.zeros(3), self.chart, self.ensemble, self.basis), -13.0, places=12)

    def test_drift_jacobian_matches_differences(self):
        u = 0.3 * self.widths
        _, DB = drift_in_chart(u, self.chart, self.basis)
        for j in range(3):
            step = np.zeros(3)
            step[j] = 0.25 * self.widths[j]
            fd = (drift_in_chart(u + step, self.chart, self.basis)[0]
                  - drift_in_chart(u - step, self.chart, self.basis)[0]) / (2.0 * step[j])
            np.testing.assert_allclose(DB[:, j], fd, rtol=1e-6, atol=1e-10)

    def test_drift_outside_the_support(self):
        with self.assertRaises(SupportExit):
            drift_in_chart(2.0 * self.widths, self.chart, self.basis, self.ensemble)

    def test_divergence_with_a_supplied_drift(self):
        U = 0.5 * self.widths * np.array([[1.0, 0.2, -0.3], [-0.4, 0.9, 0.1]])
        batch = divergence_delta(U, self.chart, self.ensemble, self.basis)
        pointwise = divergence_delta(U, self.chart, self.ensemble, self.basis,
                                     drift=lambda u: drift_in_chart(u, self.chart, self.basis))
        np.testing.assert_allclose(pointwise, batch, rtol=1e-10, atol=1e-10)

    def test_divergence_of_a_linear_drift(self):
        rng = np.random.default_rng(12)
        M = rng.normal(size=(3, 3))
        U = 0.6 * self.widths * rng.uniform(-1.0, 1.0, size=(5, 3))
        delta = divergence_delta(U, self.chart, self.ensemble, self.basis, drift=lambda u: (M @ u, M))
        s = U / self.widths
        grad_log_rho = -2.0 * U / (self.widths ** 2 * (1.0 - s ** 2) ** 2)
        expected = np.trace(M) + np.sum((U @ M.T) * grad_log_rho, axis=1)
        np.testing.assert_allclose(delta, expected, rtol=1e-12, atol=1e-12)

    def test_divergence_of_a_zero_drift(self):
        U = 0.5 * self.widths * np.array([[1.0, -0.5, 0.2], [-0.3, 0.8, -0.9]])
        delta = divergence_delta(U, self.chart, self.ensemble, self.basis,
                                 drift=lambda u: (np.zeros(3), np.zeros((3, 3))))
        np.testing.assert_array_equal(delta, np.zeros(2))

    def test_linear_drift_integrates_by_parts(self):
        # one-dimensional slice: int f' B rho = -int f delta rho for B(u) = m u
        basis = dirichlet_basis("interval", 2, L=np.pi)
        chart = build_chart(basis)
        ensemble = EnsembleSpec([0.5])
        m = -1.7

        def drift(u):
            return m * u, np.array([[m]])

        def f(x):
            return np.cos(3.0 * x) + x ** 2

        def df(x):
            return -3.0 * np.sin(3.0 * x) + 2.0 * x

        lhs, _ = integrate.quad(lambda x: df(x) * m * x * float(ensemble.density(np.array([x]))), -0.5, 0.5,
                                epsabs=1e-13, epsrel=1e-11, limit=200)
        rhs, _ = integrate.quad(lambda x: -f(x) * divergence_delta(np.array([x]), chart, ensemble, basis, drift=drift)
                                * float(ensemble.density(np.array([x]))), -0.5, 0.5,
                                epsabs=1e-13, epsrel=1e-11, limit=200)
        self.assertGreater(abs(lhs), 1e-3)
        self.assertAlmostEqual(lhs, rhs, delta=1e-8)

    def test_chart_flow_fixes_the_ground_state(self):
        np.testing.assert_allclose(chart_flow_exact(np.zeros(3), 2.0, self.chart, self.basis), np.zeros(3),
                                   rtol=0, atol=1e-15)
        u = 0.5 * self.widths
        np.testing.assert_allclose(chart_flow_exact(u, 0.0, self.chart, self.basis), u, rtol=0, atol=1e-15)

    ############# RADON-NIKODYM DENSITY #############

    def test_density_at_time_zero(self):
        self.assertEqual(rn_jacobian(0.2 * self.widths, 0.0, self.chart, self.ensemble, self.basis), 1.0)
        self.assertEqual(rn_formula(0.2 * self.widths, 0.0, self.chart, self.ensemble, self.basis), 1.0)

    def test_jacobian_and_formula_agree(self):
        for x in (0.2 * self.widths, 0.1 * self.widths * np.array([-1.0, 1.0, -1.0])):
            by_jacobian = rn_jacobian(x, 0.05, self.chart, self.ensemble, self.basis)
            by_formula = rn_formula(x, 0.05, self.chart, self.ensemble, self.basis)
            self.assertGreater(by_jacobian, 0.0)
            self.assertAlmostEqual(by_formula / by_jacobian, 1.0, delta=1e-5)

    def test_jacobian_and_formula_agree_over_time(self):
        X = sample_orbit_interior(self.ensemble, self.chart, self.basis, 6, 0.5, seed=13)
        for t in (0.05, 0.2, 0.35, 0.5):
            by_jacobian = rn_jacobian_batch(X, t, self.chart, self.ensemble, self.basis)
            by_formula = rn_formula_batch(X, t, self.chart, self.ensemble, self.basis)
            self.assertTrue(np.all(by_jacobian > 0.0))
            np.testing.assert_allclose(by_formula, by_jacobian, rtol=1e-5, atol=0, err_msg=f"t={t}")

    def test_composition_law(self):
        t = 0.4
        X = sample_orbit_interior(self.ensemble, self.chart, self.basis, 5, t, seed=14)
        whole = rn_formula_batch(X, t, self.chart, self.ensemble, self.basis)
        first = rn_formula_batch(X, 0.5 * t, self.chart, self.ensemble, self.basis)
        moved = chart_flow_exact(X, -0.5 * t, self.chart, self.basis)
        second = rn_formula_batch(moved, 0.5 * t, self.chart, self.ensemble, self.basis)
        np.testing.assert_allclose(first * second, whole, rtol=1e-7, atol=0)

    def test_halving_the_ode_tolerance(self):
        X = sample_orbit_interior(self.ensemble, self.chart, self.basis, 4, 0.3, seed=15)
        for batch in (rn_formula_batch, rn_jacobian_batch):
            loose = batch(X, 0.3, self.chart, self.ensemble, self.basis, ode_tol=1e-10)
            tight = batch(X, 0.3, self.chart, self.ensemble, self.basis, ode_tol=5e-11)
            np.testing.assert_allclose(tight, loose, rtol=1e-8, atol=0)

    def test_orbit_exit(self):
        x = 0.95 * self.widths
        with self.assertRaises(SupportExit):
            rn_jacobian(x, 0.5, self.chart, self.ensemble, self.basis)
        values = rn_jacobian_batch(x, 0.5, self.chart, self.ensemble, self.basis, allow_exit=True)
        self.assertEqual(float(values[0]), 0.0)

    ############# SAMPLING #############

    def test_chunk_sizes(self):
        self.assertEqual(chunk_sizes(25, 10), [10, 10, 5])
        with self.assertRaises(ValueError):
            chunk_sizes(10, 0)

    def test_samples_do_not_depend_on_threads(self):
        one = sample_ensemble(self.ensemble, 5000, seed=3, threads=1, chunk_size=1000)
        two = sample_ensemble(self.ensemble, 5000, seed=3, threads=2, chunk_size=1000)
        np.testing.assert_array_equal(one, two)
        self.assertEqual(one.shape, (5000, 3))
        self.assertTrue(np.all(self.ensemble.inside(one)))

    def test_samples_are_centred(self):
        U = sample_ensemble(self.ensemble, 20000, seed=4)
        stderr = np.std(U, axis=0, ddof=1) / np.sqrt(len(U))
        self.assertTrue(np.all(np.abs(np.mean(U, axis=0)) <= N_SIGMA * stderr))

    def test_orbit_interior_samples(self):
        X = sample_orbit_interior(self.ensemble, self.chart, self.basis, 20, 0.2, seed=5)
        self.assertEqual(X.shape, (20, 3))
        for s in (0.0, 0.1, 0.2):
            self.assertTrue(np.all(self.ensemble.inside(chart_flow_exact(X, -s, self.chart, self.basis), 0.8)))

    ############# MONTE CARLO IDENTITIES #############

    def assertWithinError(self, stats):
        self.assertLessEqual(abs(stats["lhs"] - stats["rhs"]), N_SIGMA * stats["stderr"])

    def test_divergence_identity(self):
        stats = divergence_identity_check(CylinderFunction.coordinate(1), self.ensemble, self.chart, self.basis,
                                          N=20000, seed=6)
        self.assertWithinError(stats)
        self.assertEqual(stats["n_samples"], 20000)

    def test_ibp_constant_pair(self):
        one = CylinderFunction.constant(1.0)
        stats = ibp_statistics(one, one, self.ensemble, self.chart, self.basis, N=20000, seed=7)
        self.assertEqual(stats["lhs"], 0.0)
        self.assertWithinError(stats)

    def test_ibp_is_symmetric(self):
        f, g = CylinderFunction.coordinate(1), CylinderFunction.sine_product([0, 2], [2.0, 50.0])
        forward = ibp_check(f, g, self.ensemble, self.chart, self.basis, N=20000, seed=8)
        swapped = ibp_check(g, f, self.ensemble, self.chart, self.basis, N=20000, seed=8)
        self.assertEqual(len(forward), 3)
        np.testing.assert_allclose(forward, swapped, rtol=1e-12, atol=1e-15)
        self.assertLessEqual(abs(forward[0] - forward[1]), N_SIGMA * forward[2])

    def test_generator_derivative_at_zero(self):
        result = generator_b_check(CylinderFunction.coordinate(1), self.ensemble, self.chart, self.basis,
                                   N=20000, seed=9)
        self.assertEqual([row["t"] for row in result["rows"]], [0.01, 0.02, 0.04])
        self.assertLessEqual(abs(result["extrapolated"] - result["target"]), N_SIGMA * result["stderr"])
        with self.assertRaises(ValueError):
            generator_b_check(CylinderFunction.coordinate(1), self.ensemble, self.chart, self.basis, t_list=[0.01])

    def test_adjoint_semigroup(self):
        g = CylinderFunction.gaussian([1], [0.0], scale=self.widths[0])
        result = adjoint_semigroup_check(g, self.ensemble, self.chart, self.basis, 0.05, N=5000, seed=10)
        self.assertLessEqual(abs(result["lhs"] - result["rhs"]), N_SIGMA * result["stderr"])

    ############# CYLINDER FUNCTIONS #############

    @given(x=st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=4, max_size=4))
    @settings(max_examples=30, deadline=None)
    def test_cylinder_gradients_match_differences(self, x):
        c = np.asarray(x)
        functions = [
            CylinderFunction.sine_product([0, 1], [2.0, 3.0]),
            CylinderFunction.gaussian([1, 2], [0.1, -0.2], scale=0.7),
            CylinderFunction.sine_product([1], [3.0]).weighted([0.5, 0.0, 1.0, 0.0], np.cos, lambda s: -np.sin(s)),
            CylinderSum([(2.0, CylinderFunction.coordinate(3)), (-1.0, CylinderFunction.sine_product([0], [1.0]))]),
        ]
        for f in functions:
            grad = f.gradient(c)
            for j in range(4):
                step = np.zeros(4)
                step[j] = 1e-6
                fd = (f.value(c + step) - f.value(c - step)) / 2e-6
                self.assertAlmostEqual(float(fd), float(grad[j]), delta=1e-6)


if __name__ == '__main__':
    unittest.main()
