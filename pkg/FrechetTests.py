import unittest
import numpy as np

from kinflow._CustomClasses.BoundaryProfile import BoundaryProfile
from kinflow._CustomClasses.CollisionKernel import CollisionKernel
from kinflow._CustomClasses.KineticParams import KineticParams
from kinflow._CustomClasses.PhaseGrid import DensityPath
from kinflow._CustomClasses.CustomExceptions import RegimeViolation, ShapeMismatch
from kinflow._HelperFunctions.phase_grid_helpers import build_grid, path_norm, l1_norm, lattice_times, smooth_density
from kinflow._HelperFunctions.boltzmann_helpers import knudsen_path, admissible_lambda, picard_solve
from kinflow._HelperFunctions.frechet_helpers import (d1_psi, d2_psi, flow_derivative, neumann_partial_sums,
                                                      fd_validate, representer)

SMALL_GRID = {"nx": 4, "ny": 4, "n_speed": 2, "n_angle": 8, "n_e": 4}


class FrechetTests(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.grid = build_grid(SMALL_GRID)
        kernel = CollisionKernel(gamma=0.3)
        profile = BoundaryProfile.uniform(cls.grid)
        base = KineticParams(0.0, 1.0, 0.05, kernel, profile, tol=1e-13)
        b_norm, h_norm = base.kernel_norms(cls.grid)
        cls.params = base.with_lambda(admissible_lambda("a", 1.0, b_norm, h_norm))
        cls.p0 = smooth_density(cls.grid)
        cls.p, _ = picard_solve(cls.p0, cls.params, cls.grid)
        rng = np.random.default_rng(3)
        cls.h = cls.p0 * rng.uniform(-0.5, 0.5, size=cls.grid.shape)

    def test_first_partial_is_the_knudsen_path(self):
        np.testing.assert_array_equal(d1_psi(self.h, self.params, self.grid).values,
                                      knudsen_path(self.h, self.params, self.grid).values)

    def test_second_partial_vanishes_without_collisions(self):
        params = self.params.with_lambda(0.0)
        first = d1_psi(self.h, params, self.grid)
        out = d2_psi(self.p, first, params, self.grid)
        self.assertEqual(float(np.max(np.abs(out.values))), 0.0)

    def test_second_partial_is_at_most_half_in_the_ball(self):
        self.assertLessEqual(path_norm(self.p, self.grid), 2.0)
        times = lattice_times(1.0, 0.05)
        rng = np.random.default_rng(11)
        for _ in range(5):
            h = DensityPath(times, self.p0[None, :, :] * rng.uniform(-1.0, 1.0, size=(len(times),) + self.grid.shape))
            ratio = path_norm(d2_psi(self.p, h, self.params, self.grid), self.grid) / path_norm(h, self.grid)
            self.assertLessEqual(ratio, 0.5)

    def test_second_partial_rejects_foreign_lattices(self):
        first = d1_psi(self.h, self.params, self.grid)
        coarse = DensityPath(lattice_times(1.0, 0.1), first.values[::2])
        with self.assertRaises(ShapeMismatch):
            d2_psi(self.p, coarse, self.params, self.grid)

    def test_derivative_is_linear_in_the_direction(self):
        other = self.p0 * np.random.default_rng(5).uniform(-0.5, 0.5, size=self.grid.shape)
        u1, _ = flow_derivative(self.p0, self.h, self.params, self.grid, p=self.p)
        u2, _ = flow_derivative(self.p0, other, self.params, self.grid, p=self.p)
        both, _ = flow_derivative(self.p0, self.h + 2.0 * other, self.params, self.grid, p=self.p)
        self.assertLess(path_norm(both - u1 - u2 * 2.0, self.grid), 1e-8)

    def test_derivative_without_collisions_is_transport(self):
        params = self.params.with_lambda(0.0)
        u, report = flow_derivative(self.p0, self.h, params, self.grid, p=self.p)
        np.testing.assert_allclose(u.values, knudsen_path(self.h, params, self.grid).values, rtol=0, atol=1e-15)
        self.assertTrue(report.converged)

    def test_neumann_increments_contract(self):
        _, report = flow_derivative(self.p0, self.h, self.params, self.grid, p=self.p)
        self.assertTrue(report.converged)
        self.assertLessEqual(report.max_ratio, 0.55)

    def test_neumann_tail_bound(self):
        full, _ = flow_derivative(self.p0, self.h, self.params, self.grid, p=self.p)
        b_norm, h_sup = self.params.kernel_norms(self.grid)
        rho = 4.0 * self.params.lam * self.params.T * b_norm * h_sup * path_norm(self.p, self.grid)
        h_norm = l1_norm(self.h, self.grid)
        for k in (1, 2, 3):
            partial = neumann_partial_sums(self.p0, self.h, self.params, self.grid, k, p=self.p)
            self.assertLessEqual(path_norm(full - partial, self.grid), rho ** (k + 1) / (1.0 - rho) * h_norm + 1e-9)

    def test_zero_terms_is_the_first_partial(self):
        partial = neumann_partial_sums(self.p0, self.h, self.params, self.grid, 0, p=self.p)
        np.testing.assert_array_equal(partial.values, d1_psi(self.h, self.params, self.grid).values)

    def test_finite_difference_remainder_is_first_order(self):
        result = fd_validate(self.p0, self.h, [1e-2, 1e-3, 1e-4], self.params, self.grid, p=self.p)
        self.assertEqual([row["eps"] for row in result["rows"]], [1e-2, 1e-3, 1e-4])
        self.assertGreaterEqual(result["slope"], 0.8)
        self.assertLessEqual(result["slope"], 1.2)
        remainders = [row["remainder"] for row in result["rows"]]
        self.assertLess(remainders[1], remainders[0])
        self.assertLess(remainders[2], remainders[1])

    def test_finite_difference_needs_a_direction(self):
        with self.assertRaises(ValueError):
            fd_validate(self.p0, np.zeros(self.grid.shape), [1e-2], self.params, self.grid, p=self.p)

    def test_representer_duality(self):
        g = np.cos(np.arange(self.grid.n_vel))[None, :] * np.ones((self.grid.n_space, 1))
        R, info = representer(self.p0, 0.5, g, self.params, self.grid, p=self.p, n_random=3)
        self.assertEqual(R.shape, self.grid.shape)
        self.assertLess(max(info["duality_residuals"]), 1e-8)
        self.assertTrue(info["within_bound"])
        np.testing.assert_allclose(info["gamma"] + info["Gamma"], R, rtol=0, atol=1e-14)

    def test_representer_without_collisions_is_the_knudsen_part(self):
        params = self.params.with_lambda(0.0)
        g = np.sin(np.arange(self.grid.n_vel))[None, :] * np.ones((self.grid.n_space, 1))
        R, info = representer(self.p0, 0.5, g, params, self.grid, n_random=2)
        np.testing.assert_array_equal(info["Gamma"], np.zeros(self.grid.shape))
        np.testing.assert_array_equal(R, info["gamma"])
        self.assertEqual(info["rho"], 0.0)
        self.assertLess(max(info["duality_residuals"]), 1e-8)

    def test_representer_rejects_off_lattice_times(self):
        g = np.ones(self.grid.shape)
        with self.assertRaises(ShapeMismatch):
            representer(self.p0, 0.52, g, self.params, self.grid, p=self.p, n_random=1)
        with self.assertRaises(ValueError):
            representer(self.p0, 1.5, g, self.params, self.grid, p=self.p, n_random=1)

    def test_representer_outside_the_regime(self):
        params = self.params.with_lambda(10.0 * self.params.lam)
        with self.assertRaises(RegimeViolation):
            representer(self.p0, 0.5, np.ones(self.grid.shape), params, self.grid, p=self.p, n_random=1)


if __name__ == '__main__':
    unittest.main()
