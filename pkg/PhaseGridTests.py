import unittest
import numpy as np
from hypothesis import given, settings, strategies as st

from kinflow._CustomClasses.PhaseGrid import DensityPath
from kinflow._CustomClasses.CustomExceptions import ConfigError, ShapeMismatch
from kinflow._HelperFunctions.phase_grid_helpers import (build_grid, mass, l1_norm, path_norm, lattice_times,
                                                         uniform_density, smooth_density)

SMALL_GRID = {"nx": 4, "ny": 4, "n_speed": 2, "n_angle": 8, "n_e": 4}


class PhaseGridTests(unittest.TestCase):

    def setUp(self):
        self.grid = build_grid(SMALL_GRID)

    def test_default_grid_shape(self):
        grid = build_grid()
        self.assertEqual(grid.shape, (64, 32))
        self.assertEqual(grid.n_patch, 32)

    def test_uniform_density_has_unit_mass(self):
        self.assertAlmostEqual(mass(uniform_density(self.grid), self.grid), 1.0, places=12)

    def test_velocity_weights_integrate_the_annulus(self):
        self.assertAlmostEqual(float(np.sum(self.grid.velocity_weights)), 3.0 * np.pi, places=12)

    def test_unknown_key_rejected(self):
        with self.assertRaises(ConfigError):
            build_grid({"nz": 4})

    def test_bad_values_rejected(self):
        for bad in ({"n_e": 5}, {"nx": 1}, {"v_min": 2.0, "v_max": 1.0}, {"lx": 0.0}, {"n_angle": 2.5}):
            with self.assertRaises(ConfigError, msg=str(bad)):
                build_grid(bad)

    def test_config_error_is_a_value_error(self):
        with self.assertRaises(ValueError):
            build_grid({"n_e": 3})

    def test_check_field_rejects_bad_fields(self):
        with self.assertRaises(ShapeMismatch):
            self.grid.check_field(np.zeros((3, 3)))
        field = uniform_density(self.grid)
        field[0, 0] = np.nan
        with self.assertRaises(ShapeMismatch):
            self.grid.check_field(field)

    def test_lattice_times(self):
        times = lattice_times(1.0, 0.05)
        self.assertEqual(len(times), 21)
        self.assertAlmostEqual(times[-1], 1.0, places=12)
        with self.assertRaises(ShapeMismatch):
            lattice_times(1.0, 0.3)

    def test_velocity_nodes_map_to_themselves(self):
        nodes = self.grid.velocity_node_of(self.grid.velocities)
        np.testing.assert_array_equal(nodes, np.arange(self.grid.n_vel))

    def test_velocity_outside_annulus(self):
        nodes = self.grid.velocity_node_of(np.array([[3.0, 0.0], [0.5, 0.0], [0.0, 0.0]]))
        np.testing.assert_array_equal(nodes, [-1, -1, -1])

    def test_patches_sit_on_the_walls(self):
        grid = self.grid
        for point, normal, cell in zip(grid.patch_points, grid.patch_normals, grid.patch_cells):
            centre = grid.space_points[cell]
            # the adjacent cell lies half a cell inward from its patch
            self.assertLess(float(np.dot(centre - point, normal)), 0.0)

    def test_patch_lengths_cover_the_perimeter(self):
        self.assertAlmostEqual(float(np.sum(self.grid.patch_lengths)), 4.0, places=14)
        self.assertEqual(self.grid.perimeter, 4.0)
        for wall in range(4):
            self.assertAlmostEqual(float(np.sum(self.grid.patch_lengths[self.grid.patch_walls == wall])), 1.0,
                                   places=14)

    def test_mass_converges_at_second_order(self):
        # exp(x + y) |v|^2 integrates to (e - 1)^2 * 15 pi / 2
        exact = (np.e - 1.0) ** 2 * 7.5 * np.pi
        errors = []
        for refine in (1, 4):
            grid = build_grid({"nx": 4 * refine, "ny": 4 * refine, "n_speed": 2 * refine, "n_angle": 8, "n_e": 4})
            x, y = grid.space_points[:, 0], grid.space_points[:, 1]
            speed_sq = np.sum(grid.velocities ** 2, axis=1)
            field = np.outer(np.exp(x + y), speed_sq)
            errors.append(abs(mass(field, grid) - exact) / exact)
            self.assertAlmostEqual(mass(smooth_density(grid), grid), 1.0, places=12)
        self.assertLess(errors[0], 0.05)
        # h^2 scaling predicts a factor 16
        self.assertLess(errors[1], errors[0] / 10.0)

    def test_path_norm_is_max_over_slices(self):
        times = lattice_times(1.0, 0.5)
        field = uniform_density(self.grid)
        path = DensityPath(times, np.stack([field, 2.0 * field, 0.5 * field]))
        self.assertAlmostEqual(path_norm(path, self.grid), 2.0, places=12)

    def test_density_path_rejects_bad_lattices(self):
        field = uniform_density(self.grid)
        with self.assertRaises(ShapeMismatch):
            DensityPath([0.0, 0.0], np.stack([field, field]))
        with self.assertRaises(ShapeMismatch):
            DensityPath.constant(field, [0.0, 0.5]) + DensityPath.constant(field, [0.0, 1.0])

    @given(amplitude=st.floats(min_value=0.0, max_value=0.9), phase=st.floats(min_value=-np.pi, max_value=np.pi))
    @settings(max_examples=25, deadline=None)
    def test_smooth_density_is_a_positive_probability(self, amplitude, phase):
        field = smooth_density(self.grid, amplitude, phase)
        self.assertGreater(float(np.min(field)), 0.0)
        self.assertAlmostEqual(mass(field, self.grid), 1.0, places=12)
        self.assertAlmostEqual(l1_norm(field, self.grid), 1.0, places=12)


if __name__ == '__main__':
    unittest.main()
