import logging
import numpy as np

from .._CustomClasses.PhaseGrid import PhaseGrid, DensityPath, DensityField
from .._CustomClasses.CustomExceptions import ConfigError, ShapeMismatch
from .._Reference.kinflow_info import GRID_DEFAULTS

logger = logging.getLogger(__name__)

INTEGER_KEYS = ["nx", "ny", "n_speed", "n_angle", "n_e"]


def build_grid(config: dict = None) -> PhaseGrid:
    """
    Builds the phase grid from a grid config block

    Parameters
    ------------
    config: dict with any of the keys nx, ny, n_speed, n_angle, n_e, v_min, v_max, lx, ly.
            Missing keys take the values in GRID_DEFAULTS.

    Return: PhaseGrid
    """
    settings = dict(GRID_DEFAULTS)
    unknown = set(config or {}) - set(GRID_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    settings.update(config or {})

    for key in INTEGER_KEYS:
        value = settings[key]
        if int(value) != value or value < 2:
            raise ConfigError(f"grid.{key} must be an integer >= 2 (got {value})")
    if settings["n_e"] % 2 != 0:
        # the e nodes must be closed under e -> -e so exactly half of them are admissible per pair
        raise ConfigError(f"grid.n_e must be even (got {settings['n_e']})")
    if settings["lx"] <= 0 or settings["ly"] <= 0:
        raise ConfigError(f"domain extents must be positive (lx={settings['lx']}, ly={settings['ly']})")
    if not 0 < settings["v_min"] < settings["v_max"]:
        raise ConfigError(f"need 0 < v_min < v_max (v_min={settings['v_min']}, v_max={settings['v_max']})")

    grid = PhaseGrid(**settings)
    logger.debug(f"built phase grid: {grid.n_space} spatial cells, {grid.n_vel} velocity nodes, {grid.n_patch} patches")
    return grid


def mass(field: DensityField, grid: PhaseGrid) -> float:
    """integral of the field over Omega x V with the grid weights"""
    arr = grid.check_field(field)
    return float(np.sum(arr * grid.weights))


def l1_norm(field: DensityField, grid: PhaseGrid) -> float:
    arr = grid.check_field(field)
    return float(np.sum(np.abs(arr) * grid.weights))


def path_norm(path: DensityPath, grid: PhaseGrid) -> float:
    """max over the stored times of the weighted L1 norm"""
    if path is None or len(path) == 0:
        raise ShapeMismatch("path_norm of an empty path")
    if path.values.shape[1:] != grid.shape:
        raise ShapeMismatch(f"path slices have shape {path.values.shape[1:]}, grid expects {grid.shape}")
    norms = np.sum(np.abs(path.values) * grid.weights[None, :, :], axis=(1, 2))
    return float(np.max(norms))


def lattice_times(T: float, dt: float) -> np.ndarray:
    """the lattice 0, dt, ..., T; T must be a multiple of dt"""
    n_steps = int(round(T / dt))
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ShapeMismatch(f"T={T} is not a positive multiple of dt={dt}")
    return dt * np.arange(n_steps + 1)


def uniform_density(grid: PhaseGrid) -> DensityField:
    """the constant density of mass 1"""
    return np.full(grid.shape, 1.0 / (grid.area * grid.annulus_area))


def smooth_density(grid: PhaseGrid, amplitude: float = 0.3, phase: float = 0.0) -> DensityField:
    """
    A strictly positive smooth density of mass 1, used as the default initial datum
    """
    x = grid.space_points[:, 0] / grid.lx
    y = grid.space_points[:, 1] / grid.ly
    theta = np.arctan2(grid.velocities[:, 1], grid.velocities[:, 0])
    spatial = 1.0 + amplitude * np.sin(2.0 * np.pi * x + phase) * np.cos(np.pi * y)
    angular = 1.0 + 0.5 * amplitude * np.cos(theta - phase)
    field = np.outer(spatial, angular)
    return field / mass(field, grid)
