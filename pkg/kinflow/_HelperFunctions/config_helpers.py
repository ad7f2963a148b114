import json
import logging
import os
import numpy as np

from .._CustomClasses.CustomExceptions import ConfigError
from .._Reference.kinflow_info import DEFAULT_THREADS, THREADS_ENV_VAR, LOCAL_SETTINGS_FILE_NAME

logger = logging.getLogger(__name__)


def local_settings_values(path: str = LOCAL_SETTINGS_FILE_NAME) -> dict:
    """the Values block of local.settings.json, empty when the file is absent or unreadable"""
    try:
        with open(path, "r", encoding="utf-8") as settings_file:
            values = json.load(settings_file).get("Values", {})
    except (OSError, ValueError) as ex:
        logger.debug(f"no usable settings in {path}: exception=({ex})")
        return {}
    return values if isinstance(values, dict) else {}


def _as_thread_count(value, source: str) -> int:
    try:
        threads = int(value)
    except (TypeError, ValueError) as ex:
        raise ConfigError(f"thread count from {source} is not an integer: {value!r}") from ex
    if threads < 1:
        raise ConfigError(f"thread count from {source} must be positive (got {threads})")
    return threads


def resolve_threads(flag=None, config_threads=None, settings_path: str = LOCAL_SETTINGS_FILE_NAME) -> int:
    """
    Thread count, first match wins: --threads, the config key, KINFLOW_THREADS,
    local.settings.json Values, then the default
    """
    if flag is not None:
        return _as_thread_count(flag, "--threads")
    if config_threads is not None:
        return _as_thread_count(config_threads, "config")
    if os.environ.get(THREADS_ENV_VAR):
        return _as_thread_count(os.environ[THREADS_ENV_VAR], THREADS_ENV_VAR)
    values = local_settings_values(settings_path)
    if values.get(THREADS_ENV_VAR) not in (None, ""):
        return _as_thread_count(values[THREADS_ENV_VAR], settings_path)
    return DEFAULT_THREADS


############# EXPERIMENT SETUP SECTION #############

def build_kinetic_setup(config) -> dict:
    """
    Grid, kernel, boundary profile, initial datum and KineticParams from the grid / collision /
    kinetic blocks. lam = None is replaced by admissible_lambda(lambda_mode). Preconditions are
    checked here, before any solve, and reported as ConfigError.
    """
    from .._CustomClasses.CollisionKernel import CollisionKernel
    from .._CustomClasses.BoundaryProfile import BoundaryProfile
    from .._CustomClasses.KineticParams import KineticParams
    from .._CustomClasses.CustomExceptions import DiscretizationError
    from .phase_grid_helpers import build_grid, smooth_density, uniform_density
    from .boltzmann_helpers import admissible_lambda, knudsen_bounds, LAMBDA_MODES

    kinetic = config["kinetic"]
    collision = config["collision"]
    grid = build_grid(config["grid"])
    try:
        kernel = CollisionKernel(collision["gamma"], collision["kernel"], collision["mollifier"])
    except (KeyError, ValueError) as ex:
        raise ConfigError(f"invalid collision block: {ex}") from ex
    profile = BoundaryProfile.uniform(grid)

    if kinetic["initial_datum"] == "smooth":
        p0 = smooth_density(grid)
    elif kinetic["initial_datum"] == "uniform":
        p0 = uniform_density(grid)
    else:
        raise ConfigError(f"initial_datum must be 'smooth' or 'uniform' (got {kinetic['initial_datum']!r})")
    if kinetic["lambda_mode"] not in LAMBDA_MODES:
        raise ConfigError(f"unknown lambda_mode {kinetic['lambda_mode']!r} (known: {LAMBDA_MODES})")

    params = KineticParams(0.0, kinetic["T"], kinetic["dt"], kernel, profile, kinetic["tol"], kinetic["max_iter"],
                           lambda_mode=kinetic["lambda_mode"])
    try:
        params.validate(grid)
    except DiscretizationError as ex:
        raise ConfigError(str(ex)) from ex

    p_min, p_max = knudsen_bounds(p0, params, grid)
    b_norm, h_norm = params.kernel_norms(grid)
    try:
        certified = admissible_lambda(kinetic["lambda_mode"], params.T, b_norm, h_norm, p_min, p_max,
                                      kinetic.get("delta"), kinetic.get("beta"), kinetic.get("alpha"),
                                      kinetic.get("q_max"))
    except ValueError as ex:
        raise ConfigError(f"cannot evaluate lambda mode {kinetic['lambda_mode']}: {ex}") from ex
    lam = certified if kinetic["lam"] is None else kinetic["lam"]
    params = params.with_lambda(lam)
    params.p_min, params.p_max = p_min, p_max
    logger.info(f"kinetic setup: lam={lam:.6g} ({kinetic['lambda_mode']}-regime bound {certified:.6g}), "
                f"p_min={p_min:.6g}, p_max={p_max:.6g}, ||B||={b_norm:.6g}, ||h||={h_norm:.6g}")
    return {"grid": grid, "kernel": kernel, "profile": profile, "p0": p0, "params": params,
            "certified_lambda": certified, "ball_lambda": admissible_lambda("a", params.T, b_norm, h_norm)}


def spectral_setup(config, J: int = None):
    """basis from the spectral block, J overridden when given"""
    from .spectral_flow_helpers import basis_from_config
    try:
        return basis_from_config(config["spectral"], J)
    except (TypeError, ValueError) as ex:
        raise ConfigError(f"invalid spectral block: {ex}") from ex


def initial_coefficients(config, basis) -> np.ndarray:
    """the spectral 'initial' list padded to J, scaled to probability and checked for a nonnegative density"""
    from .spectral_flow_helpers import is_nonnegative
    given = np.asarray(config["spectral"]["initial"], dtype=float)
    if given.ndim != 1 or len(given) > basis.J:
        raise ConfigError(f"spectral initial needs at most J={basis.J} coefficients (got {given.tolist()})")
    c = np.zeros(basis.J)
    c[:len(given)] = given
    total = float(c @ basis.moments)
    if total <= 0.0:
        raise ConfigError(f"spectral initial has nonpositive total mass {total}")
    c = c / total
    if not is_nonnegative(c, basis):
        raise ConfigError("spectral initial coefficients give a negative density")
    return c
