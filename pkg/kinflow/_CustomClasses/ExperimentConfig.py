import json
import logging
import math
import numbers

from .CustomExceptions import ConfigError
from .._Reference.kinflow_info import (EXPERIMENT_NAMES, TOP_LEVEL_KEYS, DEFAULT_SEED, DEFAULT_OUTPUT_DIR,
                                       GRID_DEFAULTS, KINETIC_DEFAULTS, COLLISION_DEFAULTS, FRECHET_DEFAULTS,
                                       SPECTRAL_DEFAULTS, ENSEMBLE_DEFAULTS, CHECK_DEFAULTS,
                                       MIN_ENSEMBLE_SAMPLES, LATTICE_TOL)

# keys a block may carry besides its defaults
OPTIONAL_KEYS = {
    "kinetic": ["delta", "beta", "alpha", "q_max"],
    "collision": [],
}

BLOCK_DEFAULTS = {
    "grid": GRID_DEFAULTS,
    "kinetic": KINETIC_DEFAULTS,
    "collision": COLLISION_DEFAULTS,
    "frechet": FRECHET_DEFAULTS,
    "spectral": SPECTRAL_DEFAULTS,
    "ensemble": ENSEMBLE_DEFAULTS,
    "checks": CHECK_DEFAULTS,
}


def _is_number(value) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool) and math.isfinite(value)


def _number(block: dict, name: str, key: str, low: float = None, high: float = None, above: float = None,
            integer: bool = False, optional: bool = False):
    """the value of block[key] after type and range checks, ConfigError otherwise"""
    value = block[key]
    if value is None and optional:
        return value
    where = f"{name}.{key}"
    if integer and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{where} must be an integer (got {value!r})")
    if not _is_number(value):
        raise ConfigError(f"{where} must be a finite number (got {value!r})")
    if above is not None and not value > above:
        raise ConfigError(f"{where} must be greater than {above} (got {value!r})")
    if low is not None and value < low:
        raise ConfigError(f"{where} must be at least {low} (got {value!r})")
    if high is not None and value > high:
        raise ConfigError(f"{where} must be at most {high} (got {value!r})")
    return value


def _positive_list(block: dict, name: str, key: str, min_len: int = 1) -> list:
    """block[key] as a list of at least min_len positive finite numbers"""
    value = block[key]
    where = f"{name}.{key}"
    if not isinstance(value, list) or len(value) < min_len:
        raise ConfigError(f"{where} must be a list of at least {min_len} number(s) (got {value!r})")
    if not all(_is_number(v) and v > 0 for v in value):
        raise ConfigError(f"{where} entries must be positive numbers (got {value!r})")
    return value


class ExperimentConfig:
    """
    A validated experiment config: the experiment name, the seed, the output directory, the
    optional thread count and one parameter block per module, each merged over its defaults.
    """

    def __init__(self, experiment: str, seed: int = DEFAULT_SEED, output_dir: str = DEFAULT_OUTPUT_DIR,
                 threads: int = None, blocks: dict = None) -> None:
        if experiment not in EXPERIMENT_NAMES:
            raise ConfigError(f"unknown experiment '{experiment}' (known: {EXPERIMENT_NAMES})")
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer (got {seed!r})")
        if threads is not None and (isinstance(threads, bool) or not isinstance(threads, int) or threads < 1):
            raise ConfigError(f"threads must be a positive integer (got {threads!r})")
        if not isinstance(output_dir, str) or not output_dir:
            raise ConfigError(f"output_dir must be a non-empty string (got {output_dir!r})")
        self.experiment = experiment
        self.seed = seed
        self.output_dir = output_dir
        self.threads = threads
        self.blocks = {}
        for name, defaults in BLOCK_DEFAULTS.items():
            self.blocks[name] = self._merge_block(name, defaults, (blocks or {}).get(name))
        self._check_values()
        logging.debug(f"created ExperimentConfig for {experiment} with seed {seed}")
        return

    @staticmethod
    def _merge_block(name: str, defaults: dict, given) -> dict:
        if given is None:
            return dict(defaults)
        if not isinstance(given, dict):
            raise ConfigError(f"config block '{name}' must be an object")
        allowed = set(defaults) | set(OPTIONAL_KEYS.get(name, []))
        unknown = sorted(set(given) - allowed)
        if unknown:
            raise ConfigError(f"unknown key(s) {unknown} in config block '{name}' (allowed: {sorted(allowed)})")
        merged = dict(defaults)
        merged.update(given)
        return merged

    def _check_values(self) -> None:
        """type and range of every block value; raises ConfigError"""
        grid = self.blocks["grid"]
        for key in ("nx", "ny", "n_speed", "n_angle", "n_e"):
            _number(grid, "grid", key, low=1, integer=True)
        v_min = _number(grid, "grid", "v_min", above=0.0)
        _number(grid, "grid", "v_max", above=v_min)
        _number(grid, "grid", "lx", above=0.0)
        _number(grid, "grid", "ly", above=0.0)

        kinetic = self.blocks["kinetic"]
        _number(kinetic, "kinetic", "lam", low=0.0, optional=True)
        T = _number(kinetic, "kinetic", "T", low=1.0)
        dt = _number(kinetic, "kinetic", "dt", above=0.0)
        for key in ("tol", "stationary_tol"):
            _number(kinetic, "kinetic", key, above=0.0)
        for key in ("max_iter", "stationary_max_iter"):
            _number(kinetic, "kinetic", key, low=1, integer=True)
        for key in OPTIONAL_KEYS["kinetic"]:
            if key in kinetic:
                _number(kinetic, "kinetic", key, optional=True)
        for key in ("lambda_mode", "initial_datum"):
            if not isinstance(kinetic[key], str):
                raise ConfigError(f"kinetic.{key} must be a string (got {kinetic[key]!r})")

        collision = self.blocks["collision"]
        _number(collision, "collision", "gamma", above=0.0)
        for key in ("kernel", "mollifier"):
            if not isinstance(collision[key], str):
                raise ConfigError(f"collision.{key} must be a string (got {collision[key]!r})")

        frechet = self.blocks["frechet"]
        eps_list = _positive_list(frechet, "frechet", "eps_list", min_len=2)
        if len(set(eps_list)) < 2:
            raise ConfigError(f"frechet.eps_list needs two distinct values (got {eps_list})")
        for key in ("derivative_tol", "solve_tol"):
            _number(frechet, "frechet", key, above=0.0)
        _number(frechet, "frechet", "max_iter", low=1, integer=True)
        _number(frechet, "frechet", "n_random_h", low=0, integer=True)
        t = _number(frechet, "frechet", "representer_t", low=0.0, high=min(1.0, T))
        if abs(round(t / dt) * dt - t) > LATTICE_TOL * dt:
            raise ConfigError(f"frechet.representer_t={t} is not on the dt={dt} lattice")

        spectral = self.blocks["spectral"]
        if not isinstance(spectral["domain"], str):
            raise ConfigError(f"spectral.domain must be a string (got {spectral['domain']!r})")
        for key in ("L", "Lx", "Ly", "t_max"):
            _number(spectral, "spectral", key, above=0.0)
        _number(spectral, "spectral", "J", low=2, integer=True)
        _number(spectral, "spectral", "eval_points", low=2, integer=True)
        _number(spectral, "spectral", "n_times", low=2, integer=True)
        initial = spectral["initial"]
        if not isinstance(initial, list) or not initial or not all(_is_number(v) for v in initial):
            raise ConfigError(f"spectral.initial must be a non-empty list of numbers (got {initial!r})")

        ensemble = self.blocks["ensemble"]
        _number(ensemble, "ensemble", "J", low=2, integer=True)
        _positive_list(ensemble, "ensemble", "widths")
        _number(ensemble, "ensemble", "N", low=MIN_ENSEMBLE_SAMPLES, integer=True)
        _number(ensemble, "ensemble", "n_points", low=1, integer=True)
        _number(ensemble, "ensemble", "chunk_size", low=1, integer=True)
        _positive_list(ensemble, "ensemble", "t_list", min_len=2)
        for key in ("t_max", "rk4_step", "ode_tol"):
            _number(ensemble, "ensemble", key, above=0.0)

        checks = self.blocks["checks"]
        for key in checks:
            _number(checks, "checks", key, low=0.0)
        if checks["slope_low"] > checks["slope_high"]:
            raise ConfigError(f"checks.slope_low={checks['slope_low']} exceeds slope_high={checks['slope_high']}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - set(TOP_LEVEL_KEYS))
        if unknown:
            raise ConfigError(f"unknown top-level key(s) {unknown} (allowed: {TOP_LEVEL_KEYS})")
        if "experiment" not in data:
            raise ConfigError("config is missing the 'experiment' key")
        blocks = {name: data[name] for name in BLOCK_DEFAULTS if name in data}
        return cls(data["experiment"], data.get("seed", DEFAULT_SEED), data.get("output_dir", DEFAULT_OUTPUT_DIR),
                   data.get("threads"), blocks)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError as ex:
            raise ConfigError(f"config file not found: {path}") from ex
        except json.JSONDecodeError as ex:
            raise ConfigError(f"malformed JSON in {path}: {ex}") from ex
        return cls.from_dict(data)

    def __getitem__(self, block: str) -> dict:
        return self.blocks[block]

    def to_dict(self) -> dict:
        out = {"experiment": self.experiment, "seed": self.seed, "output_dir": self.output_dir,
               "threads": self.threads}
        out.update(self.blocks)
        return out
