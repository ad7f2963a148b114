# default values used whenever an experiment config leaves a key out

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2

EXPERIMENT_NAMES = [
    "boltzmann-solve",
    "boltzmann-derivative-check",
    "knudsen-stationary",
    "fv-flow",
    "fv-quasi-invariance",
    "fv-ibp",
]

TOP_LEVEL_KEYS = ["experiment", "seed", "output_dir", "threads",
                  "grid", "kinetic", "collision", "frechet", "spectral", "ensemble", "checks"]

DEFAULT_SEED = 0
DEFAULT_OUTPUT_DIR = "kinflow_out"
DEFAULT_THREADS = 1
THREADS_ENV_VAR = "KINFLOW_THREADS"
LOG_LEVEL_ENV_VAR = "KINFLOW_LOG_LEVEL"
LOCAL_SETTINGS_FILE_NAME = "local.settings.json"

# phase grid over the unit square and the annulus 1 < |v| < 2
GRID_DEFAULTS = {
    "nx": 8,
    "ny": 8,
    "n_speed": 4,
    "n_angle": 8,
    "n_e": 8,
    "v_min": 1.0,
    "v_max": 2.0,
    "lx": 1.0,
    "ly": 1.0,
}

KINETIC_DEFAULTS = {
    "lam": None,            # None -> admissible_lambda(lambda_mode)
    "lambda_mode": "d",
    "T": 1.0,
    "dt": 0.05,
    "tol": 1e-8,
    "max_iter": 200,
    "stationary_tol": 1e-10,
    "stationary_max_iter": 200000,
    "initial_datum": "smooth",
}

COLLISION_DEFAULTS = {
    "gamma": 0.3,
    "kernel": "hard-sphere",
    "mollifier": "quartic",
}

FRECHET_DEFAULTS = {
    "eps_list": [1e-2, 1e-3, 1e-4],
    "derivative_tol": 1e-10,
    "solve_tol": 1e-13,
    "max_iter": 200,
    "representer_t": 0.5,
    "n_random_h": 10,
}

SPECTRAL_DEFAULTS = {
    "domain": "interval",
    "L": 3.141592653589793,
    "Lx": 1.0,
    "Ly": 1.0,
    "J": 8,
    "eval_points": 512,
    "t_max": 5.0,
    "n_times": 51,
    "initial": [1.0, 0.2, 0.05, 0.01],
}

ENSEMBLE_DEFAULTS = {
    "J": 4,
    "widths": [0.02, 1e-3, 2e-5],
    "N": 100000,
    "n_points": 100,
    "t_list": [0.01, 0.02, 0.04],
    "t_max": 0.5,
    "rk4_step": 1e-3,
    "ode_tol": 1e-10,
    "chunk_size": 10000,
}

# fewest Monte Carlo samples a config may ask for
MIN_ENSEMBLE_SAMPLES = 10000

# lattice membership tolerance, relative to dt
LATTICE_TOL = 1e-9

# acceptance thresholds
CHECK_DEFAULTS = {
    "mass_tol": 1e-10,
    "collision_mass_tol": 1e-13,
    "contraction_slack": 0.05,
    "unit_mass_tol": 1e-9,
    "slope_low": 0.8,
    "slope_high": 1.2,
    "neumann_ratio": 0.55,
    "duality_tol": 1e-8,
    "adjoint_tol": 1e-9,
    "semigroup_tol": 1e-12,
    "generator_mass_tol": 1e-13,
    "decay_rel_tol": 0.05,
    "rn_rel_tol": 1e-5,
    "rn_composition_tol": 1e-7,
    "n_stderr": 3.0,
}

# positivity tolerance for densities evaluated on the spectral evaluation grid
DENSITY_FLOOR = -1e-9

# Picard divergence is only declared above this residual (rounding floor)
RESIDUAL_FLOOR = 1e-12
