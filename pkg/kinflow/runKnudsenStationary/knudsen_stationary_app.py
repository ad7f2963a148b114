import numpy as np

from .._Reference.ndjson_logging import setup_logging
from .._CustomClasses.CheckRecord import CheckRecord
from .._CustomClasses.BoundaryProfile import BoundaryProfile
from .._CustomClasses.CustomExceptions import KinflowError
from .._HelperFunctions import knudsen_helpers as knudsen
from .._HelperFunctions import output_helpers as output
from .._HelperFunctions.phase_grid_helpers import build_grid, mass, smooth_density

STATIONARY_FILE_NAME = "stationary_density.csv"
MASS_STEPS = 100
N_DUALITY_PAIRS = 10

########################################################################################################################
#           knudsen-stationary
#
#           ABOUT:  Computes the stationary density of the free-transport semigroup with diffuse re-emission by power
#           iteration and checks the properties the collision solver relies on: unit mass, strict positivity,
#           invariance, mass conservation over many steps, and discrete duality with the adjoint transport.
########################################################################################################################


def app(config, out_dir: str) -> list:

    # sets up the logger
    log = setup_logging(__name__, log_to_file=False)
    checks = []
    thresholds = config["checks"]
    kinetic = config["kinetic"]

    ############# SETUP SECTION #############

    grid = build_grid(config["grid"])
    profile = BoundaryProfile.uniform(grid)
    dt = kinetic["dt"]
    checks.append(CheckRecord.at_most("boundary_profile_normalization", profile.normalization_residual(grid), 1e-10,
                                      "largest deviation of the per-patch flux normalization from 1"))

    ############# STATIONARY SECTION #############

    try:
        g, info = knudsen.stationary_density(grid, profile, dt, kinetic["stationary_tol"],
                                             kinetic["stationary_max_iter"], return_info=True)
    except KinflowError as ex:
        log.error(f"stationary density failed: exception=({ex})")
        checks.append(CheckRecord.failed("stationary_density_found", ex))
        return checks
    output.write_csv(out_dir, STATIONARY_FILE_NAME, output.FIELD_HEADER, output.field_rows(grid, g))

    checks.append(CheckRecord.at_most("stationary_unit_mass", abs(mass(g, grid) - 1.0), thresholds["unit_mass_tol"]))
    checks.append(CheckRecord("stationary_strictly_positive", info["min"] > 0.0, info["min"], 0.0, "minimum value"))
    invariance = float(np.sum(np.abs(knudsen.transport_step(g, dt, profile, grid) - g) * grid.weights))
    checks.append(CheckRecord.at_most("stationary_invariance", invariance, kinetic["stationary_tol"],
                                      f"after {info['iterations']} steps"))

    ############# SEMIGROUP SECTION #############

    p0 = smooth_density(grid)
    pt = knudsen.apply_semigroup(p0, MASS_STEPS * dt, dt, profile, grid)
    checks.append(CheckRecord.at_most("transport_mass_conservation", abs(mass(pt, grid) - mass(p0, grid)),
                                      thresholds["mass_tol"], f"after {MASS_STEPS} steps"))
    checks.append(CheckRecord.at_most("transport_positivity", -float(np.min(pt)), 0.0, "negated minimum"))

    rng = np.random.default_rng(config.seed)
    residuals = []
    for _ in range(N_DUALITY_PAIRS):
        h = rng.uniform(-1.0, 1.0, size=grid.shape)
        test = rng.uniform(-1.0, 1.0, size=grid.shape)
        forward = float(np.sum(knudsen.apply_semigroup(h, 5 * dt, dt, profile, grid) * test * grid.weights))
        backward = float(np.sum(h * knudsen.adjoint_transport(test, 5 * dt, dt, profile, grid) * grid.weights))
        residuals.append(abs(forward - backward) / max(abs(forward), 1e-300))
    checks.append(CheckRecord.at_most("adjoint_duality", max(residuals), thresholds["adjoint_tol"],
                                      f"relative residual on {N_DUALITY_PAIRS} random pairs"))

    log.info(f"knudsen-stationary finished: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return checks
