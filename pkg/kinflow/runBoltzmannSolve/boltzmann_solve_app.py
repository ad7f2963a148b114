import numpy as np

from .._Reference.ndjson_logging import setup_logging
from .._CustomClasses.CheckRecord import CheckRecord
from .._CustomClasses.CustomExceptions import KinflowError
from .._HelperFunctions import config_helpers as setup
from .._HelperFunctions import boltzmann_helpers as boltzmann
from .._HelperFunctions import output_helpers as output
from .._HelperFunctions.phase_grid_helpers import mass

RESIDUALS_FILE_NAME = "residuals.csv"
SOLUTION_FILE_NAME = "solution_T.csv"
SLICES_FILE_NAME = "solution_slices.csv"

# modes whose bound certifies the solve for a bounded probability datum without the ball regime
N_CLASS_MODES = ("b", "d")

########################################################################################################################
#           boltzmann-solve
#
#           ABOUT:  Solves the mollified Boltzmann equation in mild form by Picard iteration on the dt lattice. Writes
#           the residual of every iteration, every lattice slice of the solution and the slice at the horizon T, then
#           checks convergence, the observed contraction ratio, mass conservation, the bounds inherited from the
#           initial datum and whether lam lies in the regime it was taken from.
########################################################################################################################


def app(config, out_dir: str) -> list:

    # sets up the logger
    log = setup_logging(__name__, log_to_file=False)
    checks = []
    thresholds = config["checks"]

    ############# SETUP SECTION #############

    built = setup.build_kinetic_setup(config)
    grid, params, p0 = built["grid"], built["params"], built["p0"]
    mode = params.lambda_mode
    ball_lambda = built["ball_lambda"]

    checks.append(CheckRecord.at_most(f"lambda_within_mode_{mode}_regime", params.lam, built["certified_lambda"],
                                      "collision strength against the bound of its lambda mode"))
    n_class = mode in N_CLASS_MODES and params.lam <= built["certified_lambda"]
    in_ball = params.lam <= ball_lambda
    if not in_ball:
        message = f"lam={params.lam:.6g} is above the ball-regime bound {ball_lambda:.6g}"
        if n_class:
            log.info(f"{message}; covered by the mode {mode} bound")
        else:
            log.warning(f"{message}; contraction ratios may exceed 2/3")
    checks.append(CheckRecord("lambda_within_ball_regime", in_ball or n_class, params.lam, ball_lambda,
                              f"above the ball bound but within mode {mode}" if n_class and not in_ball
                              else "collision strength against the ball-regime bound"))

    ############# PICARD SECTION #############

    try:
        path, report = boltzmann.picard_solve(p0, params, grid)
    except KinflowError as ex:
        log.error(f"picard iteration failed: exception=({ex})")
        checks.append(CheckRecord.failed("picard_converged", ex))
        return checks

    output.write_csv(out_dir, RESIDUALS_FILE_NAME, ["n", "residual", "ratio"], report.rows())
    output.write_csv(out_dir, SOLUTION_FILE_NAME, output.FIELD_HEADER, output.field_rows(grid, path[-1]))
    slice_rows = []
    for k, t in enumerate(path.times):
        slice_rows += [[float(t)] + row for row in output.field_rows(grid, path[k])]
    output.write_csv(out_dir, SLICES_FILE_NAME, ["t"] + output.FIELD_HEADER, slice_rows)

    ############# CHECKS SECTION #############

    checks.append(CheckRecord.at_most("picard_fixed_point_residual", report.final_residual, params.tol,
                                      f"{report.iterations} iterations"))
    checks.append(CheckRecord.at_most("picard_contraction_ratio", report.max_ratio,
                                      2.0 / 3.0 + thresholds["contraction_slack"],
                                      "largest observed ratio of successive residuals"))
    drift = max(abs(mass(slice_, grid) - mass(p0, grid)) for slice_ in path.values)
    checks.append(CheckRecord.at_most("mass_conservation", drift, thresholds["mass_tol"],
                                      "largest change of total mass over the lattice"))
    checks.append(CheckRecord.at_most("solution_nonnegative", -float(np.min(path.values)), 0.0,
                                      "negated minimum of the solution"))
    violations = boltzmann.bound_violations(path, params.p_min, params.p_max)
    checks.append(CheckRecord.at_most("solution_within_datum_bounds", violations, 0,
                                      f"entries outside [{0.5 * params.p_min:.6g}, "
                                      f"{params.p_max + 0.5 * params.p_min:.6g}] over {path.values.size}"))

    log.info(f"boltzmann-solve finished: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return checks
