import numpy as np

from .._Reference.ndjson_logging import setup_logging
from .._CustomClasses.CheckRecord import CheckRecord
from .._CustomClasses.CustomExceptions import KinflowError
from .._HelperFunctions import config_helpers as setup
from .._HelperFunctions import boltzmann_helpers as boltzmann
from .._HelperFunctions import frechet_helpers as frechet
from .._HelperFunctions import output_helpers as output
from .._HelperFunctions.phase_grid_helpers import path_norm, l1_norm

FD_TABLE_FILE_NAME = "fd_table.csv"
NEUMANN_FILE_NAME = "neumann_increments.csv"
TAIL_TERMS = [1, 2, 3]

########################################################################################################################
#           boltzmann-derivative-check
#
#           ABOUT:  Validates the derivative of the solution map p0 -> p(p0). The derivative comes from the Neumann
#           fixed point u = d1 + d2(p, u) and is compared with finite differences of two Picard solves over eps. The
#           dual loop gives the representer of the derivative tested against a bounded field g, which is checked
#           for duality on random directions and against its sup-norm bound.
########################################################################################################################


def _test_field(grid) -> np.ndarray:
    x = grid.space_points[:, 0][:, None]
    vx = grid.velocities[:, 0][None, :]
    return 1.0 + 0.5 * np.cos(2.0 * np.pi * x) * np.sin(vx)


def app(config, out_dir: str) -> list:

    # sets up the logger
    log = setup_logging(__name__, log_to_file=False)
    checks = []
    thresholds = config["checks"]
    frechet_config = config["frechet"]

    ############# SETUP SECTION #############

    built = setup.build_kinetic_setup(config)
    grid, p0 = built["grid"], built["p0"]
    params = built["params"].with_tol(frechet_config["solve_tol"], max(built["params"].max_iter, frechet_config["max_iter"]))
    rng = np.random.default_rng(config.seed)
    h = p0 * rng.uniform(-0.5, 0.5, size=grid.shape)

    try:
        p, _ = boltzmann.picard_solve(p0, params, grid)
        u, report = frechet.flow_derivative(p0, h, params, grid, p=p, tol=frechet_config["derivative_tol"])
    except KinflowError as ex:
        log.error(f"derivative could not be computed: exception=({ex})")
        checks.append(CheckRecord.failed("derivative_computed", ex))
        return checks

    ############# NEUMANN SECTION #############

    output.write_csv(out_dir, NEUMANN_FILE_NAME, ["n", "residual", "ratio"], report.rows())
    checks.append(CheckRecord.at_most("neumann_increment_ratio", report.max_ratio, thresholds["neumann_ratio"],
                                      "largest ratio of successive Neumann increments"))
    tail = []
    for k in TAIL_TERMS:
        partial = frechet.neumann_partial_sums(p0, h, params, grid, k, p=p)
        tail.append(path_norm(partial - u, grid) / (2.0 * 0.5 ** (k + 1) * l1_norm(h, grid)))
    checks.append(CheckRecord.at_most("neumann_tail_bound", max(tail), 1.0,
                                      f"truncation error over the geometric tail bound for k in {TAIL_TERMS}"))

    ############# FINITE DIFFERENCE SECTION #############

    try:
        table = frechet.fd_validate(p0, h, frechet_config["eps_list"], params, grid, p=p)
    except KinflowError as ex:
        log.error(f"finite-difference validation failed: exception=({ex})")
        checks.append(CheckRecord.failed("fd_remainder_slope", ex))
        return checks
    output.write_csv(out_dir, FD_TABLE_FILE_NAME, ["eps", "remainder", "slope"], table["rows"])
    checks.append(CheckRecord.within("fd_remainder_slope", table["slope"], thresholds["slope_low"],
                                     thresholds["slope_high"], "log-log slope of the remainder against eps"))
    remainders = [row["remainder"] for row in table["rows"]]
    checks.append(CheckRecord("fd_remainder_decreasing", all(a > b for a, b in zip(remainders, remainders[1:])),
                              remainders, None, "remainder decreases with eps"))

    ############# REPRESENTER SECTION #############

    try:
        _, info = frechet.representer(p0, frechet_config["representer_t"], _test_field(grid), params, grid, p=p,
                                      n_random=frechet_config["n_random_h"], seed=config.seed)
    except KinflowError as ex:
        log.error(f"representer failed: exception=({ex})")
        checks.append(CheckRecord.failed("representer_duality", ex))
        return checks
    checks.append(CheckRecord.at_most("representer_duality", max(info["duality_residuals"]),
                                      thresholds["duality_tol"], "relative duality residual on random directions"))
    checks.append(CheckRecord.at_most("representer_sup_norm_bound", info["sup_norm"], info["bound"],
                                      f"c={info['c']:.6g}, C={info['C']:.6g}, rho={info['rho']:.6g}"))

    log.info(f"boltzmann-derivative-check finished: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return checks
