import numpy as np

from .._Reference.ndjson_logging import setup_logging
from .._CustomClasses.CheckRecord import CheckRecord
from .._CustomClasses.CylinderFunction import CylinderFunction
from .._CustomClasses.CustomExceptions import KinflowError
from .._HelperFunctions import config_helpers as setup
from .._HelperFunctions import quasi_invariance_helpers as qi
from .._HelperFunctions import output_helpers as output

IBP_FILE_NAME = "ibp.csv"
GENERATOR_FILE_NAME = "generator_b.csv"
ADJOINT_T = 0.05
ADJOINT_MAX_SAMPLES = 20000

########################################################################################################################
#           fv-ibp
#
#           ABOUT:  Monte Carlo checks over the smooth slice ensemble of the integration by parts identity
#           -<Af, g> - <Ag, f> = <delta f, g> for a family of cylinder functions, the time derivative of
#           int f(nu_t) dmu at 0 against -<f delta>, and the adjoint relation <g(nu_t)> = <g r_{-t}>.
########################################################################################################################


def _test_pairs(basis) -> list:
    coordinate = CylinderFunction.coordinate(0)
    second = CylinderFunction.coordinate(1)
    wave = CylinderFunction.sine_product([0, 1], [2.0, 50.0])
    bump = CylinderFunction.gaussian([0], [1.0 / basis.moments[0]], scale=0.05)
    weighted = CylinderFunction.sine_product([1], [30.0]).weighted(np.eye(basis.J)[0], np.cos, lambda x: -np.sin(x))
    return [
        ("constant-constant", CylinderFunction.constant(1.0), CylinderFunction.constant(1.0)),
        ("coordinate-coordinate", coordinate, coordinate),
        ("coordinate-second", coordinate, second),
        ("wave-bump", wave, bump),
        ("weighted-coordinate", weighted, coordinate),
    ]


def app(config, out_dir: str) -> list:

    # sets up the logger
    log = setup_logging(__name__, log_to_file=False)
    checks = []
    settings = config["ensemble"]
    threads = config.threads or 1

    ############# SETUP SECTION #############

    basis = setup.spectral_setup(config, J=settings["J"])
    chart = qi.build_chart(basis)
    ensemble = qi.build_ensemble(chart, basis, settings["widths"], config.seed)

    ############# INTEGRATION BY PARTS SECTION #############

    try:
        samples = qi.sample_ensemble(ensemble, settings["N"], seed=config.seed, threads=threads,
                                     chunk_size=settings["chunk_size"])
    except KinflowError as ex:
        log.error(f"ensemble sampling failed: exception=({ex})")
        checks.append(CheckRecord.failed("ensemble_sampling", ex))
        return checks

    rows = []
    for test_id, f, g in _test_pairs(basis):
        stats = qi.ibp_statistics(f, g, ensemble, chart, basis, samples=samples)
        swapped = qi.ibp_statistics(g, f, ensemble, chart, basis, samples=samples)
        rows.append({"test-id": test_id, "lhs": stats["lhs"], "rhs": stats["rhs"], "stderr": stats["stderr"]})
        checks.append(CheckRecord(f"ibp_{test_id}", stats["passed"], abs(stats["lhs"] - stats["rhs"]),
                                  config["checks"]["n_stderr"] * stats["stderr"], "|lhs - rhs| against n stderr"))
        asymmetry = abs(swapped["lhs"] - stats["lhs"]) + abs(swapped["rhs"] - stats["rhs"])
        checks.append(CheckRecord.at_most(f"ibp_symmetric_{test_id}", asymmetry,
                                          1e-12 * max(1.0, abs(stats["lhs"]), abs(stats["rhs"]))))
    output.write_csv(out_dir, IBP_FILE_NAME, ["test-id", "lhs", "rhs", "stderr"], rows)

    ############# GENERATOR SECTION #############

    coordinate = CylinderFunction.coordinate(0)
    derivative = qi.generator_b_check(coordinate, ensemble, chart, basis, settings["t_list"], settings["N"],
                                      seed=config.seed + 1, threads=threads)
    output.write_csv(out_dir, GENERATOR_FILE_NAME, ["t", "slope", "stderr"], derivative["rows"])
    checks.append(CheckRecord("generator_derivative_at_zero", derivative["passed"],
                              abs(derivative["extrapolated"] - derivative["target"]),
                              config["checks"]["n_stderr"] * derivative["stderr"],
                              f"extrapolated {derivative['extrapolated']:.6g} against -<f delta> {derivative['target']:.6g}"))

    ############# ADJOINT SECTION #############

    try:
        adjoint = qi.adjoint_semigroup_check(CylinderFunction.coordinate(1), ensemble, chart, basis, ADJOINT_T,
                                             min(settings["N"], ADJOINT_MAX_SAMPLES), seed=config.seed + 2,
                                             threads=threads, ode_tol=settings["ode_tol"], step=settings["rk4_step"])
        checks.append(CheckRecord("adjoint_semigroup", adjoint["passed"], abs(adjoint["lhs"] - adjoint["rhs"]),
                                  config["checks"]["n_stderr"] * adjoint["stderr"], f"t={ADJOINT_T}"))
    except KinflowError as ex:
        log.error(f"adjoint check failed: exception=({ex})")
        checks.append(CheckRecord.failed("adjoint_semigroup", ex))

    log.info(f"fv-ibp finished: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return checks
