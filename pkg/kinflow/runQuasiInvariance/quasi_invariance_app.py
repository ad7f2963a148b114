import numpy as np

from .._Reference.ndjson_logging import setup_logging
from .._CustomClasses.CheckRecord import CheckRecord
from .._CustomClasses.CustomExceptions import KinflowError
from .._HelperFunctions import config_helpers as setup
from .._HelperFunctions import quasi_invariance_helpers as qi
from .._HelperFunctions import output_helpers as output

RN_FILE_NAME = "quasi_invariance.csv"
N_TIME_GROUPS = 10
N_COMPOSITION_POINTS = 5
# B is quadratic in u, so central differences are exact up to rounding
FD_FRACTION = 0.25

########################################################################################################################
#           fv-quasi-invariance
#
#           ABOUT:  Computes the density of mu o phi_{-t} against mu in two independent ways on points of a smooth
#           ensemble over the probability slice: by change of variables along the chart flow, and as the exponential of
#           minus the time integral of the divergence along the backward orbit. Checks their agreement, positivity,
#           the composition law, and the drift and its Jacobian at and around the ground state.
########################################################################################################################


def _drift_checks(chart, ensemble, basis, rng) -> list:
    checks = []
    B0, DB0 = qi.drift_in_chart(np.zeros(chart.dim), chart, basis, ensemble)
    checks.append(CheckRecord.at_most("drift_vanishes_at_ground_state", float(np.max(np.abs(B0))), 1e-14))
    expected_trace = float(np.sum(basis.lambdas[1:] - basis.lambdas[0]))
    checks.append(CheckRecord.at_most("drift_trace_at_ground_state",
                                      abs(float(np.trace(DB0)) - expected_trace) / abs(expected_trace), 1e-12,
                                      f"expected {expected_trace:.6g}"))
    errors = []
    for u in rng.uniform(-0.5, 0.5, size=(10, chart.dim)) * ensemble.widths:
        _, DB = qi.drift_in_chart(u, chart, basis, ensemble)
        columns = []
        for i in range(chart.dim):
            step = np.zeros(chart.dim)
            step[i] = FD_FRACTION * ensemble.widths[i]
            plus, _ = qi.drift_in_chart(u + step, chart, basis)
            minus, _ = qi.drift_in_chart(u - step, chart, basis)
            columns.append((plus - minus) / (2.0 * step[i]))
        fd = np.column_stack(columns)
        errors.append(float(np.max(np.abs(fd - DB)) / np.max(np.abs(DB))))
    checks.append(CheckRecord.at_most("drift_jacobian_matches_fd", max(errors), 1e-6))
    return checks


def app(config, out_dir: str) -> list:

    # sets up the logger
    log = setup_logging(__name__, log_to_file=False)
    checks = []
    thresholds = config["checks"]
    settings = config["ensemble"]

    ############# SETUP SECTION #############

    basis = setup.spectral_setup(config, J=settings["J"])
    chart = qi.build_chart(basis)
    ensemble = qi.build_ensemble(chart, basis, settings["widths"], config.seed)
    rng = np.random.default_rng(config.seed)
    checks.extend(_drift_checks(chart, ensemble, basis, rng))

    ############# RADON-NIKODYM SECTION #############

    group_size = max(1, settings["n_points"] // N_TIME_GROUPS)
    group_seeds = np.random.SeedSequence(config.seed).spawn(N_TIME_GROUPS)
    rows, composition = [], []
    try:
        for g, seed_seq in enumerate(group_seeds):
            t = settings["t_max"] * (g + 1) / N_TIME_GROUPS
            X = qi.sample_orbit_interior(ensemble, chart, basis, group_size, t, int(seed_seq.generate_state(1)[0]))
            by_jacobian = qi.rn_jacobian_batch(X, t, chart, ensemble, basis, settings["ode_tol"], settings["rk4_step"])
            by_formula = qi.rn_formula_batch(X, t, chart, ensemble, basis, settings["ode_tol"], settings["rk4_step"])
            for i in range(len(X)):
                rel_err = abs(by_jacobian[i] - by_formula[i]) / abs(by_jacobian[i])
                rows.append({"x-id": g * group_size + i, "t": t, "rn_jacobian": float(by_jacobian[i]),
                             "rn_formula": float(by_formula[i]), "rel_err": float(rel_err)})
            if g == N_TIME_GROUPS - 1:
                # split the longest horizon at its midpoint
                Y = X[:N_COMPOSITION_POINTS]
                half = 0.5 * t
                whole = qi.rn_formula_batch(Y, t, chart, ensemble, basis, settings["ode_tol"], settings["rk4_step"])
                first = qi.rn_formula_batch(Y, half, chart, ensemble, basis, settings["ode_tol"], settings["rk4_step"])
                moved = qi.chart_flow_exact(Y, -half, chart, basis)
                second = qi.rn_formula_batch(moved, half, chart, ensemble, basis, settings["ode_tol"], settings["rk4_step"])
                composition = np.abs(first * second - whole) / np.abs(whole)
    except KinflowError as ex:
        log.error(f"radon-nikodym comparison failed: exception=({ex})")
        checks.append(CheckRecord.failed("rn_cross_check", ex))
        return checks

    output.write_csv(out_dir, RN_FILE_NAME, ["x-id", "t", "rn_jacobian", "rn_formula", "rel_err"], rows)
    checks.append(CheckRecord.at_most("rn_cross_check", max(row["rel_err"] for row in rows), thresholds["rn_rel_tol"],
                                      f"{len(rows)} points, t up to {settings['t_max']}"))
    smallest = min(min(row["rn_jacobian"], row["rn_formula"]) for row in rows)
    checks.append(CheckRecord("rn_strictly_positive", smallest > 0.0, smallest, 0.0, "smallest density ratio"))
    checks.append(CheckRecord.at_most("rn_composition_law", float(np.max(composition)),
                                      thresholds["rn_composition_tol"]))

    log.info(f"fv-quasi-invariance finished: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return checks
