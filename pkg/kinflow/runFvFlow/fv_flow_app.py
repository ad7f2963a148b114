import numpy as np

from .._Reference.ndjson_logging import setup_logging
from .._CustomClasses.CheckRecord import CheckRecord
from .._CustomClasses.CustomExceptions import KinflowError
from .._HelperFunctions import config_helpers as setup
from .._HelperFunctions import spectral_flow_helpers as spectral
from .._HelperFunctions import output_helpers as output

TRAJECTORY_FILE_NAME = "fv_flow.csv"

########################################################################################################################
#           fv-flow
#
#           ABOUT:  Runs the Fleming-Viot spectral flow from the configured initial coefficients, writes the trajectory
#           (t, c_1..c_J, z, z') and checks the flow laws: probability normalization, the semigroup and backward
#           inverse laws, mass neutrality of the generator, the bound on z', the tangent law and the decay rate
#           toward the ground state.
########################################################################################################################


def app(config, out_dir: str) -> list:

    # sets up the logger
    log = setup_logging(__name__, log_to_file=False)
    checks = []
    thresholds = config["checks"]
    settings = config["spectral"]

    ############# SETUP SECTION #############

    basis = setup.spectral_setup(config)
    c0 = setup.initial_coefficients(config, basis)
    times = np.linspace(0.0, settings["t_max"], settings["n_times"])

    ############# TRAJECTORY SECTION #############

    try:
        rows = spectral.trajectory(c0, times, basis)
    except KinflowError as ex:
        log.error(f"flow failed: exception=({ex})")
        checks.append(CheckRecord.failed("trajectory_computed", ex))
        return checks
    header = ["t"] + [f"c_{j + 1}" for j in range(basis.J)] + ["z", "zprime"]
    output.write_csv(out_dir, TRAJECTORY_FILE_NAME, header, rows)

    ############# CHECKS SECTION #############

    states = np.array([[row[f"c_{j + 1}"] for j in range(basis.J)] for row in rows])
    checks.append(CheckRecord.at_most("probability_preserved", float(np.max(np.abs(states @ basis.moments - 1.0))),
                                      thresholds["semigroup_tol"]))

    s, t = 0.3 * settings["t_max"], 0.5 * settings["t_max"]
    composed = spectral.flow(spectral.flow(c0, s, basis), t, basis)
    checks.append(CheckRecord.at_most("semigroup_law", float(np.max(np.abs(composed - spectral.flow(c0, s + t, basis)))),
                                      thresholds["semigroup_tol"]))
    later = spectral.flow(c0, t, basis)
    try:
        restored = spectral.flow(spectral.flow(later, -t, basis), t, basis)
        checks.append(CheckRecord.at_most("backward_inverse_law", float(np.max(np.abs(restored - later))),
                                          thresholds["semigroup_tol"]))
    except KinflowError as ex:
        checks.append(CheckRecord.failed("backward_inverse_law", ex))

    neutrality = max(abs(float(spectral.generator_af(c, basis) @ basis.moments)) for c in states)
    checks.append(CheckRecord.at_most("generator_mass_neutral", neutrality, thresholds["generator_mass_tol"]))
    excess = max(abs(float(c @ (basis.lambdas * basis.moments))) - spectral.zprime_bound(c, basis) for c in states)
    checks.append(CheckRecord.at_most("zprime_bound", excess, 0.0, "largest |z'| minus its bound"))
    checks.append(CheckRecord.at_most("flow_tangent_law", spectral.flow_tangent_residual(c0, t, basis), 1e-6))

    leading = [j for j in range(1, basis.J) if c0[j] != 0.0]
    if leading:
        expected = float(basis.lambdas[leading[0]] - basis.lambdas[0])
        observed = spectral.decay_rate(c0, 0.5 * settings["t_max"], settings["t_max"], basis)
        checks.append(CheckRecord.at_most("ground_state_decay_rate", abs(observed - expected) / abs(expected),
                                          thresholds["decay_rel_tol"], f"observed {observed:.6g}, expected {expected:.6g}"))
    else:
        log.warning("initial coefficients are already the ground state; decay rate not checked")

    log.info(f"fv-flow finished: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return checks
