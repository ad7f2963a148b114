import logging
import numpy as np
from scipy import stats

from .._CustomClasses.PhaseGrid import PhaseGrid, DensityPath, DensityField
from .._CustomClasses.KineticParams import KineticParams
from .._CustomClasses.IterationReport import IterationReport
from .._CustomClasses.CustomExceptions import RegimeViolation, ConvergenceFailure, ShapeMismatch
from .._Reference.kinflow_info import FRECHET_DEFAULTS, RESIDUAL_FLOOR
from .phase_grid_helpers import path_norm, l1_norm, lattice_times
from .knudsen_helpers import transport_operator, steps_for
from .collision_helpers import collision_q, collision_q_adjoint
from .boltzmann_helpers import knudsen_path, duhamel, picard_solve, _check_lattice

logger = logging.getLogger(__name__)


def d1_psi(h: DensityField, params: KineticParams, grid: PhaseGrid) -> DensityPath:
    """first partial derivative of Psi: the path t -> S(t) h"""
    return knudsen_path(grid.check_field(h, "h"), params, grid)


def d2_psi(q: DensityPath, h: DensityPath, params: KineticParams, grid: PhaseGrid) -> DensityPath:
    """second partial derivative of Psi at q applied to h: 2 lam int_0^t S(t-s) Q(h(s), q(s)) ds"""
    times = lattice_times(params.T, params.dt)
    _check_lattice(q, times, grid)
    _check_lattice(h, times, grid)
    if params.lam == 0.0:
        return DensityPath.zeros(times, grid.shape)

    def source(k):
        return 2.0 * params.lam * collision_q(h[k], q[k], params.kernel, grid)

    return duhamel(np.zeros(grid.shape), source, params, grid)


def _derivative_loop(p: DensityPath, first: DensityPath, params: KineticParams, grid: PhaseGrid,
                     tol: float, max_terms: int = None):
    """iterates u = first + d2_psi(p, u); returns (u, report)"""
    report = IterationReport("neumann")
    u = first
    max_iter = FRECHET_DEFAULTS["max_iter"] if max_terms is None else max_terms
    for _ in range(max_iter):
        updated = first + d2_psi(p, u, params, grid)
        increment = path_norm(updated - u, grid)
        ratio = report.add(increment)
        u = updated
        if max_terms is None and increment < tol:
            report.converged = True
            break
        if ratio >= 1.0 and increment > RESIDUAL_FLOOR * max(1.0, path_norm(u, grid)):
            raise RegimeViolation(f"neumann increments grew (ratio={ratio:.4f}); lam={params.lam} outside the derivative regime")
    else:
        if max_terms is None:
            raise ConvergenceFailure(f"neumann series did not reach tol={tol} in {max_iter} terms")
    return u, report


def flow_derivative(p0: DensityField, h: DensityField, params: KineticParams, grid: PhaseGrid,
                    p: DensityPath = None, tol: float = None):
    """
    Derivative of the solution map p0 -> p(p0) applied to h, as the fixed point of u = d1_psi(h) + d2_psi(p, u)

    :param p0: base initial datum
    :param h: direction
    :param params: kinetic parameters
    :param grid: phase grid
    :param p: solution p(p0) when already available
    :param tol: stopping tolerance on the increment path norm
    :return: (derivative path, IterationReport of the increments)
    """
    if p is None:
        p, _ = picard_solve(p0, params, grid)
    tol = FRECHET_DEFAULTS["derivative_tol"] if tol is None else tol
    return _derivative_loop(p, d1_psi(h, params, grid), params, grid, tol)


def neumann_partial_sums(p0: DensityField, h: DensityField, params: KineticParams, grid: PhaseGrid,
                         k: int, p: DensityPath = None) -> DensityPath:
    """sum_{j=0}^{k} (d2_psi)^j d1_psi(h): the derivative truncated after k terms"""
    if p is None:
        p, _ = picard_solve(p0, params, grid)
    first = d1_psi(h, params, grid)
    if k == 0:
        return first
    u, _ = _derivative_loop(p, first, params, grid, tol=0.0, max_terms=k)
    return u


def fd_validate(p0: DensityField, h: DensityField, eps_list, params: KineticParams, grid: PhaseGrid,
                p: DensityPath = None) -> dict:
    """
    Finite-difference remainder of the derivative:
    r(eps) = ||p(p0 + eps h) - p(p0) - eps grad p(p0)(h)||_{1,T} / (eps ||h||)

    Return: {"rows": [{"eps", "remainder", "slope"}], "slope": log-log slope over all eps}
    """
    h_norm = l1_norm(h, grid)
    if h_norm == 0.0:
        raise ValueError("fd_validate needs a nonzero direction h")
    if p is None:
        p, _ = picard_solve(p0, params, grid)
    derivative, _ = flow_derivative(p0, h, params, grid, p=p)

    rows = []
    for eps in eps_list:
        perturbed, _ = picard_solve(p0 + eps * h, params, grid)
        remainder = path_norm(perturbed - p - eps * derivative, grid) / (eps * h_norm)
        slope = float("nan")
        if rows:
            slope = float(np.log(remainder / rows[-1]["remainder"]) / np.log(eps / rows[-1]["eps"]))
        rows.append({"eps": float(eps), "remainder": float(remainder), "slope": slope})
        logger.debug(f"fd remainder at eps={eps:.1e}: {remainder:.3e}")

    fit = stats.linregress(np.log([r["eps"] for r in rows]), np.log([r["remainder"] for r in rows]))
    return {"rows": rows, "slope": float(fit.slope)}


def _dual_apply_d2(p: DensityPath, W: np.ndarray, K: int, params: KineticParams, grid: PhaseGrid):
    """
    adjoint of the truncated d2_psi on slices 0..K; also returns Y_0 so that the adjoint of d1_psi is W_0 + Y_0
    """
    operator = transport_operator(grid, params.profile, params.dt)
    out = np.zeros_like(W)
    Y = np.zeros(grid.shape)
    for l in range(K - 1, -1, -1):
        Y = operator.adjoint_step(W[l + 1] + Y)
        if params.lam != 0.0:
            out[l] = 2.0 * params.lam * params.dt * collision_q_adjoint(p[l], Y, params.kernel, grid)
    return out, Y


def representer(nu: DensityField, t: float, g: DensityField, params: KineticParams, grid: PhaseGrid,
                p: DensityPath = None, n_random: int = None, seed: int = 0, tol: float = None):
    """
    Field R = gamma_t + Gamma_t with <grad p(nu)(h)(t), g> = <h, R> for all h

    gamma_t = g_S(t) is the Knudsen part; Gamma_t comes from the dual Neumann loop
    W = G + d2_psi^*(W) with G = g placed at time t.

    Return: (R, info) where info has gamma, Gamma, duality residuals on random h, the sup norm of R,
            the bound c + C (c = ||g||_inf, C = c rho / (1 - rho), rho = 4 lam T ||h|| ||B|| ||p||_{1,T})
            and the dual increment report
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"representer time must lie in [0, 1] (got {t})")
    K = steps_for(t, params.dt)
    if abs(K * params.dt - t) > 1e-9:
        raise ShapeMismatch(f"t={t} is not on the dt={params.dt} lattice")
    g = grid.check_field(g, "g")
    if p is None:
        p, _ = picard_solve(nu, params, grid)
    tol = FRECHET_DEFAULTS["derivative_tol"] if tol is None else tol
    n_random = FRECHET_DEFAULTS["n_random_h"] if n_random is None else n_random

    b_norm, h_norm = params.kernel_norms(grid)
    rho = 4.0 * params.lam * params.T * h_norm * b_norm * path_norm(p, grid)
    if rho >= 1.0:
        raise RegimeViolation(f"representer needs 4 lam T ||h|| ||B|| ||p|| < 1 (got {rho:.4f})")

    ############# DUAL NEUMANN LOOP #############
    G = np.zeros((K + 1,) + grid.shape)
    G[K] = g
    W = G.copy()
    report = IterationReport("dual-neumann")
    for _ in range(FRECHET_DEFAULTS["max_iter"]):
        applied, _ = _dual_apply_d2(p, W, K, params, grid)
        updated = G + applied
        increment = float(np.max(np.abs(updated - W)))
        report.add(increment)
        W = updated
        if increment < tol * max(1.0, float(np.max(np.abs(g)))):
            report.converged = True
            break
    else:
        raise ConvergenceFailure("dual neumann loop did not converge")

    _, Y0 = _dual_apply_d2(p, W, K, params, grid)
    R = W[0] + Y0
    _, gamma_y0 = _dual_apply_d2(p, G, K, params, grid)
    gamma = G[0] + gamma_y0
    Gamma = R - gamma

    ############# DUALITY CHECK #############
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(n_random):
        h = rng.uniform(-1.0, 1.0, size=grid.shape) + 0.5
        u, _ = flow_derivative(nu, h, params, grid, p=p)
        lhs = float(np.sum(u[K] * g * grid.weights))
        rhs = float(np.sum(h * R * grid.weights))
        scale = l1_norm(u[K], grid) * float(np.max(np.abs(g)))
        residuals.append(abs(lhs - rhs) / scale if scale > 0 else abs(lhs - rhs))

    c = float(np.max(np.abs(g)))
    bound = c + c * rho / (1.0 - rho)
    sup_norm = float(np.max(np.abs(R)))
    info = {"gamma": gamma, "Gamma": Gamma, "duality_residuals": residuals, "sup_norm": sup_norm,
            "c": c, "C": bound - c, "rho": rho, "bound": bound, "within_bound": sup_norm <= bound,
            "report": report}
    logger.info(f"representer at t={t}: sup={sup_norm:.6g}, bound={bound:.6g}, max duality residual={max(residuals, default=0.0):.3e}")
    return R, info
