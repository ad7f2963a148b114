import logging
import numpy as np
from scipy import integrate

from .._CustomClasses.SpectralBasis import SpectralBasis
from .._CustomClasses.SliceChart import SliceChart
from .._CustomClasses.EnsembleSpec import EnsembleSpec
from .._CustomClasses.CylinderFunction import CylinderFunction
from .._CustomClasses.CustomExceptions import SupportExit, SamplingError, ConvergenceFailure, ConfigError
from .._Reference.kinflow_info import ENSEMBLE_DEFAULTS, DENSITY_FLOOR, CHECK_DEFAULTS
from .spectral_flow_helpers import generator_af, generator_jacobian, cylinder_af
from .parallel_helpers import map_seeded_chunks

logger = logging.getLogger(__name__)

MIN_ACCEPTANCE = 0.01
MAX_DOUBLINGS = 12


############# CHART AND ENSEMBLE SECTION #############

def build_chart(basis: SpectralBasis) -> SliceChart:
    chart = SliceChart(basis)
    logger.debug(f"slice chart of dimension {chart.dim} at basepoint {chart.basepoint.tolist()}")
    return chart


def _backward_positive(ensemble: EnsembleSpec, chart: SliceChart, basis: SpectralBasis,
                       t_back: float, n_times: int) -> bool:
    # for fixed t the density sign is affine in u, so the box corners decide
    coeffs = chart.to_coeffs(ensemble.corners())
    for t in np.linspace(0.0, t_back, n_times):
        raw = np.exp(-(basis.lambdas - basis.lambdas[0]) * t) * coeffs
        z = raw @ basis.moments
        if np.any(z <= 0.0):
            return False
        if np.min((raw @ basis.eval_values) / z[:, None]) < DENSITY_FLOOR:
            return False
    return True


def build_ensemble(chart: SliceChart, basis: SpectralBasis, widths=None, seed: int = 0,
                   t_back: float = 1.0, n_times: int = 21, max_halvings: int = 30) -> EnsembleSpec:
    """
    Ensemble on the slice whose charted densities stay nonnegative under the backward flow to
    -t_back. Widths are halved (with a warning) until the corner check passes.
    """
    widths = ENSEMBLE_DEFAULTS["widths"] if widths is None else widths
    if len(widths) != chart.dim:
        raise ConfigError(f"need {chart.dim} ensemble widths for J={basis.J} (got {len(widths)})")
    ensemble = EnsembleSpec(widths, seed)
    for _ in range(max_halvings):
        if _backward_positive(ensemble, chart, basis, t_back, n_times):
            return ensemble
        logger.warning(f"ensemble widths {ensemble.widths.tolist()} leave the nonnegative cone "
                       f"under backward flow to t=-{t_back}; halving")
        ensemble = ensemble.shrunk(0.5)
    raise ConfigError(f"could not find ensemble widths with a nonnegative backward flow after {max_halvings} halvings")


############# DRIFT AND DIVERGENCE SECTION #############

def _drift_batch(U: np.ndarray, chart: SliceChart, basis: SpectralBasis) -> np.ndarray:
    return generator_af(chart.to_coeffs(U), basis) @ chart.tangent


def _trace_batch(U: np.ndarray, chart: SliceChart, basis: SpectralBasis) -> np.ndarray:
    """trace(N^T Da N) = (lam - z') . diag(P) - (N^T lam e) . u_c, with P = N N^T and u_c = N^T c"""
    C = chart.to_coeffs(U)
    lam_e = basis.lambdas * basis.moments
    zprime = C @ lam_e
    diag_p = chart.projector_diagonal
    return float(basis.lambdas @ diag_p) - zprime * float(np.sum(diag_p)) - (C @ chart.tangent) @ (chart.tangent.T @ lam_e)


def _require_inside(U: np.ndarray, ensemble: EnsembleSpec):
    if ensemble is not None and not np.all(ensemble.inside(U)):
        raise SupportExit(f"point(s) outside the ensemble support |u_j| < {ensemble.widths.tolist()}")


def drift_in_chart(u, chart: SliceChart, basis: SpectralBasis, ensemble: EnsembleSpec = None) -> tuple:
    """
    B(u) = N^T a(c(u)) and DB(u) = N^T Da(c(u)) N, with the analytic Jacobian of a
    """
    u = np.asarray(u, dtype=float)
    _require_inside(u, ensemble)
    c = chart.to_coeffs(u)
    B = generator_af(c, basis) @ chart.tangent
    DB = chart.tangent.T @ generator_jacobian(c, basis) @ chart.tangent
    return B, DB


def divergence_delta(u, chart: SliceChart, ensemble: EnsembleSpec, basis: SpectralBasis, drift=None):
    """
    delta(u) = div B(u) + B(u) . grad ln rho(u), so that int (grad f . B) rho = -int f delta rho.
    u may be a single point or a batch (n, dim). drift, when given, is a callable u -> (B, DB)
    replacing the spectral drift and is evaluated point by point.
    """
    u = np.asarray(u, dtype=float)
    _require_inside(u, ensemble)
    if drift is not None:
        points = u.reshape(-1, chart.dim)
        out = np.empty(len(points))
        for i, point in enumerate(points):
            B, DB = drift(point)
            out[i] = np.trace(DB) + np.asarray(B) @ ensemble.grad_log_density(point)
        return out.reshape(u.shape[:-1]) if u.ndim > 1 else float(out[0])
    points = np.atleast_2d(u)
    B = _drift_batch(points, chart, basis)
    delta = _trace_batch(points, chart, basis) + np.sum(B * ensemble.grad_log_density(points), axis=-1)
    return delta if u.ndim > 1 else float(delta[0])


############# CHART FLOW SECTION #############

def _rk4(rhs, y0: np.ndarray, h: float, n_steps: int, record: bool = False):
    y = np.array(y0, dtype=float)
    path = [y] if record else None
    for _ in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if record:
            path.append(y)
    return np.stack(path) if record else y


def chart_flow_exact(U, t: float, chart: SliceChart, basis: SpectralBasis) -> np.ndarray:
    """phi_t on the slice through the closed-form spectral flow (no positivity check)"""
    C = chart.to_coeffs(np.atleast_2d(U))
    raw = np.exp((basis.lambdas - basis.lambdas[0]) * t) * C
    out = chart.to_chart(raw / (raw @ basis.moments)[:, None])
    return out if np.ndim(U) > 1 else out[0]


def _even_steps(t: float, step: float) -> int:
    n = int(np.ceil(abs(t) / step - 1e-9))
    return max(2, n + (n % 2))


def _step_doubled(compute, t: float, step: float, tol: float):
    """evaluates compute(n) with n and 2n steps until the relative change is below tol"""
    n = _even_steps(t, step)
    coarse = compute(n)
    for _ in range(MAX_DOUBLINGS):
        fine = compute(2 * n)
        usable = np.isfinite(fine) & np.isfinite(coarse) & (fine != 0.0)
        change = float(np.max(np.abs(fine[usable] - coarse[usable]) / np.abs(fine[usable]), initial=0.0))
        if change <= tol:
            return fine
        coarse, n = fine, 2 * n
    raise ConvergenceFailure(f"chart flow with {n} steps still changes by {change:.3e} > tol={tol}")


def _backward_path(X: np.ndarray, t: float, n_steps: int, chart: SliceChart, basis: SpectralBasis) -> np.ndarray:
    return _rk4(lambda U: _drift_batch(U, chart, basis), X, -t / n_steps, n_steps, record=True)


def _exit_mask(path: np.ndarray, ensemble: EnsembleSpec) -> np.ndarray:
    return ~np.all(ensemble.inside(path), axis=0)


def rn_jacobian_batch(X, t: float, chart: SliceChart, ensemble: EnsembleSpec, basis: SpectralBasis,
                      ode_tol: float = None, step: float = None, allow_exit: bool = False) -> np.ndarray:
    """
    Density of mu o phi_{-t} against mu at each row of X by change of variables: integrate back to
    y = phi_{-t}(x), then carry the log-Jacobian forward from y. Rows whose backward orbit leaves
    the support give nan, or 0 with allow_exit (where rho(y) = 0 would apply).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _require_inside(X, ensemble)
    if t == 0.0:
        return np.ones(len(X))
    ode_tol = ENSEMBLE_DEFAULTS["ode_tol"] if ode_tol is None else ode_tol
    step = ENSEMBLE_DEFAULTS["rk4_step"] if step is None else step
    dim = chart.dim

    def augmented(Y):
        U = Y[:, :dim]
        return np.column_stack([_drift_batch(U, chart, basis), _trace_batch(U, chart, basis)])

    def compute(n_steps):
        path = _backward_path(X, t, n_steps, chart, basis)
        Y = path[-1]
        forward = _rk4(augmented, np.column_stack([Y, np.zeros(len(Y))]), t / n_steps, n_steps)
        log_r = ensemble.log_density_unnormalized(Y) - ensemble.log_density_unnormalized(X) - forward[:, dim]
        exited = _exit_mask(path, ensemble)
        return np.where(exited, 0.0 if allow_exit else np.nan, np.exp(np.where(exited, 0.0, log_r)))

    return _step_doubled(compute, t, step, ode_tol)


def rn_formula_batch(X, t: float, chart: SliceChart, ensemble: EnsembleSpec, basis: SpectralBasis,
                     ode_tol: float = None, step: float = None) -> np.ndarray:
    """exp(-int_0^t delta(phi_{-s} x) ds), Simpson rule on the nodes of the backward RK4 path"""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _require_inside(X, ensemble)
    if t == 0.0:
        return np.ones(len(X))
    ode_tol = ENSEMBLE_DEFAULTS["ode_tol"] if ode_tol is None else ode_tol
    step = ENSEMBLE_DEFAULTS["rk4_step"] if step is None else step

    def compute(n_steps):
        path = _backward_path(X, t, n_steps, chart, basis)
        exited = _exit_mask(path, ensemble)
        safe = np.where(exited[None, :, None], X[None, :, :], path)
        deltas = np.stack([divergence_delta(nodes, chart, ensemble, basis) for nodes in safe])
        integral = integrate.simpson(deltas, dx=t / n_steps, axis=0)
        return np.where(exited, np.nan, np.exp(-integral))

    return _step_doubled(compute, t, step, ode_tol)


def _single(values: np.ndarray, x, t: float) -> float:
    if np.isnan(values[0]):
        raise SupportExit(f"backward orbit of {np.asarray(x).tolist()} leaves the support before t={t}")
    return float(values[0])


def rn_jacobian(x, t: float, chart: SliceChart, ensemble: EnsembleSpec, basis: SpectralBasis,
                ode_tol: float = None, step: float = None) -> float:
    return _single(rn_jacobian_batch(x, t, chart, ensemble, basis, ode_tol, step), x, t)


def rn_formula(x, t: float, chart: SliceChart, ensemble: EnsembleSpec, basis: SpectralBasis,
               ode_tol: float = None, step: float = None) -> float:
    return _single(rn_formula_batch(x, t, chart, ensemble, basis, ode_tol, step), x, t)


############# SAMPLING SECTION #############

def sample_ensemble(ensemble: EnsembleSpec, n: int, seed: int = None, threads: int = 1,
                    chunk_size: int = None, interior_quantile: float = 0.0) -> np.ndarray:
    """
    Rejection sampling from the bump density with a uniform proposal on the box, one RNG stream
    per chunk. interior_quantile > 0 drops samples whose density lies below that quantile.
    """
    seed = ensemble.seed if seed is None else seed
    chunk_size = ENSEMBLE_DEFAULTS["chunk_size"] if chunk_size is None else chunk_size
    log_max = ensemble.max_log_density_unnormalized

    def draw(size, stream):
        rng = np.random.default_rng(stream)
        batch = max(4 * size, 1024)
        kept, count, proposed = [], 0, 0
        while count < size:
            U = rng.uniform(-1.0, 1.0, (batch, ensemble.dim)) * ensemble.widths
            accept = rng.random(batch) < np.exp(ensemble.log_density_unnormalized(U) - log_max)
            proposed += batch
            kept.append(U[accept])
            count += int(np.sum(accept))
            if count / proposed < MIN_ACCEPTANCE:
                raise SamplingError(f"acceptance rate {count / proposed:.4f} below {MIN_ACCEPTANCE}; "
                                    f"ensemble support is misconfigured")
        return np.concatenate(kept)[:size]

    samples = np.concatenate(map_seeded_chunks(draw, n, seed, chunk_size, threads))
    if interior_quantile > 0.0:
        log_rho = ensemble.log_density_unnormalized(samples)
        samples = samples[log_rho >= np.quantile(log_rho, interior_quantile)]
    return samples


def sample_orbit_interior(ensemble: EnsembleSpec, chart: SliceChart, basis: SpectralBasis, n: int,
                          t_max: float, seed: int = None, margin: float = 0.8, n_checks: int = 8,
                          max_rounds: int = 50) -> np.ndarray:
    """
    n ensemble samples whose exact backward orbit stays within margin of the support up to t_max,
    checked at n_checks times.
    """
    seed = ensemble.seed if seed is None else seed
    check_times = np.linspace(0.0, t_max, n_checks + 1)
    batch = max(20 * n, 20000)
    found = []
    for round_seed in np.random.SeedSequence(seed).spawn(max_rounds):
        candidates = sample_ensemble(ensemble, batch, seed=round_seed.generate_state(1)[0])
        keep = np.ones(len(candidates), dtype=bool)
        for s in check_times:
            keep &= ensemble.inside(chart_flow_exact(candidates, -s, chart, basis), margin)
        found.append(candidates[keep])
        if sum(len(block) for block in found) >= n:
            return np.concatenate(found)[:n]
    raise SamplingError(f"found fewer than {n} points whose backward orbit to t={t_max} stays inside")


############# MONTE CARLO CHECKS SECTION #############

def _mean_and_stderr(values: np.ndarray) -> tuple:
    return float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(len(values)))


def _draw_checked(ensemble, N, seed, threads):
    if N < 2:
        raise ValueError(f"need at least two Monte Carlo samples (got N={N})")
    return sample_ensemble(ensemble, N, seed=seed, threads=threads)


def ibp_statistics(f: CylinderFunction, g: CylinderFunction, ensemble: EnsembleSpec, chart: SliceChart,
                   basis: SpectralBasis, N: int = None, seed: int = None, threads: int = 1,
                   samples: np.ndarray = None) -> dict:
    """
    Monte Carlo estimate of both sides of -<Af, g> - <Ag, f> = <delta f, g> under mu
    """
    N = ENSEMBLE_DEFAULTS["N"] if N is None else N
    U = _draw_checked(ensemble, N, seed, threads) if samples is None else samples
    C = chart.to_coeffs(U)
    fv, gv = f.value(C), g.value(C)
    lhs = -(cylinder_af(f, C, basis) * gv + cylinder_af(g, C, basis) * fv)
    rhs = divergence_delta(U, chart, ensemble, basis) * fv * gv
    lhs_mean, lhs_err = _mean_and_stderr(lhs)
    rhs_mean, rhs_err = _mean_and_stderr(rhs)
    _, diff_err = _mean_and_stderr(lhs - rhs)
    n_stderr = CHECK_DEFAULTS["n_stderr"]
    passed = abs(lhs_mean - rhs_mean) <= n_stderr * diff_err
    if not passed:
        logger.warning(f"integration by parts for ({f.name}, {g.name}) off by {abs(lhs_mean - rhs_mean):.3e} "
                       f"> {n_stderr} x {diff_err:.3e}")
    return {"lhs": lhs_mean, "rhs": rhs_mean, "stderr": diff_err, "stderr_lhs": lhs_err,
            "stderr_rhs": rhs_err, "n_samples": int(len(U)), "passed": bool(passed)}


def ibp_check(f: CylinderFunction, g: CylinderFunction, ensemble: EnsembleSpec, chart: SliceChart,
              basis: SpectralBasis, N: int = None, seed: int = None, threads: int = 1) -> tuple:
    """(lhs, rhs, stderr) with stderr the standard error of the per-sample difference"""
    stats = ibp_statistics(f, g, ensemble, chart, basis, N, seed, threads)
    return stats["lhs"], stats["rhs"], stats["stderr"]


def divergence_identity_check(f: CylinderFunction, ensemble: EnsembleSpec, chart: SliceChart,
                              basis: SpectralBasis, N: int = None, seed: int = None, threads: int = 1) -> dict:
    """<grad f . B> + <f delta> = 0 within Monte Carlo error"""
    return ibp_statistics(f, CylinderFunction.constant(1.0), ensemble, chart, basis, N, seed, threads)


def _flow_coeffs(C: np.ndarray, t: float, basis: SpectralBasis) -> np.ndarray:
    raw = np.exp((basis.lambdas - basis.lambdas[0]) * t) * C
    return raw / (raw @ basis.moments)[:, None]


def generator_b_check(f: CylinderFunction, ensemble: EnsembleSpec, chart: SliceChart, basis: SpectralBasis,
                      t_list=None, N: int = None, seed: int = None, threads: int = 1) -> dict:
    """
    d/dt at 0 of int f(nu_t) dmu against -<f delta>. Per-sample difference quotients over t_list
    are extrapolated linearly to t = 0 on common samples.
    """
    t_list = np.asarray(ENSEMBLE_DEFAULTS["t_list"] if t_list is None else t_list, dtype=float)
    if len(t_list) < 2 or np.any(t_list <= 0.0):
        raise ValueError(f"need at least two positive times (got {t_list.tolist()})")
    N = ENSEMBLE_DEFAULTS["N"] if N is None else N
    U = _draw_checked(ensemble, N, seed, threads)
    C = chart.to_coeffs(U)
    f0 = f.value(C)
    quotients = np.stack([(f.value(_flow_coeffs(C, t, basis)) - f0) / t for t in t_list])
    intercept_weights = np.linalg.pinv(np.column_stack([np.ones(len(t_list)), t_list]))[0]
    extrapolated = intercept_weights @ quotients
    target = -f0 * divergence_delta(U, chart, ensemble, basis)
    rows = []
    for t, quotient in zip(t_list, quotients):
        mean, err = _mean_and_stderr(quotient)
        rows.append({"t": float(t), "slope": mean, "stderr": err})
    slope, _ = _mean_and_stderr(extrapolated)
    target_mean, _ = _mean_and_stderr(target)
    _, diff_err = _mean_and_stderr(extrapolated - target)
    passed = abs(slope - target_mean) <= CHECK_DEFAULTS["n_stderr"] * diff_err
    return {"rows": rows, "extrapolated": slope, "target": target_mean, "stderr": diff_err,
            "passed": bool(passed)}


def adjoint_semigroup_check(g: CylinderFunction, ensemble: EnsembleSpec, chart: SliceChart, basis: SpectralBasis,
                            t: float, N: int = None, seed: int = None, threads: int = 1,
                            ode_tol: float = None, step: float = None) -> dict:
    """
    <g(nu_t)>_mu against <g r_{-t}>_mu, with r_{-t} = 0 where the backward orbit leaves the support.
    Assumes the forward flow maps the support into itself.
    """
    N = ENSEMBLE_DEFAULTS["N"] if N is None else N
    U = _draw_checked(ensemble, N, seed, threads)
    C = chart.to_coeffs(U)
    pushed = g.value(_flow_coeffs(C, t, basis))
    weighted = g.value(C) * rn_jacobian_batch(U, t, chart, ensemble, basis, ode_tol, step, allow_exit=True)
    lhs, _ = _mean_and_stderr(pushed)
    rhs, _ = _mean_and_stderr(weighted)
    _, diff_err = _mean_and_stderr(pushed - weighted)
    return {"t": float(t), "lhs": lhs, "rhs": rhs, "stderr": diff_err,
            "passed": bool(abs(lhs - rhs) <= CHECK_DEFAULTS["n_stderr"] * diff_err)}
