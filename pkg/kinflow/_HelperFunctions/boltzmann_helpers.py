import logging
import numpy as np

from .._CustomClasses.PhaseGrid import PhaseGrid, DensityPath, DensityField
from .._CustomClasses.KineticParams import KineticParams
from .._CustomClasses.IterationReport import IterationReport
from .._CustomClasses.CustomExceptions import RegimeViolation, ConvergenceFailure, ShapeMismatch
from .._Reference.kinflow_info import RESIDUAL_FLOOR
from .phase_grid_helpers import path_norm, l1_norm, lattice_times
from .knudsen_helpers import transport_operator
from .collision_helpers import collision_q

logger = logging.getLogger(__name__)

LAMBDA_MODES = ["a", "b", "c", "d", "bound"]


def _check_lattice(q: DensityPath, times: np.ndarray, grid: PhaseGrid):
    if len(q) != len(times) or not np.allclose(q.times, times, rtol=0.0, atol=1e-12):
        raise ShapeMismatch(f"path has {len(q)} slices, the lattice of the params has {len(times)}")
    if q.values.shape[1:] != grid.shape:
        raise ShapeMismatch(f"path slices have shape {q.values.shape[1:]}, grid expects {grid.shape}")


def knudsen_path(p0: DensityField, params: KineticParams, grid: PhaseGrid) -> DensityPath:
    """the path t -> S(t) p0 on the lattice of params"""
    times = lattice_times(params.T, params.dt)
    operator = transport_operator(grid, params.profile, params.dt)
    values = np.empty((len(times),) + grid.shape)
    values[0] = grid.check_field(p0, "p0")
    for k in range(1, len(times)):
        values[k] = operator.step(values[k - 1])
    return DensityPath(times, values)


def duhamel(initial: DensityField, source, params: KineticParams, grid: PhaseGrid) -> DensityPath:
    """
    initial propagated by S plus the left-endpoint Duhamel sum of source(k) for k = 0 .. N-1:
    slice_k = S(slice_{k-1} + dt * source(k-1))
    """
    times = lattice_times(params.T, params.dt)
    operator = transport_operator(grid, params.profile, params.dt)
    values = np.empty((len(times),) + grid.shape)
    values[0] = initial
    for k in range(1, len(times)):
        increment = source(k - 1)
        values[k] = operator.step(values[k - 1] if increment is None else values[k - 1] + params.dt * increment)
    return DensityPath(times, values)


def psi(p0: DensityField, q: DensityPath, params: KineticParams, grid: PhaseGrid) -> DensityPath:
    """
    The mild-form map Psi(p0, q)(t) = S(t) p0 + lam * int_0^t S(t-s) Q(q, q)(s) ds on the dt lattice
    """
    p0 = grid.check_field(p0, "p0")
    _check_lattice(q, lattice_times(params.T, params.dt), grid)
    if params.lam == 0.0:
        return knudsen_path(p0, params, grid)

    def source(k):
        return params.lam * collision_q(q[k], q[k], params.kernel, grid)

    return duhamel(p0, source, params, grid)


def admissible_lambda(mode: str, T: float, b_norm: float, h_norm: float, p_min: float = None,
                      p_max: float = None, delta: float = None, beta: float = None,
                      alpha: float = None, q_max: float = None) -> float:
    """
    Largest collision strength certified by a regime

    Parameters
    ------------
    mode: "a"     -> 1 / (16 T ||h|| ||B||), the ball-of-radius-2 regime
          "b"/"d" -> (p_min / 4) / (T ||h|| ||B|| (p_max + p_min / 2)); "d" also certifies the 2/3 contraction
          "c"     -> delta / (4 beta T ||h|| ||B||), contraction delta on paths of norm <= beta
          "bound" -> (p_min - alpha) / (T ||h|| ||B|| q_max), keeps Psi above the floor alpha
    T: horizon
    b_norm, h_norm: sup norms of the kernel and the mollifier
    """
    if mode not in LAMBDA_MODES:
        raise ValueError(f"unknown lambda mode '{mode}' (known: {LAMBDA_MODES})")
    if T <= 0 or b_norm <= 0 or h_norm <= 0:
        raise ValueError(f"need positive T, ||B||, ||h|| (got {T}, {b_norm}, {h_norm})")
    hb = h_norm * b_norm

    if mode == "a":
        return 1.0 / (16.0 * T * hb)
    if mode == "c":
        if delta is None or beta is None or not 0 < delta <= 1 or beta <= 0:
            raise ValueError(f"mode c needs 0 < delta <= 1 and beta > 0 (got delta={delta}, beta={beta})")
        return delta / (4.0 * beta * T * hb)
    if p_min is None or p_min <= 0:
        raise ValueError(f"mode {mode} needs p_min > 0 (got {p_min})")
    if mode == "bound":
        if alpha is None or q_max is None or alpha >= p_min or q_max <= 0:
            raise ValueError(f"mode bound needs alpha < p_min and q_max > 0 (got alpha={alpha}, q_max={q_max})")
        return (p_min - alpha) / (T * hb * q_max)
    if p_max is None or p_max < p_min:
        raise ValueError(f"mode {mode} needs p_max >= p_min (got p_max={p_max})")
    return 0.25 * p_min / (T * hb * (p_max + 0.5 * p_min))


def knudsen_bounds(p0: DensityField, params: KineticParams, grid: PhaseGrid) -> tuple:
    """(p_min, p_max) of the Knudsen path of p0 over the lattice on [0, T]"""
    path = knudsen_path(p0, params, grid)
    return float(np.min(path.values)), float(np.max(path.values))


def picard_solve(p0: DensityField, params: KineticParams, grid: PhaseGrid, initial: DensityPath = None):
    """
    Picard iteration p(n) = Psi(p0, p(n-1)) starting from the time-constant path p0

    :param p0: initial datum
    :param params: kinetic parameters (lam, T, dt, tol, max_iter)
    :param grid: the phase grid
    :param initial: optional starting path (defaults to p0 constant in time)
    :return: (solution path, IterationReport)
    """
    params.validate(grid)
    p0 = grid.check_field(p0, "p0")
    times = lattice_times(params.T, params.dt)
    current = DensityPath.constant(p0, times) if initial is None else initial
    report = IterationReport("picard")

    for _ in range(params.max_iter):
        updated = psi(p0, current, params, grid)
        residual = path_norm(updated - current, grid)
        ratio = report.add(residual)
        logger.debug(f"picard iteration {report.iterations}: residual={residual:.3e}, ratio={ratio:.4f}")
        current = updated
        if residual < params.tol:
            report.converged = True
            break
        scale = max(1.0, path_norm(current, grid))
        if ratio >= 1.0 and residual > RESIDUAL_FLOOR * scale:
            raise RegimeViolation(f"picard residual grew (ratio={ratio:.4f} at iteration {report.iterations}); lam={params.lam} is outside the contraction regime")
    else:
        raise ConvergenceFailure(f"picard iteration did not reach tol={params.tol} in {params.max_iter} iterations (last residual {report.residuals[-1]:.3e})")

    report.final_residual = path_norm(psi(p0, current, params, grid) - current, grid)
    logger.info(f"picard converged in {report.iterations} iterations, max ratio {report.max_ratio:.4f}, fixed-point residual {report.final_residual:.3e}")
    return current, report


def contraction_probe(p0: DensityField, q1: DensityPath, q2: DensityPath, params: KineticParams, grid: PhaseGrid) -> float:
    """||Psi(p0, q1) - Psi(p0, q2)||_{1,T} / ||q1 - q2||_{1,T}"""
    denominator = path_norm(q1 - q2, grid)
    if denominator == 0.0:
        raise ValueError("contraction_probe needs two different paths")
    return path_norm(psi(p0, q1, params, grid) - psi(p0, q2, params, grid), grid) / denominator


def psi_norm_bound(p0: DensityField, q: DensityPath, params: KineticParams, grid: PhaseGrid) -> float:
    """a-priori bound ||p0|| + 2 lam T ||h|| ||B|| ||q||_{1,T}^2 on ||Psi(p0, q)||_{1,T}"""
    b_norm, h_norm = params.kernel_norms(grid)
    return l1_norm(p0, grid) + 2.0 * params.lam * params.T * h_norm * b_norm * path_norm(q, grid) ** 2


def psi_continuity_bound(p0: DensityField, p0_other: DensityField, q1: DensityPath, q2: DensityPath,
                         params: KineticParams, grid: PhaseGrid) -> float:
    """right-hand side of ||Psi(p0,q1) - Psi(p0',q2)|| <= ||p0-p0'|| + 2 lam T ||h|| ||B|| ||q1+q2|| ||q1-q2||"""
    b_norm, h_norm = params.kernel_norms(grid)
    return (l1_norm(p0 - p0_other, grid)
            + 2.0 * params.lam * params.T * h_norm * b_norm * path_norm(q1 + q2, grid) * path_norm(q1 - q2, grid))


def lower_bound_check(p0: DensityField, q: DensityPath, params: KineticParams, grid: PhaseGrid) -> float:
    """
    Smallest margin of Psi(p0, q)(t) over the floor p_min - lam t ||h|| ||B|| q_max, with p_min the
    minimum of the Knudsen path; a nonnegative result means the floor holds on the whole lattice
    """
    b_norm, h_norm = params.kernel_norms(grid)
    p_min, _ = knudsen_bounds(p0, params, grid)
    q_max = float(np.max(np.abs(q.values)))
    path = psi(p0, q, params, grid)
    floors = p_min - params.lam * path.times * h_norm * b_norm * q_max
    return float(np.min(np.min(path.values, axis=(1, 2)) - floors))


def bound_violations(path: DensityPath, p_min: float, p_max: float, tol: float = RESIDUAL_FLOOR) -> int:
    """number of path entries outside [p_min / 2, p_max + p_min / 2], up to tol"""
    low, high = 0.5 * p_min, p_max + 0.5 * p_min
    values = path.values
    return int(np.count_nonzero(values < low - tol) + np.count_nonzero(values > high + tol))
