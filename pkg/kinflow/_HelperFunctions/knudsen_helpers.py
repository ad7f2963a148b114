import logging
import math
import numpy as np
from scipy import sparse

from .._CustomClasses.PhaseGrid import PhaseGrid, DensityField, WALL_BOTTOM, WALL_TOP, WALL_LEFT, WALL_RIGHT
from .._CustomClasses.BoundaryProfile import BoundaryProfile
from .._CustomClasses.CustomExceptions import DiscretizationError, ConvergenceFailure
from .phase_grid_helpers import uniform_density, mass, l1_norm

logger = logging.getLogger(__name__)

_OPERATOR_CACHE = {}
_CACHE_LIMIT = 16


class TransportOperator:
    """
    One Knudsen transport step as a sparse matrix acting on flattened fields (index s * n_vel + k).

    Targets whose backward foot stays inside the hull of the cell centres are interpolated bilinearly.
    All other targets are fed by the boundary patch their backward ray hits. The mass each source
    loses through a patch (its interpolation weights that no target picked up) is re-emitted at that
    patch with profile M, scaled by a fixed per-patch factor so injected mass equals exited mass.
    """

    def __init__(self, grid: PhaseGrid, profile: BoundaryProfile, dt: float):
        if dt <= 0.0:
            raise DiscretizationError(f"transport step needs dt > 0 (got {dt})")
        if dt * grid.v_max >= grid.min_cell_size:
            raise DiscretizationError(
                f"single-crossing bound violated: dt*v_max = {dt * grid.v_max} >= min cell size {grid.min_cell_size}")
        self.grid = grid
        self.profile = profile
        self.dt = float(dt)
        self.matrix = _assemble_transport_matrix(grid, profile, self.dt)
        w = grid.weights.ravel()
        # adjoint with respect to the grid-weighted inner product
        self.adjoint_matrix = (sparse.diags(1.0 / w) @ self.matrix.T @ sparse.diags(w)).tocsr()

    def step(self, field: DensityField) -> DensityField:
        return (self.matrix @ field.ravel()).reshape(self.grid.shape)

    def adjoint_step(self, field: DensityField) -> DensityField:
        return (self.adjoint_matrix @ field.ravel()).reshape(self.grid.shape)


def _wall_patch(grid: PhaseGrid, wall: np.ndarray, hit_x: np.ndarray, hit_y: np.ndarray) -> np.ndarray:
    # patch ordering matches PhaseGrid: (bottom, top) per column, then (left, right) per row
    ix = np.clip(np.floor(hit_x / grid.dx).astype(int), 0, grid.nx - 1)
    iy = np.clip(np.floor(hit_y / grid.dy).astype(int), 0, grid.ny - 1)
    return np.select(
        [wall == WALL_BOTTOM, wall == WALL_TOP, wall == WALL_LEFT],
        [2 * ix, 2 * ix + 1, 2 * grid.nx + 2 * iy],
        default=2 * grid.nx + 2 * iy + 1,
    )


def _first_wall_hit(grid: PhaseGrid, x: np.ndarray, y: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """patch index where the ray x + s*direction (s > 0) first meets the boundary"""
    dx_, dy_ = direction
    tiny = 1e-14
    if dx_ > tiny:
        tau_x, wall_x = (grid.lx - x) / dx_, WALL_RIGHT
    elif dx_ < -tiny:
        tau_x, wall_x = x / (-dx_), WALL_LEFT
    else:
        tau_x, wall_x = np.full_like(x, np.inf), WALL_RIGHT
    if dy_ > tiny:
        tau_y, wall_y = (grid.ly - y) / dy_, WALL_TOP
    elif dy_ < -tiny:
        tau_y, wall_y = y / (-dy_), WALL_BOTTOM
    else:
        tau_y, wall_y = np.full_like(y, np.inf), WALL_TOP
    use_x = tau_x <= tau_y
    tau = np.where(use_x, tau_x, tau_y)
    wall = np.where(use_x, wall_x, wall_y)
    return _wall_patch(grid, wall, x + tau * dx_, y + tau * dy_)


def _assemble_transport_matrix(grid: PhaseGrid, profile: BoundaryProfile, dt: float) -> sparse.csr_matrix:
    n_s, n_v = grid.shape
    w = grid.weights.ravel()
    X, Y = grid.space_points[:, 0], grid.space_points[:, 1]
    x_lo, x_hi = 0.5 * grid.dx, grid.lx - 0.5 * grid.dx
    y_lo, y_hi = 0.5 * grid.dy, grid.ly - 0.5 * grid.dy
    slack = 1e-12 * grid.min_cell_size

    rows, cols, vals = [], [], []
    emit_targets = [[] for _ in range(grid.n_patch)]   # (flat target, velocity node)
    exit_sources = [[] for _ in range(grid.n_patch)]   # (flat source, lost weight)

    for k in range(n_v):
        v = grid.velocities[k]
        fx, fy = X - v[0] * dt, Y - v[1] * dt
        inside = (fx >= x_lo - slack) & (fx <= x_hi + slack) & (fy >= y_lo - slack) & (fy <= y_hi + slack)

        ############# INTERIOR (bilinear) #############
        gx = np.clip(fx / grid.dx - 0.5, 0.0, grid.nx - 1.0)
        gy = np.clip(fy / grid.dy - 0.5, 0.0, grid.ny - 1.0)
        i0 = np.minimum(np.floor(gx).astype(int), grid.nx - 2)
        j0 = np.minimum(np.floor(gy).astype(int), grid.ny - 2)
        tx, ty = gx - i0, gy - j0
        targets = np.nonzero(inside)[0]
        received = np.zeros(n_s)
        for di, dj, weight in ((0, 0, (1 - tx) * (1 - ty)), (1, 0, tx * (1 - ty)),
                               (0, 1, (1 - tx) * ty), (1, 1, tx * ty)):
            src = (i0 + di) * grid.ny + (j0 + dj)
            rows.append(targets * n_v + k)
            cols.append(src[targets] * n_v + k)
            vals.append(weight[targets])
            received += np.bincount(src[targets], weights=weight[targets], minlength=n_s)

        ############# BOUNDARY-FED TARGETS #############
        fed = np.nonzero(~inside)[0]
        if len(fed):
            patches = _first_wall_hit(grid, X[fed], Y[fed], -v)
            for s, b in zip(fed, patches):
                emit_targets[b].append((s * n_v + k, k))

        ############# EXITED MASS PER SOURCE #############
        lost = np.maximum(1.0 - received, 0.0)
        leaking = np.nonzero(lost > 0.0)[0]
        if len(leaking):
            patches = _first_wall_hit(grid, X[leaking], Y[leaking], v)
            for s, b in zip(leaking, patches):
                exit_sources[b].append((s * n_v + k, lost[s]))

    ############# RE-EMISSION #############
    for b in range(grid.n_patch):
        if not exit_sources[b]:
            continue
        if not emit_targets[b]:
            raise DiscretizationError(f"boundary patch {b} loses mass but has no re-emission nodes")
        tgt = np.array([t for t, _ in emit_targets[b]])
        m = profile.values[b, [kk for _, kk in emit_targets[b]]]
        scale = 1.0 / np.sum(m * w[tgt])   # flux-balance factor of the patch
        src = np.array([s for s, _ in exit_sources[b]])
        exited = np.array([lw for _, lw in exit_sources[b]]) * w[src]
        rows.append(np.repeat(tgt, len(src)))
        cols.append(np.tile(src, len(tgt)))
        vals.append(np.outer(m * scale, exited).ravel())

    n = n_s * n_v
    matrix = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return matrix.tocsr()


def transport_operator(grid: PhaseGrid, profile: BoundaryProfile, dt: float) -> TransportOperator:
    """cached TransportOperator for (grid, profile, dt)"""
    key = (id(grid), id(profile), float(dt))
    cached = _OPERATOR_CACHE.get(key)
    if cached is not None and cached.grid is grid and cached.profile is profile:
        return cached
    if len(_OPERATOR_CACHE) >= _CACHE_LIMIT:
        _OPERATOR_CACHE.pop(next(iter(_OPERATOR_CACHE)))
    operator = TransportOperator(grid, profile, dt)
    _OPERATOR_CACHE[key] = operator
    return operator


def steps_for(t: float, dt: float) -> int:
    """number of transport steps covering [0, t]"""
    if t < 0.0:
        raise ValueError(f"semigroup time must be nonnegative (got {t})")
    return int(math.ceil(t / dt - 1e-9))


def transport_step(p: DensityField, dt: float, profile: BoundaryProfile, grid: PhaseGrid) -> DensityField:
    """one semi-Lagrangian step of free transport with diffusive re-emission"""
    field = grid.check_field(p, "p")
    return transport_operator(grid, profile, dt).step(field)


def apply_semigroup(p: DensityField, t: float, dt: float, profile: BoundaryProfile, grid: PhaseGrid) -> DensityField:
    """S(t) p as ceil(t/dt) composed transport steps"""
    field = grid.check_field(p, "p")
    operator = transport_operator(grid, profile, dt)
    for _ in range(steps_for(t, dt)):
        field = operator.step(field)
    return field.copy() if t == 0 else field


def adjoint_transport(g: DensityField, t: float, dt: float, profile: BoundaryProfile, grid: PhaseGrid) -> DensityField:
    """g_S(t): <S(t)h, g> = <h, g_S(t)> in the grid-weighted inner product"""
    field = grid.check_field(g, "g")
    operator = transport_operator(grid, profile, dt)
    for _ in range(steps_for(t, dt)):
        field = operator.adjoint_step(field)
    return field.copy() if t == 0 else field


def boundary_flux(p: DensityField, patch: int, grid: PhaseGrid) -> float:
    """
    Quadrature of the outgoing flux J = sum_{v.n >= 0} v.n p(r, v) w_v at a boundary patch,
    using the values of the adjacent cell
    """
    field = grid.check_field(p, "p")
    if not 0 <= patch < grid.n_patch:
        raise ValueError(f"patch {patch} does not belong to the grid ({grid.n_patch} patches)")
    v_dot_n = grid.velocities @ grid.patch_normals[patch]
    outgoing = np.where(v_dot_n >= 0.0, v_dot_n, 0.0)
    return float(np.sum(outgoing * field[grid.patch_cells[patch]] * grid.velocity_weights))


def stationary_density(grid: PhaseGrid, profile: BoundaryProfile, dt: float, tol: float,
                       max_iter: int = 200000, return_info: bool = False):
    """
    Power iteration of the transport step from the uniform density until ||S(dt)g - g||_L1 < tol

    :param grid: the phase grid
    :param profile: the re-emission profile
    :param dt: transport step
    :param tol: stopping tolerance on the L1 step residual
    :param max_iter: iteration cap; exceeding it signals a discretization defect
    :param return_info: also return a dict with iterations, residual, min and max
    :return: the stationary density of mass 1 (and the info dict when requested)
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive (got {tol})")
    operator = transport_operator(grid, profile, dt)
    g = uniform_density(grid)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        g_next = operator.step(g)
        residual = l1_norm(g_next - g, grid)
        g = g_next
        if residual < tol:
            break
    else:
        raise ConvergenceFailure(f"stationary density not reached after {max_iter} steps (residual={residual:.3e})")

    g = g / mass(g, grid)
    info = {"iterations": iteration, "residual": residual, "min": float(np.min(g)), "max": float(np.max(g))}
    logger.info(f"stationary density after {iteration} steps: residual={residual:.3e}, min={info['min']:.6g}, max={info['max']:.6g}")
    if info["min"] <= 0.0:
        raise DiscretizationError(f"stationary density is not strictly positive (min={info['min']})")
    return (g, info) if return_info else g
