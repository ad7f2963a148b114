import logging
import numpy as np
from scipy import sparse

from .._CustomClasses.PhaseGrid import PhaseGrid, DensityField
from .._CustomClasses.CollisionKernel import CollisionKernel

logger = logging.getLogger(__name__)

_EVENT_CACHE = {}
_CACHE_LIMIT = 16


def post_collision(v, v1, e):
    """
    v* = v + e.(v1 - v) e and v1* = v1 + e.(v - v1) e, vectorized over leading axes
    """
    v = np.asarray(v, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    e = np.asarray(e, dtype=float)
    exchange = np.sum(e * (v1 - v), axis=-1, keepdims=True) * e
    return v + exchange, v1 - exchange


class CollisionEvents:
    """
    Admitted collision events of a grid: pre-collision nodes (a, b), scattering node e, projected
    post-collision nodes (n, n1) and the event coefficient 1/4 w_a w_b w_e B.

    Each event moves mass between (r, a) and (r, n) at the rate
    coef * ([pq](a, b) - [pq](n, n1)) with [pq](a, b) = p(r,a) qbar(r,b) + q(r,a) pbar(r,b),
    so every event is mass neutral and cancels for a constant state. Where the reverse event
    (n, n1) -> (a, b) is admitted with the same coefficient, the pair sums to the scatter form that
    moves 1/2 w_a w_b w_e B [pq](a, b) from a to n, so the two forms agree on reversal-closed sets.
    """

    def __init__(self, grid: PhaseGrid, kernel: CollisionKernel):
        self.grid = grid
        self.kernel = kernel
        n_v = grid.n_vel
        vel = grid.velocities

        a_idx, b_idx, e_idx = np.meshgrid(np.arange(n_v), np.arange(n_v), np.arange(grid.n_e), indexing="ij")
        a_idx, b_idx, e_idx = a_idx.ravel(), b_idx.ravel(), e_idx.ravel()
        v, v1, e = vel[a_idx], vel[b_idx], grid.e_nodes[e_idx]

        # half-circle constraint e.(v1 - v) <= 0, then chi on the exact post-collision pair
        admissible = np.sum(e * (v1 - v), axis=-1) <= 0.0
        v_star, v1_star = post_collision(v, v1, e)
        n_idx = grid.velocity_node_of(v_star)
        n1_idx = grid.velocity_node_of(v1_star)
        admitted = admissible & (n_idx >= 0) & (n1_idx >= 0)
        # events that project back onto their own nodes transfer nothing
        admitted &= ~((n_idx == a_idx) & (n1_idx == b_idx))

        self.a = a_idx[admitted]
        self.b = b_idx[admitted]
        self.n = n_idx[admitted]
        self.n1 = n1_idx[admitted]
        self.coef = 0.25 * (grid.velocity_weights[self.a] * grid.velocity_weights[self.b]
                            * grid.e_weights[e_idx[admitted]] * kernel.B(v[admitted], v1[admitted], e[admitted]))

        n_ev = len(self.a)
        ones = np.ones(n_ev)
        rows = np.arange(n_ev)
        self.one_hot_a = sparse.csr_matrix((ones, (rows, self.a)), shape=(n_ev, n_v))
        self.one_hot_b = sparse.csr_matrix((ones, (rows, self.b)), shape=(n_ev, n_v))
        self.one_hot_n = sparse.csr_matrix((ones, (rows, self.n)), shape=(n_ev, n_v))
        self.one_hot_n1 = sparse.csr_matrix((ones, (rows, self.n1)), shape=(n_ev, n_v))
        # +1 where mass arrives, -1 where it leaves
        self.incidence = (self.one_hot_n - self.one_hot_a).tocsr()

        # spatial interaction matrix H[r, y] = vol_y h(r, y)
        pts = grid.space_points
        self.interaction = kernel.h(pts[:, None, :], pts[None, :, :]) * grid.space_weights[None, :]
        logger.debug(f"collision events: {n_ev} admitted of {len(admitted)} candidates")

    def mollify(self, field: DensityField) -> DensityField:
        return self.interaction @ field


def collision_events(grid: PhaseGrid, kernel: CollisionKernel) -> CollisionEvents:
    key = (id(grid), id(kernel))
    cached = _EVENT_CACHE.get(key)
    if cached is not None and cached.grid is grid and cached.kernel is kernel:
        return cached
    if len(_EVENT_CACHE) >= _CACHE_LIMIT:
        _EVENT_CACHE.pop(next(iter(_EVENT_CACHE)))
    events = CollisionEvents(grid, kernel)
    _EVENT_CACHE[key] = events
    return events


def _sparse_right(dense: np.ndarray, one_hot: sparse.csr_matrix) -> np.ndarray:
    # dense (n_s, n_ev) times sparse (n_ev, n_v)
    return np.asarray((one_hot.T @ dense.T).T)


def collision_q(p: DensityField, q: DensityField, kernel: CollisionKernel, grid: PhaseGrid) -> DensityField:
    """
    The mollified cutoff collision operator Q(p, q) in exchange form. Bilinear, symmetric in (p, q)
    bit for bit, and of total mass exactly zero.
    """
    p = grid.check_field(p, "p")
    q = grid.check_field(q, "q")
    return exchange_q(p, q, collision_events(grid, kernel), grid)


def exchange_q(p: DensityField, q: DensityField, ev, grid: PhaseGrid) -> DensityField:
    """Q(p, q) over an event set with fields a, b, n, n1, coef, incidence and mollify()"""
    p_bar, q_bar = ev.mollify(p), ev.mollify(q)
    pre = p[:, ev.a] * q_bar[:, ev.b] + q[:, ev.a] * p_bar[:, ev.b]
    post = p[:, ev.n] * q_bar[:, ev.n1] + q[:, ev.n] * p_bar[:, ev.n1]
    transfer = ev.coef[None, :] * (pre - post)
    return _sparse_right(transfer, ev.incidence) / grid.velocity_weights[None, :]


def collision_q_adjoint(p: DensityField, phi: DensityField, kernel: CollisionKernel, grid: PhaseGrid) -> DensityField:
    """
    The field psi with <Q(u, p), phi> = <u, psi> for every u (grid-weighted inner product)
    """
    p = grid.check_field(p, "p")
    phi = grid.check_field(phi, "phi")
    ev = collision_events(grid, kernel)
    p_bar = ev.mollify(p)
    weighted = grid.space_weights[:, None] * ev.coef[None, :] * (phi[:, ev.n] - phi[:, ev.a])

    # terms where u enters directly
    direct = (_sparse_right(weighted * p_bar[:, ev.b], ev.one_hot_a)
              - _sparse_right(weighted * p_bar[:, ev.n1], ev.one_hot_n))
    # terms where u enters through the mollified field ubar = H u
    through_bar = (_sparse_right(weighted * p[:, ev.a], ev.one_hot_b)
                   - _sparse_right(weighted * p[:, ev.n], ev.one_hot_n1))
    return (direct + ev.interaction.T @ through_bar) / grid.weights


def kernel_constants(kernel: CollisionKernel, grid: PhaseGrid, n_speed: int = 5, n_angle: int = 32,
                     n_offsets: int = 301) -> tuple:
    """
    Sup norms (||B||, ||h_gamma||): B over the grid velocity nodes together with a polar sample of the
    closed annulus and scattering directions, h_gamma over a fine sample of r - y offsets

    :return: (b_norm, h_norm)
    """
    speeds = np.linspace(grid.v_min, grid.v_max, n_speed)
    angles = 2.0 * np.pi * np.arange(n_angle) / n_angle
    ss, aa = np.meshgrid(speeds, angles, indexing="ij")
    sample = np.column_stack([(ss * np.cos(aa)).ravel(), (ss * np.sin(aa)).ravel()])
    vel = np.vstack([grid.velocities, sample])
    e_dirs = np.vstack([grid.e_nodes, np.column_stack([np.cos(angles), np.sin(angles)])])

    b_norm = 0.0
    for e in e_dirs:
        values = kernel.B(vel[:, None, :], vel[None, :, :], e[None, None, :])
        b_norm = max(b_norm, float(np.max(values)))

    offsets = np.linspace(0.0, 1.5 * kernel.gamma, n_offsets)
    h_norm = 0.0
    for base in grid.space_points[:: max(1, grid.n_space // 4)]:
        for direction in ((1.0, 0.0), (0.0, 1.0), (np.sqrt(0.5), np.sqrt(0.5))):
            y = base[None, :] + offsets[:, None] * np.asarray(direction)[None, :]
            h_norm = max(h_norm, float(np.max(kernel.h(base[None, :], y))))
    return b_norm, h_norm
