from .BoundaryProfile import BoundaryProfile
from .CollisionKernel import CollisionKernel
from .PhaseGrid import PhaseGrid
from .CustomExceptions import ConfigError, DiscretizationError
from .._Reference.kinflow_info import KINETIC_DEFAULTS


class KineticParams:
    """
    Parameters of the mild-form problem: collision strength lam, horizon T, lattice step dt,
    Picard tolerance and cap, the collision kernel and the boundary profile. p_min / p_max are the
    bounds of the initial datum once they have been derived (see boltzmann_helpers.knudsen_bounds).
    """

    def __init__(self, lam: float, T: float, dt: float, kernel: CollisionKernel, profile: BoundaryProfile,
                 tol: float = KINETIC_DEFAULTS["tol"], max_iter: int = KINETIC_DEFAULTS["max_iter"],
                 p_min: float = None, p_max: float = None, lambda_mode: str = None):
        if lam is None or lam < 0:
            raise ConfigError(f"collision strength lam must be nonnegative (got {lam})")
        if T < 1:
            raise ConfigError(f"horizon T must be at least 1 (got {T})")
        if dt <= 0 or tol <= 0 or max_iter < 1:
            raise ConfigError(f"need dt > 0, tol > 0, max_iter >= 1 (got dt={dt}, tol={tol}, max_iter={max_iter})")
        if p_min is not None and p_max is not None and p_min > p_max:
            raise ConfigError(f"p_min={p_min} exceeds p_max={p_max}")
        self.lam = float(lam)
        self.T = float(T)
        self.dt = float(dt)
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.kernel = kernel
        self.profile = profile
        self.p_min = p_min
        self.p_max = p_max
        self.lambda_mode = lambda_mode
        self._norms = None

    def validate(self, grid: PhaseGrid):
        """checks the transport precondition and the lattice against the grid"""
        if self.dt * grid.v_max >= grid.min_cell_size:
            raise DiscretizationError(
                f"dt={self.dt} violates the single-crossing bound for v_max={grid.v_max}, cell={grid.min_cell_size}")
        n_steps = round(self.T / self.dt)
        if abs(n_steps * self.dt - self.T) > 1e-9 * self.T:
            raise ConfigError(f"T={self.T} is not a multiple of dt={self.dt}")

    def kernel_norms(self, grid: PhaseGrid) -> tuple:
        """(||B||, ||h_gamma||), measured once per params object"""
        if self._norms is None:
            from .._HelperFunctions.collision_helpers import kernel_constants
            self._norms = kernel_constants(self.kernel, grid)
        return self._norms

    def with_lambda(self, lam: float) -> "KineticParams":
        other = KineticParams(lam, self.T, self.dt, self.kernel, self.profile, self.tol, self.max_iter,
                              self.p_min, self.p_max, self.lambda_mode)
        other._norms = self._norms
        return other

    def with_tol(self, tol: float, max_iter: int = None) -> "KineticParams":
        other = KineticParams(self.lam, self.T, self.dt, self.kernel, self.profile, tol,
                              self.max_iter if max_iter is None else max_iter,
                              self.p_min, self.p_max, self.lambda_mode)
        other._norms = self._norms
        return other

    def to_dict(self) -> dict:
        return {"lam": self.lam, "T": self.T, "dt": self.dt, "tol": self.tol, "max_iter": self.max_iter,
                "p_min": self.p_min, "p_max": self.p_max, "lambda_mode": self.lambda_mode,
                "kernel": self.kernel.to_dict()}
