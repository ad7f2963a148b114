import numpy as np

from .PhaseGrid import PhaseGrid
from .CustomExceptions import ShapeMismatch


class BoundaryProfile:
    """
    Re-emission profile M(r, v) for every boundary patch r and incoming velocity node (v.n(r) <= 0).
    Outgoing entries are stored as zero.
    """

    def __init__(self, values: np.ndarray, grid: PhaseGrid):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_patch, grid.n_vel):
            raise ShapeMismatch(f"profile has shape {values.shape}, expected {(grid.n_patch, grid.n_vel)}")
        self.incoming = (grid.patch_normals @ grid.velocities.T) <= 0.0
        if np.any(values[self.incoming] <= 0.0) or not np.all(np.isfinite(values)):
            raise ValueError("boundary profile must be finite and strictly positive on incoming velocities")
        self.values = np.where(self.incoming, values, 0.0)
        self.m_min = float(np.min(self.values[self.incoming]))
        self.m_max = float(np.max(self.values[self.incoming]))

    @classmethod
    def uniform(cls, grid: PhaseGrid) -> "BoundaryProfile":
        """angle independent profile M(r, v) = c(r), normalized per patch by quadrature"""
        v_dot_n = grid.patch_normals @ grid.velocities.T
        incoming_flux = np.sum(np.where(v_dot_n <= 0.0, np.abs(v_dot_n), 0.0) * grid.velocity_weights, axis=1)
        return cls(np.repeat((1.0 / incoming_flux)[:, None], grid.n_vel, axis=1), grid)

    def normalization_residual(self, grid: PhaseGrid) -> float:
        """max over patches of |sum_{v.n<=0} |v.n| M w_v - 1|"""
        v_dot_n = grid.patch_normals @ grid.velocities.T
        totals = np.sum(np.where(self.incoming, np.abs(v_dot_n), 0.0) * self.values * grid.velocity_weights, axis=1)
        return float(np.max(np.abs(totals - 1.0)))
