import logging
import numpy as np
from scipy import integrate

from .CustomExceptions import ConfigError

logger = logging.getLogger(__name__)


def _bump(s):
    return np.exp(-1.0 / (1.0 - s ** 2)) if abs(s) < 1.0 else 0.0


# integral of exp(-1/(1-s^2)) over (-1, 1)
BUMP_INTEGRAL = integrate.quad(_bump, -1.0, 1.0, epsabs=1e-14, epsrel=1e-13)[0]


class EnsembleSpec:
    """
    Product bump density rho(u) = prod_j exp(-1/(1 - (u_j/w_j)^2)) / Z on the box |u_j| < w_j,
    with Z = prod_j w_j * BUMP_INTEGRAL. Works on batches u of shape (..., dim).
    """

    def __init__(self, widths, seed: int = 0):
        self.widths = np.asarray(widths, dtype=float)
        if self.widths.ndim != 1 or np.any(self.widths <= 0.0):
            raise ConfigError(f"ensemble widths must be a list of positive numbers (got {widths})")
        self.seed = int(seed)
        self.dim = len(self.widths)
        self.log_normalizer = float(np.sum(np.log(self.widths * BUMP_INTEGRAL)))

    def scaled_coords(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, dtype=float) / self.widths

    def inside(self, u: np.ndarray, margin: float = 1.0) -> np.ndarray:
        """True where every |u_j| < margin * w_j"""
        return np.all(np.abs(self.scaled_coords(u)) < margin, axis=-1)

    def log_density_unnormalized(self, u: np.ndarray) -> np.ndarray:
        s = self.scaled_coords(u)
        inside = np.all(np.abs(s) < 1.0, axis=-1)
        safe = np.where(np.abs(s) < 1.0, s, 0.0)
        value = np.sum(-1.0 / (1.0 - safe ** 2), axis=-1)
        return np.where(inside, value, -np.inf)

    def log_density(self, u: np.ndarray) -> np.ndarray:
        return self.log_density_unnormalized(u) - self.log_normalizer

    def density(self, u: np.ndarray) -> np.ndarray:
        return np.exp(self.log_density(u))

    def grad_log_density(self, u: np.ndarray) -> np.ndarray:
        """closed form -2 u_j / (w_j^2 (1 - (u_j/w_j)^2)^2); only meaningful inside the box"""
        u = np.asarray(u, dtype=float)
        s = self.scaled_coords(u)
        return -2.0 * u / (self.widths ** 2 * (1.0 - s ** 2) ** 2)

    @property
    def max_log_density_unnormalized(self) -> float:
        return -float(self.dim)

    def corners(self) -> np.ndarray:
        signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * self.dim, indexing="ij")).reshape(self.dim, -1).T
        return signs * self.widths

    def shrunk(self, factor: float) -> "EnsembleSpec":
        return EnsembleSpec(self.widths * factor, self.seed)

    def to_dict(self) -> dict:
        return {"widths": self.widths.tolist(), "seed": self.seed, "log_normalizer": self.log_normalizer}
