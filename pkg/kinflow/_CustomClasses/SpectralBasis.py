import numpy as np
from numpy.polynomial.legendre import leggauss

from .CustomExceptions import ConfigError

SUPPORTED_DOMAINS = ["interval", "rectangle"]


def _sine_modes(n: np.ndarray, length: float, x: np.ndarray) -> np.ndarray:
    # sqrt(2/L) sin(n pi x / L) for each n (rows) and x (columns)
    return np.sqrt(2.0 / length) * np.sin(np.outer(n, x) * np.pi / length)


def _gauss_nodes(n_nodes: int, length: float):
    nodes, weights = leggauss(n_nodes)
    return 0.5 * length * (nodes + 1.0), 0.5 * length * weights


class SpectralBasis:
    """
    First J Dirichlet eigenpairs of D = (0, L) or (0, Lx) x (0, Ly): Laplacian h_n = 2 lam_n h_n with
    0 > 2 lam_1 > 2 lam_2 >= ..., moments e_n = (h_n, 1) and a midpoint evaluation grid used for
    positivity checks.
    """

    def __init__(self, domain: str, J: int, L: float = np.pi, Lx: float = 1.0, Ly: float = 1.0,
                 eval_points: int = 512):
        if domain not in SUPPORTED_DOMAINS:
            raise ConfigError(f"unsupported spectral domain '{domain}' (supported: {SUPPORTED_DOMAINS})")
        if J < 2:
            raise ConfigError(f"need at least two modes (got J={J})")
        self.domain = domain
        self.J = int(J)
        self.eval_points = int(eval_points)

        if domain == "interval":
            if L <= 0:
                raise ConfigError(f"interval length must be positive (got {L})")
            self.extents = (float(L),)
            n = np.arange(1, self.J + 1)
            self.modes = [(int(k),) for k in n]
            self.lambdas = -0.5 * (n * np.pi / L) ** 2
            # (h_n, 1) = sqrt(2/L) L (1 - cos n pi) / (n pi)
            self.moments = np.sqrt(2.0 / L) * L * (1.0 - np.cos(n * np.pi)) / (n * np.pi)
            self.moments[n % 2 == 0] = 0.0
        else:
            if Lx <= 0 or Ly <= 0:
                raise ConfigError(f"rectangle extents must be positive (got {Lx}, {Ly})")
            self.extents = (float(Lx), float(Ly))
            m, n = np.meshgrid(np.arange(1, self.J + 1), np.arange(1, self.J + 1), indexing="ij")
            m, n = m.ravel(), n.ravel()
            lam = -0.5 * ((m * np.pi / Lx) ** 2 + (n * np.pi / Ly) ** 2)
            order = np.argsort(-lam, kind="stable")[: self.J]
            self.modes = [(int(m[i]), int(n[i])) for i in order]
            self.lambdas = lam[order]
            self.moments = self._quadrature_moments()

        self.measure = float(np.prod(self.extents))
        self._eval_values = None

    def _mode_axes(self):
        return [np.array([mode[d] for mode in self.modes]) for d in range(len(self.extents))]

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """values h_n(x) as a (J, n_points) array; points are (n,) on the interval or (n, 2) on the rectangle"""
        points = np.asarray(points, dtype=float)
        axes = self._mode_axes()
        if self.domain == "interval":
            return _sine_modes(axes[0], self.extents[0], points)
        return _sine_modes(axes[0], self.extents[0], points[:, 0]) * _sine_modes(axes[1], self.extents[1], points[:, 1])

    def _quadrature_moments(self) -> np.ndarray:
        max_mode = max(max(mode) for mode in self.modes)
        n_nodes = max(64, 4 * max_mode)
        axes = self._mode_axes()
        moments = np.ones(self.J)
        for d, length in enumerate(self.extents):
            x, w = _gauss_nodes(n_nodes, length)
            moments *= _sine_modes(axes[d], length, x) @ w
        return moments

    def gram_matrix(self) -> np.ndarray:
        """(h_m, h_n) by Gauss-Legendre quadrature"""
        max_mode = max(max(mode) for mode in self.modes)
        n_nodes = max(64, 4 * max_mode)
        axes = self._mode_axes()
        gram = np.ones((self.J, self.J))
        for d, length in enumerate(self.extents):
            x, w = _gauss_nodes(n_nodes, length)
            values = _sine_modes(axes[d], length, x)
            gram *= (values * w) @ values.T
        return gram

    def evaluation_grid(self) -> np.ndarray:
        centres = [(np.arange(self.eval_points) + 0.5) * length / self.eval_points for length in self.extents]
        if self.domain == "interval":
            return centres[0]
        xx, yy = np.meshgrid(centres[0], centres[1], indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    @property
    def eval_values(self) -> np.ndarray:
        """h_n on the evaluation grid, computed once"""
        if self._eval_values is None:
            self._eval_values = self.evaluate(self.evaluation_grid())
        return self._eval_values

    def ground_state(self) -> np.ndarray:
        c = np.zeros(self.J)
        c[0] = 1.0 / self.moments[0]
        return c

    def to_dict(self) -> dict:
        return {"domain": self.domain, "J": self.J, "extents": list(self.extents),
                "lambdas": self.lambdas.tolist(), "moments": self.moments.tolist()}


class SpectralCoefficients:
    """coefficients c_n = (h_n, nu) of a measure, flagged when sum c_n e_n = 1"""

    def __init__(self, c, basis: SpectralBasis, probability: bool = None):
        self.c = np.asarray(c, dtype=float)
        if self.c.shape != (basis.J,):
            raise ConfigError(f"expected {basis.J} coefficients, got shape {self.c.shape}")
        self.basis = basis
        total = float(self.c @ basis.moments)
        self.probability = abs(total - 1.0) <= 1e-12 if probability is None else probability

    @classmethod
    def normalized(cls, raw, basis: SpectralBasis) -> "SpectralCoefficients":
        raw = np.asarray(raw, dtype=float)
        total = float(raw @ basis.moments)
        if total <= 0.0:
            raise ConfigError(f"coefficients have nonpositive total mass {total}")
        return cls(raw / total, basis, probability=True)
