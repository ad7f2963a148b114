import numpy as np


def hard_sphere_kernel(v: np.ndarray, v1: np.ndarray, e: np.ndarray) -> np.ndarray:
    """B(v, v1, e) = |e.(v1 - v)|"""
    return np.abs(np.sum(e * (v1 - v), axis=-1))


def quartic_mollifier(gamma: float):
    """h(r, y) = (1 - (|r-y|/gamma)^2)^2 for |r-y| < gamma, 0 otherwise"""

    def mollifier(r: np.ndarray, y: np.ndarray) -> np.ndarray:
        dist2 = np.sum((np.asarray(r) - np.asarray(y)) ** 2, axis=-1) / gamma ** 2
        return np.where(dist2 < 1.0, (1.0 - dist2) ** 2, 0.0)

    return mollifier


KERNELS = {"hard-sphere": hard_sphere_kernel}
MOLLIFIERS = {"quartic": quartic_mollifier}


class CollisionKernel:
    """
    The collision kernel B(v, v1, e) and the spatial mollifier h_gamma(r, y) of range gamma.
    Both callables are vectorized over leading axes of arrays whose last axis has length 2.
    """

    def __init__(self, gamma: float = 0.3, kernel: str = "hard-sphere", mollifier: str = "quartic",
                 b_scale: float = 1.0, b_func=None, h_func=None):
        if gamma <= 0:
            raise ValueError(f"mollifier range gamma must be positive (got {gamma})")
        if kernel not in KERNELS and b_func is None:
            raise ValueError(f"unknown collision kernel '{kernel}' (known: {sorted(KERNELS)})")
        if mollifier not in MOLLIFIERS and h_func is None:
            raise ValueError(f"unknown mollifier '{mollifier}' (known: {sorted(MOLLIFIERS)})")
        self.gamma = float(gamma)
        self.kernel_name = kernel
        self.mollifier_name = mollifier
        self.b_scale = float(b_scale)
        self._b = b_func if b_func is not None else KERNELS[kernel]
        self._h = h_func if h_func is not None else MOLLIFIERS[mollifier](self.gamma)

    def B(self, v, v1, e) -> np.ndarray:
        return self.b_scale * self._b(np.asarray(v, dtype=float), np.asarray(v1, dtype=float), np.asarray(e, dtype=float))

    def h(self, r, y) -> np.ndarray:
        return self._h(np.asarray(r, dtype=float), np.asarray(y, dtype=float))

    def scaled(self, factor: float) -> "CollisionKernel":
        """same kernel with B multiplied by factor"""
        return CollisionKernel(self.gamma, self.kernel_name, self.mollifier_name,
                               self.b_scale * factor, self._b, self._h)

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "kernel": self.kernel_name, "mollifier": self.mollifier_name,
                "b_scale": self.b_scale}
