import numpy as np


class CylinderFunction:
    """
    f(nu) = phi((h_i, nu) for i in indices), optionally times phi0((k, nu)) with k given by its
    coefficients k_j = (h_j, k). phi and grad_phi act on arrays of shape (..., r) and return
    (...) and (..., r). Coefficients c may carry leading batch axes.
    """

    def __init__(self, indices, phi, grad_phi, k_coeffs=None, phi0=None, dphi0=None, name: str = "cylinder"):
        self.indices = list(indices)
        self.phi = phi
        self.grad_phi = grad_phi
        self.k_coeffs = None if k_coeffs is None else np.asarray(k_coeffs, dtype=float)
        if (self.k_coeffs is None) != (phi0 is None) or (phi0 is None) != (dphi0 is None):
            raise ValueError("k_coeffs, phi0 and dphi0 must be given together")
        self.phi0 = phi0
        self.dphi0 = dphi0
        self.name = name

    def value(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        out = self.phi(c[..., self.indices])
        if self.k_coeffs is not None:
            out = out * self.phi0(c @ self.k_coeffs)
        return out

    def gradient(self, c: np.ndarray) -> np.ndarray:
        """derivative with respect to every coefficient c_j, shape (..., J)"""
        c = np.asarray(c, dtype=float)
        grad = np.zeros(c.shape)
        grad[..., self.indices] = self.grad_phi(c[..., self.indices])
        if self.k_coeffs is not None:
            kc = c @ self.k_coeffs
            grad = (grad * self.phi0(kc)[..., None]
                    + (self.phi(c[..., self.indices]) * self.dphi0(kc))[..., None] * self.k_coeffs)
        return grad

    ############# FACTORIES #############

    @classmethod
    def constant(cls, level: float = 1.0) -> "CylinderFunction":
        return cls([0], lambda x: np.full(x.shape[:-1], float(level)), lambda x: np.zeros(x.shape),
                   name=f"constant({level})")

    @classmethod
    def coordinate(cls, index: int) -> "CylinderFunction":
        """f(nu) = (h_index, nu)"""
        return cls([index], lambda x: x[..., 0], lambda x: np.ones(x.shape), name=f"coordinate({index})")

    @classmethod
    def sine_product(cls, indices, freqs) -> "CylinderFunction":
        """f(nu) = prod_i sin(freq_i x_i), bounded with bounded derivatives"""
        freqs = np.asarray(freqs, dtype=float)

        def phi(x):
            return np.prod(np.sin(freqs * x), axis=-1)

        def grad_phi(x):
            s, co = np.sin(freqs * x), np.cos(freqs * x)
            grads = []
            for i in range(len(freqs)):
                others = np.prod(np.delete(s, i, axis=-1), axis=-1) if len(freqs) > 1 else 1.0
                grads.append(freqs[i] * co[..., i] * others)
            return np.stack(grads, axis=-1)

        return cls(indices, phi, grad_phi, name=f"sine{list(indices)}")

    @classmethod
    def gaussian(cls, indices, centre, scale: float = 1.0) -> "CylinderFunction":
        centre = np.asarray(centre, dtype=float)

        def phi(x):
            return np.exp(-np.sum((x - centre) ** 2, axis=-1) / scale ** 2)

        def grad_phi(x):
            return (-2.0 * (x - centre) / scale ** 2) * phi(x)[..., None]

        return cls(indices, phi, grad_phi, name=f"gaussian{list(indices)}")

    def weighted(self, k_coeffs, phi0, dphi0) -> "CylinderFunction":
        """the same phi times phi0((k, nu))"""
        return CylinderFunction(self.indices, self.phi, self.grad_phi, k_coeffs, phi0, dphi0,
                                name=f"{self.name}*phi0(k)")


class CylinderSum:
    """sum_i alpha_i f_i of cylinder functions; exposes the same value / gradient interface"""

    def __init__(self, terms):
        self.terms = [(float(alpha), f) for alpha, f in terms]
        self.name = " + ".join(f"{alpha}*{f.name}" for alpha, f in self.terms)

    def value(self, c):
        return sum(alpha * f.value(c) for alpha, f in self.terms)

    def gradient(self, c):
        return sum(alpha * f.gradient(c) for alpha, f in self.terms)
