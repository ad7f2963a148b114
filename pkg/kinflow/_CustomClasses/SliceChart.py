import numpy as np

from .SpectralBasis import SpectralBasis


class SliceChart:
    """
    Affine chart of the slice sum_j c_j e_j = 1: c(u) = c* + N u with c* the ground state and the
    columns of N an orthonormal basis of the null space of e, ordered by mode (Gram-Schmidt of the
    projected unit vectors of modes 2..J).
    """

    def __init__(self, basis: SpectralBasis):
        self.basis = basis
        e = basis.moments
        self.basepoint = basis.ground_state()
        projector = np.eye(basis.J) - np.outer(e, e) / float(e @ e)
        q, r = np.linalg.qr(projector[:, 1:])
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        self.tangent = q * signs[None, :]
        self.dim = basis.J - 1
        self._diag_projector = np.sum(self.tangent ** 2, axis=1)

    def to_coeffs(self, u: np.ndarray) -> np.ndarray:
        return self.basepoint + np.asarray(u, dtype=float) @ self.tangent.T

    def to_chart(self, c: np.ndarray) -> np.ndarray:
        return (np.asarray(c, dtype=float) - self.basepoint) @ self.tangent

    @property
    def projector_diagonal(self) -> np.ndarray:
        """diagonal of N N^T"""
        return self._diag_projector
