import logging
import numpy as np

from .._CustomClasses.SpectralBasis import SpectralBasis, SpectralCoefficients
from .._CustomClasses.CustomExceptions import PositivityViolation
from .._Reference.kinflow_info import DENSITY_FLOOR, SPECTRAL_DEFAULTS

logger = logging.getLogger(__name__)

PROBABILITY_TOL = 1e-10


def _as_array(c) -> np.ndarray:
    return c.c if isinstance(c, SpectralCoefficients) else np.asarray(c, dtype=float)


def dirichlet_basis(domain: str, J: int, **extents) -> SpectralBasis:
    """
    The first J Dirichlet eigenpairs on an interval (key L) or a rectangle (keys Lx, Ly)
    """
    basis = SpectralBasis(domain, J, **extents)
    logger.debug(f"dirichlet basis on {domain}: lambdas={basis.lambdas.tolist()}")
    return basis


def basis_from_config(config: dict, J: int = None) -> SpectralBasis:
    settings = dict(SPECTRAL_DEFAULTS)
    settings.update(config or {})
    return dirichlet_basis(settings["domain"], settings["J"] if J is None else J, L=settings["L"],
                           Lx=settings["Lx"], Ly=settings["Ly"], eval_points=settings["eval_points"])


def density_values(c, basis: SpectralBasis) -> np.ndarray:
    """sum_n c_n h_n on the evaluation grid"""
    return _as_array(c) @ basis.eval_values


def is_nonnegative(c, basis: SpectralBasis) -> bool:
    return bool(np.min(density_values(c, basis)) >= DENSITY_FLOOR)


def _check_probability(c: np.ndarray, basis: SpectralBasis):
    total = float(c @ basis.moments)
    if abs(total - 1.0) > PROBABILITY_TOL:
        raise ValueError(f"coefficients are not probability normalized (sum c_n e_n = {total})")


def flow(c, t: float, basis: SpectralBasis) -> np.ndarray:
    """
    c_j(t) = exp(lam_j t) c_j / z, z = sum_k exp(lam_k t) c_k e_k, for forward and backward t.
    Exponents are shifted by lam_1 t, which leaves the ratio unchanged.
    """
    c = _as_array(c)
    _check_probability(c, basis)
    growth = np.exp((basis.lambdas - basis.lambdas[0]) * t)
    raw = growth * c
    z = float(raw @ basis.moments)
    if not np.isfinite(z) or z <= 0.0:
        raise PositivityViolation(f"flow normalizer z={z} is not positive at t={t}")
    out = raw / z
    if t < 0.0 and not is_nonnegative(out, basis):
        raise PositivityViolation(
            f"backward flow to t={t} leaves the nonnegative cone (min density {np.min(density_values(out, basis)):.3e})")
    return out


def z_and_zprime(c, t: float, basis: SpectralBasis) -> tuple:
    """z(t) = sum exp(lam_j t) c_j e_j and its t-derivative"""
    c = _as_array(c)
    weighted = np.exp(basis.lambdas * t) * c * basis.moments
    return float(np.sum(weighted)), float(np.sum(basis.lambdas * weighted))


def generator_af(c, basis: SpectralBasis) -> np.ndarray:
    """coefficients a_i = (lam_i - z') c_i of A^f nu, z' = sum_j lam_j c_j e_j"""
    c = _as_array(c)
    zprime = c @ (basis.lambdas * basis.moments)
    return (basis.lambdas - zprime[..., None]) * c if c.ndim > 1 else (basis.lambdas - zprime) * c


def generator_jacobian(c, basis: SpectralBasis) -> np.ndarray:
    """da_i/dc_k = (lam_i - z') delta_ik - lam_k e_k c_i"""
    c = _as_array(c)
    zprime = float(c @ (basis.lambdas * basis.moments))
    return np.diag(basis.lambdas - zprime) - np.outer(c, basis.lambdas * basis.moments)


def zprime_bound(c, basis: SpectralBasis) -> float:
    """1/2 |D|^(1/2) ||Laplacian h||_L2, with ||Laplacian h||_L2 = 2 (sum lam_n^2 c_n^2)^(1/2)"""
    c = _as_array(c)
    return float(np.sqrt(basis.measure) * np.sqrt(np.sum(basis.lambdas ** 2 * c ** 2)))


def h_norm(c, t: float, basis: SpectralBasis) -> float:
    c = _as_array(c)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"h_norm is defined for t in [0, 1] (got {t})")
    return float(np.sqrt(np.sum(basis.lambdas ** 2 * np.exp(-2.0 * t * basis.lambdas) * c ** 2)))


def cylinder_af(f, c, basis: SpectralBasis):
    """
    Af = sum_i df/dc_i (lam_i - z') c_i; works for batches of coefficients (..., J)
    """
    c = _as_array(c)
    return np.sum(f.gradient(c) * generator_af(c, basis), axis=-1)


def flow_sensitivity(c, t: float, g, basis: SpectralBasis) -> np.ndarray:
    """
    r with (d/du (nu + u h)_t, g) = (h, r) for every h in coefficient space
    """
    c = _as_array(c)
    g = np.asarray(g, dtype=float)
    growth = np.exp(basis.lambdas * t)
    z = float((growth * c) @ basis.moments)
    pairing = float(g @ (growth * c))
    return growth * g / z - pairing * growth * basis.moments / z ** 2


def flow_tangent_residual(c, t: float, basis: SpectralBasis, eps: float = 1e-6) -> float:
    """max |d/du flow(c + u a(c), t) at u=0 - a(flow(c, t))| by central differences"""
    c = _as_array(c)
    a = generator_af(c, basis)
    derivative = (flow(c + eps * a, t, basis) - flow(c - eps * a, t, basis)) / (2.0 * eps)
    return float(np.max(np.abs(derivative - generator_af(flow(c, t, basis), basis))))


def ground_state_distance(c) -> float:
    return float(np.sum(np.abs(_as_array(c)[1:])))


def decay_rate(c, t0: float, t1: float, basis: SpectralBasis) -> float:
    """observed log slope of sum_{j>=2} |c_j(t)| between t0 and t1"""
    d0 = ground_state_distance(flow(c, t0, basis))
    d1 = ground_state_distance(flow(c, t1, basis))
    return float(np.log(d1 / d0) / (t1 - t0))


def trajectory(c, times, basis: SpectralBasis) -> list:
    """rows (t, c_1..c_J, z, z') along the forward flow, z taken relative to the starting measure"""
    rows = []
    c = _as_array(c)
    for t in times:
        ct = flow(c, t, basis)
        z, zprime = z_and_zprime(c, t, basis)
        row = {"t": float(t)}
        row.update({f"c_{j + 1}": float(v) for j, v in enumerate(ct)})
        row["z"] = z
        row["zprime"] = zprime
        rows.append(row)
    return rows
