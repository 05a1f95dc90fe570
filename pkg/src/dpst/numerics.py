"""Small complex linear-algebra kernel shared by the rest of the package.

Matrices are plain complex ``numpy.ndarray`` objects. The heavy lifting
(SVD, Bessel J0) is delegated to numpy/scipy; this module pins down the
conventions the simulator depends on (exact sinc zeros, rank threshold,
descending singular values).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

# sigma_min below this fraction of sigma_max counts as numerical rank loss
RANK_TOL = 1e-12

# arguments this close to an integer are treated as exact sinc zeros
_INT_SNAP = 1e-12


class NumericsError(RuntimeError):
    """Raised when a decomposition fails to converge."""


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = self.sigma.size
        return (self.u[:, :k] * self.sigma) @ self.v[:, :k].conj().T


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    return m


def sinc(x):
    """Normalized sinc, sin(pi x)/(pi x), returning exact 0 at nonzero integers.

    Accepts scalars or arrays. ``numpy.sinc`` leaves ~1e-17 residue at the
    integer zero crossings; the interpolation matrices need those to vanish
    so that an undelayed, non-oversampled matrix is exactly the identity.
    """
    x = np.asarray(x, dtype=float)
    out = np.sinc(x)
    nearest = np.rint(x)
    on_zero = (np.abs(x - nearest) < _INT_SNAP) & (nearest != 0)
    out = np.where(on_zero, 0.0, out)
    out = np.where(np.abs(x) < _INT_SNAP, 1.0, out)
    return out if out.ndim else float(out)


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind."""
    out = special.j0(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def svd(a) -> SvdResult:
    """Full SVD with singular values in descending order."""
    m = as_matrix(a)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf entries")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(f"SVD failed to converge for {m.shape} matrix: {exc}") from exc
    return SvdResult(u=u, sigma=s, v=vh.conj().T)


def singular_values(a) -> np.ndarray:
    m = as_matrix(a)
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(f"SVD failed to converge for {m.shape} matrix: {exc}") from exc


def condition_from_sigma(sigma: np.ndarray) -> float:
    """sigma_max / sigma_min, +inf once sigma_min drops below RANK_TOL * sigma_max."""
    smax, smin = float(sigma[0]), float(sigma[-1])
    if smax == 0.0 or smin < RANK_TOL * smax:
        return float("inf")
    return smax / smin


def condition_number(a) -> float:
    return condition_from_sigma(singular_values(a))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), "fro"))


def numerical_rank(a, rtol: float = RANK_TOL) -> int:
    s = singular_values(a)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def psd_sqrt(r: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Hermitian square root via eigendecomposition.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; anything more negative
    means the input is not positive semidefinite.
    """
    r = np.asarray(r)
    herm = 0.5 * (r + r.conj().T)
    w, q = np.linalg.eigh(herm)
    if w.min() < -tol:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    root = (q * np.sqrt(w)) @ q.conj().T
    if np.isrealobj(r):
        root = root.real
    return root
