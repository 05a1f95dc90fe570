"""Correlated Rician MIMO channel generation and per-channel analytics."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .numerics import as_matrix, bessel_j0, frobenius_norm, psd_sqrt, svd


class ChannelMode(str, Enum):
    CORRELATED = "correlated"
    RAYLEIGH = "rayleigh"
    OPTIMUM = "optimum"


@dataclass(frozen=True)
class ChannelParams:
    n_tx: int = 2
    n_rx: int = 2
    distance_m: float = 10.0
    tx_spacing_wl: float = 0.5
    rx_spacing_wl: float = 0.5
    mode: ChannelMode = ChannelMode.CORRELATED

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be >= 1")
        if self.distance_m <= 0:
            raise ValueError(f"distance_m must be positive, got {self.distance_m}")
        if self.tx_spacing_wl < 0 or self.rx_spacing_wl < 0:
            raise ValueError("antenna spacings must be non-negative")
        object.__setattr__(self, "mode", ChannelMode(self.mode))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray
    k_factor: float
    r_tx: np.ndarray
    r_rx: np.ndarray
    params: ChannelParams
    seed: Optional[int] = None
    extra: dict = field(default_factory=dict)


def rician_k(distance_m: float) -> float:
    """Distance-dependent linear Rician K factor (small-cell micro-urban fit).

    Constant 32 below 18 m, exponential decay beyond. The step at 18 m is
    kept as is.
    """
    if not distance_m > 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    if distance_m < 18.0:
        return 32.0
    return 140.10 * float(np.exp(-0.107 * distance_m))


def spatial_correlation(i: int, j: int, p: int, q: int,
                        tx_spacing_wl: float, rx_spacing_wl: float) -> float:
    """Correlation between links (i <- j) and (p <- q); spacings in wavelengths."""
    return (bessel_j0(2 * np.pi * tx_spacing_wl * abs(q - j))
            * bessel_j0(2 * np.pi * rx_spacing_wl * abs(p - i)))


def _uniform_array_correlation(n: int, spacing_wl: float) -> np.ndarray:
    idx = np.arange(n)
    lag = np.abs(idx[:, None] - idx[None, :])
    r = np.asarray(bessel_j0(2 * np.pi * spacing_wl * lag), dtype=float)
    np.fill_diagonal(r, 1.0)
    return r


def build_correlation_matrices(params: ChannelParams) -> tuple[np.ndarray, np.ndarray]:
    """Transmit and receive correlation matrices (r_tx, r_rx).

    Raises ValueError if either has an eigenvalue below -1e-10.
    """
    r_tx = _uniform_array_correlation(params.n_tx, params.tx_spacing_wl)
    r_rx = _uniform_array_correlation(params.n_rx, params.rx_spacing_wl)
    for name, r in (("transmit", r_tx), ("receive", r_rx)):
        lo = np.linalg.eigvalsh(r).min()
        if lo < -1e-10:
            raise ValueError(f"{name} correlation matrix is not PSD (min eigenvalue {lo:.3e})")
    return r_tx, r_rx


def sample_white_channel(n_rx: int, n_tx: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) entries."""
    re = rng.standard_normal((n_rx, n_tx))
    im = rng.standard_normal((n_rx, n_tx))
    return (re + 1j * im) / np.sqrt(2.0)


def correlated_rician(k: float, r_tx: np.ndarray, r_rx: np.ndarray, h_w: np.ndarray) -> np.ndarray:
    h_los = np.ones(h_w.shape)
    h_nlos = psd_sqrt(r_rx) @ h_w @ psd_sqrt(r_tx)
    return np.sqrt(k / (k + 1.0)) * h_los + np.sqrt(1.0 / (k + 1.0)) * h_nlos


def equalize_singular_values(h: np.ndarray) -> np.ndarray:
    """Same singular vectors and Frobenius norm as ``h``, all singular values equal."""
    dec = svd(h)
    L = min(h.shape)
    level = frobenius_norm(h) / np.sqrt(L)
    return level * dec.u[:, :L] @ dec.v[:, :L].conj().T


def assemble_channel(params: ChannelParams, rng: np.random.Generator,
                     k_factor: Optional[float] = None,
                     seed: Optional[int] = None) -> ChannelRealization:
    """Draw one channel realization for ``params.mode``.

    ``k_factor`` overrides the distance-derived K (used for limit checks).
    Optimum mode draws a correlated channel and flattens its spectrum.
    """
    r_tx, r_rx = build_correlation_matrices(params)
    k = rician_k(params.distance_m) if k_factor is None else float(k_factor)
    if k < 0:
        raise ValueError("K factor must be non-negative")
    h_w = sample_white_channel(params.n_rx, params.n_tx, rng)
    extra = {}
    if params.mode is ChannelMode.RAYLEIGH:
        h = h_w
    else:
        h = correlated_rician(k, r_tx, r_rx, h_w)
        if params.mode is ChannelMode.OPTIMUM:
            extra["source"] = h
            h = equalize_singular_values(h)
    return ChannelRealization(h=h, k_factor=k, r_tx=r_tx, r_rx=r_rx,
                              params=params, seed=seed, extra=extra)


def sv_approx_2x2(h) -> tuple[float, float]:
    """Closed-form approximation of the two eigenvalues of H H^H for a 2x2 H.

    The small one is |det H|^2 / ||H||_F^2 and the large one takes the rest of
    the energy, so the pair always sums to ||H||_F^2.
    """
    h = as_matrix(h)
    if h.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got {h.shape}")
    energy = float(np.sum(np.abs(h) ** 2))
    if energy == 0.0:
        raise ValueError("zero channel has no singular value approximation")
    det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    lam2 = float(abs(det) ** 2) / energy
    return energy - lam2, lam2


def capacity(h, snr_linear: float) -> float:
    """Equal-power MIMO capacity sum_l log2(1 + snr * lambda_l / L), bits/s/Hz.

    lambda_l are the eigenvalues of H H^H and L = min(n_rx, n_tx).
    """
    if not snr_linear > 0:
        raise ValueError("snr must be positive")
    h = as_matrix(h)
    L = min(h.shape)
    lam = np.linalg.svd(h, compute_uv=False)[:L] ** 2
    return float(np.sum(np.log2(1.0 + snr_linear * lam / L)))


def capacity_logdet(h, snr_linear: float) -> float:
    """Determinant form log2 det(I + (snr/L) H H^H) of :func:`capacity`."""
    h = as_matrix(h)
    L = min(h.shape)
    gram = h.conj().T @ h if h.shape[1] <= h.shape[0] else h @ h.conj().T
    sign, logdet = np.linalg.slogdet(np.eye(gram.shape[0]) + (snr_linear / L) * gram)
    return float(logdet / np.log(2.0))
