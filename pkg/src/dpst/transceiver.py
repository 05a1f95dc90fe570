"""SVD precoding, MMSE equalization, per-stream SINR and detection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .numerics import NumericsError, as_matrix, svd


@dataclass(frozen=True, eq=False)
class LinkState:
    h_n: np.ndarray
    w: np.ndarray
    h_eq: np.ndarray
    f: np.ndarray
    phi: np.ndarray
    noise_power: float
    tx_power: float
    sinr: np.ndarray


def precoder(h_n, tx_power: float, n_streams: Optional[int] = None, v=None) -> np.ndarray:
    """Leading right singular vectors of ``h_n`` scaled so ||W||_F^2 = tx_power.

    ``v`` supplies the singular vectors directly, for channels whose
    spectrum is degenerate and whose SVD basis is therefore arbitrary.
    """
    h_n = as_matrix(h_n)
    if not np.any(h_n):
        raise ValueError("cannot precode for an all-zero channel")
    L = n_streams or min(h_n.shape)
    v = svd(h_n).v[:, :L] if v is None else np.asarray(v)[:, :L]
    rho = 1.0 / np.linalg.norm(v, "fro")
    return np.sqrt(tx_power) * rho * v


def mmse_filter(h_eq, phi, noise_power: float) -> np.ndarray:
    """F = H^H (H H^H + Phi + N0 I)^-1; rows estimate streams."""
    h_eq = as_matrix(h_eq)
    n_rx = h_eq.shape[0]
    phi = np.zeros((n_rx, n_rx)) if phi is None else np.asarray(phi)
    a = h_eq @ h_eq.conj().T + phi + noise_power * np.eye(n_rx)
    try:
        # a is Hermitian: (a^-1 H)^H = H^H a^-1
        return np.linalg.solve(a, h_eq).conj().T
    except np.linalg.LinAlgError as exc:
        raise NumericsError(f"regularized covariance is singular: {exc}") from exc


def stream_sinr(f, h_eq, phi, noise_power: float) -> np.ndarray:
    """Linear SINR of each stream when row l of ``f`` estimates stream l."""
    f = np.asarray(f)
    h_eq = np.asarray(h_eq)
    n_rx = h_eq.shape[0]
    phi = np.zeros((n_rx, n_rx)) if phi is None else np.asarray(phi)
    t = np.abs(f @ h_eq) ** 2
    sig = np.diag(t).copy()
    cross = t.sum(axis=1) - sig
    interf = np.real(np.einsum("li,ij,lj->l", f, phi, f.conj()))
    noise = noise_power * np.sum(np.abs(f) ** 2, axis=1)
    denom = cross + interf + noise
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0, sig / np.where(denom > 0, denom, 1.0), 0.0)
    return np.where(sig > 0, out, 0.0)


def detect(f, u_trunc, h_os, s, tx_matrix=None, scale: float = 1.0) -> np.ndarray:
    """Noiseless estimate F (scale * U^H H_os x), with x = tx_matrix @ s.

    ``tx_matrix`` maps streams onto the physical transmit antennas (identity
    when omitted) and ``scale`` is the virtual-channel renormalization gain.
    """
    f = np.asarray(f)
    u_trunc = np.asarray(u_trunc)
    h_os = np.asarray(h_os)
    s = np.asarray(s, dtype=complex)
    x = s if tx_matrix is None else np.asarray(tx_matrix) @ s
    if h_os.shape[1] != x.shape[0] or u_trunc.shape[0] != h_os.shape[0] or f.shape[1] != u_trunc.shape[1]:
        raise ValueError("inconsistent dimensions in detection chain")
    return f @ (scale * (u_trunc.conj().T @ (h_os @ x)))


def throughput(sinrs: Sequence[float], bandwidth_hz: float,
               se_cap: Optional[float] = None) -> float:
    """Shannon throughput B * sum_l log2(1 + SINR_l), bits/s."""
    se = np.log2(1.0 + np.asarray(sinrs, dtype=float))
    if se_cap is not None:
        se = np.minimum(se, se_cap)
    return float(bandwidth_hz * se.sum())


def effective_sinr(sinrs: Sequence[float]) -> float:
    """Single SINR giving the same per-stream average capacity."""
    s = np.asarray(sinrs, dtype=float)
    if s.size == 0:
        return 0.0
    return float(2.0 ** (np.log2(1.0 + s).mean()) - 1.0)


def link(h_n, phi, noise_power: float, tx_power: float, v=None) -> LinkState:
    """Precode, build the MMSE filter and evaluate per-stream SINR."""
    h_n = as_matrix(h_n)
    w = precoder(h_n, tx_power, v=v)
    h_eq = h_n @ w
    f = mmse_filter(h_eq, phi, noise_power)
    sinr = stream_sinr(f, h_eq, phi, noise_power)
    phi = np.zeros((h_n.shape[0],) * 2) if phi is None else np.asarray(phi)
    return LinkState(h_n=h_n, w=w, h_eq=h_eq, f=f, phi=phi,
                     noise_power=noise_power, tx_power=tx_power, sinr=sinr)
