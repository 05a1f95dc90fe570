"""Fractional-delay sinc pulse shaping, receive oversampling and the virtual channel.

Row/column layout of the composite channel: rows are grouped by receive
antenna (``P*N`` oversampled outputs each), columns by transmit antenna
(``M`` input samples each). The channel is flat, so each transmit-receive
pair contributes a scalar gain times that antenna's shaped-and-resampled
pulse matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .numerics import as_matrix, frobenius_norm, sinc, svd


@dataclass(frozen=True)
class ShapingConfig:
    symbol_period: float = 1.0
    m_len: int = 10
    tx_oversampling: int = 2
    rx_oversampling: int = 2
    delays: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "delays", tuple(float(d) for d in self.delays))
        if self.symbol_period <= 0:
            raise ValueError("symbol_period must be positive")
        if self.m_len < 1 or self.tx_oversampling < 1 or self.rx_oversampling < 1:
            raise ValueError("m_len and oversampling ratios must be >= 1")
        if not self.delays:
            raise ValueError("need one delay per transmit antenna")
        for d in self.delays:
            _check_delay(d, self.symbol_period)
        if self.delays[0] != 0.0:
            raise ValueError("the first transmit antenna is the timing reference; delays[0] must be 0")

    @property
    def n_samples(self) -> int:
        return self.m_len * self.tx_oversampling

    def with_delays(self, delays: Sequence[float]) -> "ShapingConfig":
        return ShapingConfig(self.symbol_period, self.m_len, self.tx_oversampling,
                             self.rx_oversampling, tuple(delays))


def _check_delay(delay: float, symbol_period: float) -> None:
    if not (0.0 <= delay < symbol_period):
        raise ValueError(f"delay {delay} outside [0, {symbol_period})")


def tx_interpolation_matrix(m_len: int, n_samples: int, delay: float,
                            symbol_period: float = 1.0) -> np.ndarray:
    """N x M sinc interpolation matrix with fractional delay, 1-based indices.

    Entry (n, m) is sinc((n Ts/N + delay - m Ts/M) / (Ts/M)).
    """
    _check_delay(delay, symbol_period)
    n = np.arange(1, n_samples + 1)[:, None]
    m = np.arange(1, m_len + 1)[None, :]
    # n*M/N is exact for integer oversampling ratios, keeps sinc zeros exact
    arg = n * m_len / n_samples + delay * m_len / symbol_period - m
    return sinc(arg)


def rx_interpolation_matrix(n_samples: int, rx_oversampling: int,
                            symbol_period: float = 1.0) -> np.ndarray:
    """(P N) x N receive oversampling matrix, entry (p, n) = sinc(p/P - n)."""
    if rx_oversampling < 1:
        raise ValueError("rx_oversampling must be >= 1")
    p = np.arange(1, rx_oversampling * n_samples + 1)[:, None]
    n = np.arange(1, n_samples + 1)[None, :]
    return sinc(p / rx_oversampling - n)


@lru_cache(maxsize=256)
def _pulse_block(m_len: int, tx_os: int, rx_os: int, symbol_period: float, delay: float) -> np.ndarray:
    n = m_len * tx_os
    block = rx_interpolation_matrix(n, rx_os, symbol_period) @ tx_interpolation_matrix(
        m_len, n, delay, symbol_period)
    block.setflags(write=False)
    return block


def pulse_blocks(cfg: ShapingConfig) -> list[np.ndarray]:
    """Per-transmit-antenna (P N) x M matrices I_Rx @ I(tau_j)."""
    return [_pulse_block(cfg.m_len, cfg.tx_oversampling, cfg.rx_oversampling,
                         cfg.symbol_period, d) for d in cfg.delays]


def symbol_pulses(cfg: ShapingConfig) -> np.ndarray:
    """(P N) x N_t matrix; column j is antenna j's response to its last input sample.

    The last input sample is the reference symbol because every delay in
    [0, Ts) keeps its shifted pulse peak inside the observation window.
    """
    return np.column_stack([b[:, -1] for b in pulse_blocks(cfg)])


def _check_dims(h: np.ndarray, cfg: ShapingConfig) -> None:
    if h.shape[1] != len(cfg.delays):
        raise ValueError(f"channel has {h.shape[1]} transmit antennas but "
                         f"{len(cfg.delays)} delays were configured")


def composite_channel(h, cfg: ShapingConfig) -> np.ndarray:
    """Full oversampled composite channel, (N_r P N) x (N_t M).

    Block (i, j) is h[i, j] * I_Rx @ I(tau_j); equivalently the block-diagonal
    receive oversampler applied to the scaled-block transmit interpolation.
    """
    h = as_matrix(h)
    _check_dims(h, cfg)
    blocks = pulse_blocks(cfg)
    return np.block([[h[i, j] * blocks[j] for j in range(h.shape[1])]
                     for i in range(h.shape[0])])


def symbol_composite(h, cfg: ShapingConfig) -> np.ndarray:
    """Composite channel seen by one symbol vector s[k], (N_r P N) x N_t.

    Column j equals column (j, M) of :func:`composite_channel`.
    """
    h = as_matrix(h)
    _check_dims(h, cfg)
    g = symbol_pulses(cfg)
    # rows ordered (receive antenna, oversampled output)
    return (h[:, None, :] * g[None, :, :]).reshape(h.shape[0] * g.shape[0], h.shape[1])


def downsize(h_os, target_rank: int) -> tuple[np.ndarray, np.ndarray]:
    """Project onto the leading ``target_rank`` singular pairs.

    Returns (h_r, u_trunc) with h_r = U[:, :L]^H h_os V[:, :L] = diag(sigma_1..L).
    """
    h_os = as_matrix(h_os)
    if not 1 <= target_rank <= min(h_os.shape):
        raise ValueError(f"target rank {target_rank} invalid for shape {h_os.shape}")
    dec = svd(h_os)
    u = dec.u[:, :target_rank]
    h_r = u.conj().T @ h_os @ dec.v[:, :target_rank]
    return h_r, u


def normalize_channel(h_r, h_source) -> np.ndarray:
    """Rescale ``h_r`` to carry the Frobenius energy of ``h_source``."""
    nr = frobenius_norm(h_r)
    if nr == 0.0:
        raise ValueError("cannot normalize a zero channel")
    return as_matrix(h_r) * (frobenius_norm(h_source) / nr)


@dataclass(frozen=True, eq=False)
class VirtualChannelResult:
    h_os: Optional[np.ndarray]
    h_os_symbol: np.ndarray
    h_r: np.ndarray
    h_n: np.ndarray
    u_os_trunc: np.ndarray
    scale: float


def virtual_channel(h, cfg: ShapingConfig, full: bool = True) -> VirtualChannelResult:
    """Composite -> downsize to L = min(N_r, N_t) -> renormalize.

    ``scale`` is the gain applied by the renormalization; anything else that
    passes through the same receiver (interference) must be scaled by it too.
    Set ``full=False`` to skip building the (large) full composite matrix.
    """
    h = as_matrix(h)
    L = min(h.shape)
    h_sym = symbol_composite(h, cfg)
    h_r, u = downsize(h_sym, L)
    h_n = normalize_channel(h_r, h)
    scale = frobenius_norm(h) / frobenius_norm(h_r)
    return VirtualChannelResult(
        h_os=composite_channel(h, cfg) if full else None,
        h_os_symbol=h_sym, h_r=h_r, h_n=h_n, u_os_trunc=u, scale=scale)
