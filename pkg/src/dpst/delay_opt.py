"""Grid search for the per-antenna fractional delays.

Two objectives are available:

* ``condition_number`` (default): mean condition number of the virtual
  channel over a fixed channel ensemble.
* ``covariance_diagonalization``: mean distance of the normalized covariance
  of the transmit-shaped channel from the identity. It uses transmit
  interpolation only; receive oversampling never enters.

Both are evaluated in closed form over the whole ensemble at once. The
per-channel reference implementations (:func:`condition_metric`,
:func:`shaped_channel_covariance` + :func:`diagonalization_objective`) are kept
as independent routes for checking.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import channel as ch
from .config import DelaySearchConfig, ScenarioConfig, SearchMetric
from .numerics import as_matrix, condition_number
from .shaping import ShapingConfig, symbol_pulses, tx_interpolation_matrix, virtual_channel

log = logging.getLogger(__name__)


class SearchConfigError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DelaySearchResult:
    delays: tuple
    objective_value: float
    metric_trace: list
    within_epsilon: bool
    mean_singular_values: tuple
    n_evaluations: int
    stages: list = field(default_factory=list)


# reference (per-channel) routes

def shaped_channel_covariance(h, delays: Sequence[float], cfg: ShapingConfig) -> np.ndarray:
    """Covariance of the transmit-shaped channel, (N_t M) x (N_t M).

    Each antenna contributes the block h[:, u] (x) I(tau_u) (flat channel, so
    the convolution is a scaling); the covariance is the Gram matrix of the
    stacked blocks, grouped per transmit antenna.
    """
    h = as_matrix(h)
    if len(delays) != h.shape[1]:
        raise ValueError(f"{len(delays)} delays for {h.shape[1]} transmit antennas")
    if delays[0] != 0:
        raise ValueError("delays[0] must be 0")
    n = cfg.n_samples
    h_tx = np.hstack([np.kron(h[:, [u]], tx_interpolation_matrix(cfg.m_len, n, d, cfg.symbol_period))
                      for u, d in enumerate(delays)])
    r = h_tx.conj().T @ h_tx
    return 0.5 * (r + r.conj().T)


def diagonalization_objective(r_x) -> float:
    """||D^-1/2 R D^-1/2 - I||_F with D = diag(R); zero iff R is diagonal."""
    r = as_matrix(r_x)
    d = np.real(np.diag(r))
    if np.any(d <= 0):
        raise ValueError("covariance diagonal must be strictly positive")
    s = 1.0 / np.sqrt(d)
    rn = r * s[:, None] * s[None, :]
    # the normalized diagonal is 1 by construction; only off-diagonals count
    np.fill_diagonal(rn, 0.0)
    return float(np.linalg.norm(rn, "fro"))


def condition_metric(h, delays: Sequence[float], cfg: ShapingConfig) -> float:
    return condition_number(virtual_channel(h, cfg.with_delays(delays), full=False).h_n)


# vectorized ensemble routes

def _gram_columns(hs: np.ndarray) -> np.ndarray:
    # (B, Nt, Nt) column Gram matrices H^H H
    return np.einsum("bij,bik->bjk", hs.conj(), hs)


def pulse_gram(cfg: ShapingConfig) -> np.ndarray:
    """G^T G for the per-antenna symbol pulses (N_t x N_t)."""
    g = symbol_pulses(cfg)
    return g.T @ g


def _condition_from_gram(hgram: np.ndarray, gtg: np.ndarray) -> np.ndarray:
    # hgram (B, Nt, Nt), gtg (..., Nt, Nt) -> (..., B)
    lam = np.linalg.eigvalsh(hgram * gtg[..., None, :, :])
    lo, hi = lam[..., 0], lam[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.sqrt(hi / lo)
    # same rank threshold as numerics.condition_number, on squared values
    return np.where(lo > (1e-12) ** 2 * hi, k, np.inf)


def ensemble_condition(hgram: np.ndarray, cfg: ShapingConfig) -> np.ndarray:
    """Virtual-channel condition number for every channel in the batch.

    The reduced composite has columns h_j (x) g_j, so its Gram matrix is the
    Hadamard product (H^H H) * (G^T G).
    """
    return _condition_from_gram(hgram, pulse_gram(cfg))


def tx_pulse_gram(cfg: ShapingConfig) -> np.ndarray:
    """Like :func:`pulse_gram` but for transmit interpolation alone (no receive oversampling)."""
    g = np.column_stack([tx_interpolation_matrix(cfg.m_len, cfg.n_samples, d, cfg.symbol_period)[:, -1]
                         for d in cfg.delays])
    return g.T @ g


def ensemble_singular_values(hgram: np.ndarray, cfg: ShapingConfig,
                             gram: Optional[np.ndarray] = None) -> np.ndarray:
    """Sorted (descending) virtual-channel singular values with ||H_N||_F^2 = L.

    ``gram`` replaces the pulse Gram matrix (defaults to :func:`pulse_gram`).
    """
    gram = pulse_gram(cfg) if gram is None else gram
    lam = np.clip(np.linalg.eigvalsh(hgram * gram[None]), 0.0, None)[:, ::-1]
    lam = lam / lam.sum(axis=1, keepdims=True) * lam.shape[1]
    return np.sqrt(lam)


def _coupling_table(m_len: int, n_samples: int, delays: Sequence[float], ts: float) -> np.ndarray:
    """C[a, b] = sum_mn (I_a^T I_b)_mn^2 / (d_a,m d_b,n), d = column energies."""
    mats = np.stack([tx_interpolation_matrix(m_len, n_samples, d, ts) for d in delays])
    energy = np.einsum("anm,anm->am", mats, mats)
    cross = np.einsum("anm,bnk->abmk", mats, mats)
    return np.einsum("abmk,am,bk->ab", cross ** 2, 1.0 / energy, 1.0 / energy)


def covariance_coupling(cfg: ShapingConfig) -> np.ndarray:
    return _coupling_table(cfg.m_len, cfg.n_samples, cfg.delays, cfg.symbol_period)


def ensemble_diagonalization(hgram: np.ndarray, cfg: ShapingConfig) -> np.ndarray:
    """:func:`diagonalization_objective` of every channel's shaped covariance.

    With blocks (h_u^H h_v) I_u^T I_v the squared objective separates into
    sum_uv rho_uv C_uv - N_t M, where rho is the squared normalized column
    coherence of H and C depends on the delays only.
    """
    return _diag_metric(hgram, covariance_coupling(cfg), cfg.m_len)


def _diag_metric(hgram, coupling, m_len):
    diag = np.real(np.einsum("bii->bi", hgram))
    rho = np.abs(hgram) ** 2 / (diag[:, :, None] * diag[:, None, :])
    j2 = np.einsum("buv,...uv->...b", rho, coupling) - hgram.shape[-1] * m_len
    return np.sqrt(np.clip(j2, 0.0, None))


class _PairTables:
    """Delay-pair lookup tables over {0} + grid so candidates evaluate in batches."""

    def __init__(self, grid: np.ndarray, cfg: ShapingConfig, metric: SearchMetric):
        self.delays = np.concatenate([[0.0], grid])
        self.metric = metric
        self.m_len = cfg.m_len
        if metric is SearchMetric.CONDITION_NUMBER:
            g = symbol_pulses(cfg.with_delays(tuple(self.delays)))
            self.table = g.T @ g
        else:
            self.table = _coupling_table(cfg.m_len, cfg.n_samples, self.delays, cfg.symbol_period)

    def evaluate(self, hgram: np.ndarray, cand: np.ndarray) -> np.ndarray:
        """Ensemble-mean metric for candidate grid-index rows ``cand`` (C, dims)."""
        full = np.hstack([np.zeros((len(cand), 1), dtype=int), cand + 1])
        sel = self.table[full[:, :, None], full[:, None, :]]
        if self.metric is SearchMetric.CONDITION_NUMBER:
            vals = _condition_from_gram(hgram, sel)
        else:
            vals = _diag_metric(hgram, sel, self.m_len)
        return vals.mean(axis=-1)


def delay_grid(search: DelaySearchConfig, symbol_period: float) -> np.ndarray:
    """``grid_points_per_dim`` equally spaced delays strictly inside (0, max_delay)."""
    top = symbol_period if search.max_delay is None else search.max_delay
    g = search.grid_points_per_dim
    if g < 1:
        raise SearchConfigError("empty delay grid")
    return top * np.arange(1, g + 1) / (g + 1)


ChannelSource = Union[Callable[[int], np.ndarray], Sequence[np.ndarray]]


def _materialize(source: ChannelSource, size: int) -> np.ndarray:
    if callable(source):
        hs = [source(i) for i in range(size)]
    else:
        hs = list(source)
    if not hs:
        raise SearchConfigError("empty channel ensemble")
    return np.asarray(hs, dtype=complex)


_CHUNK = 20_000  # matrices per batched eigen-decomposition, bounds memory


def optimize_delays(channel_source: ChannelSource, n_tx: int, search: DelaySearchConfig,
                    cfg: ShapingConfig) -> DelaySearchResult:
    """Exhaustive (n_tx = 2) or coarse-to-fine coordinate (n_tx > 2) delay search.

    The first antenna is the timing reference (delay 0). Ties go to the
    smaller delay (lexicographically for several antennas). Arrays larger
    than 2x2 use a coarse grid of ``coarse_points_per_dim`` points per
    dimension unless the full grid fits the budget, followed by one sweep of
    each coordinate over the fine grid within one coarse step of the best
    point.
    """
    if n_tx < 2:
        raise SearchConfigError("delay search needs at least two transmit antennas")
    hs = _materialize(channel_source, search.ensemble_size)
    if hs.ndim != 3 or hs.shape[2] != n_tx:
        raise SearchConfigError(f"ensemble channels must have {n_tx} transmit antennas")
    hgram = _gram_columns(hs)
    grid = delay_grid(search, cfg.symbol_period)
    tables = _PairTables(grid, cfg, search.metric)
    dims = n_tx - 1
    size = len(grid)

    trace: list = []
    seen: dict = {}

    def run(cands: np.ndarray):
        """Evaluate unseen rows; return (value, index) of the lexicographic-first minimum."""
        fresh = np.array([c for c in cands if tuple(c) not in seen], dtype=int).reshape(-1, dims)
        if len(seen) + len(fresh) > search.budget:
            raise SearchConfigError(
                f"search needs {len(seen) + len(fresh)} evaluations, budget is {search.budget}")
        step = max(1, _CHUNK // len(hgram))
        for lo in range(0, len(fresh), step):
            part = fresh[lo:lo + step]
            for idx, v in zip(part, tables.evaluate(hgram, part)):
                key = tuple(int(i) for i in idx)
                seen[key] = float(v)
                trace.append(((0.0,) + tuple(float(grid[i]) for i in key), float(v)))
        best = None
        for c in cands:
            key = tuple(int(i) for i in c)
            if best is None or better(seen[key], key, *best):
                best = (seen[key], key)
        return best

    def better(a_val, a_idx, b_val, b_idx):
        return a_val < b_val or (a_val == b_val and a_idx < b_idx)

    stages = []
    if size ** dims <= search.budget and (dims == 1 or size <= search.coarse_points_per_dim):
        cands = np.array(list(itertools.product(range(size), repeat=dims)), dtype=int)
        stages.append(("full", len(cands)))
        best_val, best_idx = run(cands)
    else:
        c = min(size, search.coarse_points_per_dim)
        coarse = sorted(set(np.linspace(0, size - 1, c).round().astype(int).tolist()))
        step = max(1, math.ceil((size - 1) / max(len(coarse) - 1, 1)))
        cands = np.array(list(itertools.product(coarse, repeat=dims)), dtype=int)
        stages.append(("coarse", len(cands)))
        best_val, best_idx = run(cands)
        for axis in range(dims):
            lo = max(0, best_idx[axis] - step)
            hi = min(size - 1, best_idx[axis] + step)
            rows = np.array([best_idx[:axis] + (i,) + best_idx[axis + 1:] for i in range(lo, hi + 1)])
            stages.append((f"refine[{axis + 1}]", len(rows)))
            v, idx = run(rows)
            if better(v, idx, best_val, best_idx):
                best_val, best_idx = v, idx

    delays = (0.0,) + tuple(float(grid[i]) for i in best_idx)
    best_cfg = cfg.with_delays(delays)
    # the covariance route stays free of receive interpolation, here too
    gram = tx_pulse_gram(best_cfg) if search.metric is SearchMetric.COVARIANCE_DIAGONALIZATION else None
    sv = ensemble_singular_values(hgram, best_cfg, gram).mean(axis=0)
    within = bool(np.all(np.abs(sv - 1.0) <= search.epsilon))
    log.info("delay search: %s -> %.4f (%d evaluations)", delays, best_val, len(seen))
    return DelaySearchResult(delays=delays, objective_value=best_val, metric_trace=trace,
                             within_epsilon=within, mean_singular_values=tuple(sv.tolist()),
                             n_evaluations=len(seen), stages=stages)


def reference_ensemble(n: int, size: int, seed: int, isd_m: float = 50.0,
                       tx_spacing_wl: float = 0.5, rx_spacing_wl: float = 0.5) -> np.ndarray:
    """Correlated Rician channels for UEs dropped uniformly in the serving hexagon.

    Channel i depends only on (seed, i).
    """
    from .system import drop_ue

    out = np.empty((size, n, n), dtype=complex)
    for i in range(size):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), i]))
        d = max(float(np.linalg.norm(drop_ue(isd_m, rng))), 1.0)
        params = ch.ChannelParams(n_tx=n, n_rx=n, distance_m=d, tx_spacing_wl=tx_spacing_wl,
                                  rx_spacing_wl=rx_spacing_wl)
        out[i] = ch.assemble_channel(params, rng).h
    return out


@lru_cache(maxsize=32)
def _cached_search(n: int, isd_m: float, tx_sp: float, rx_sp: float,
                   search: DelaySearchConfig, shaping: ShapingConfig) -> DelaySearchResult:
    hs = reference_ensemble(n, search.ensemble_size, search.seed, isd_m, tx_sp, rx_sp)
    return optimize_delays(hs, n, search, shaping.with_delays((0.0,) * n))


def optimize_for_scenario(scenario: ScenarioConfig) -> DelaySearchResult:
    """Delay search on the scenario's reference ensemble (memoized)."""
    return _cached_search(scenario.mimo, scenario.isd_m, scenario.tx_spacing_wl,
                          scenario.rx_spacing_wl, scenario.search, scenario.shaping)
