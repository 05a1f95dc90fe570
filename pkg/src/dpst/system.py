"""Seven-cell hexagonal downlink Monte-Carlo.

The central site serves one UE dropped uniformly in its hexagon; the six
first-tier sites interfere. Every drop draws from its own generator keyed by
``(master_seed, drop_index)``, so results do not depend on how drops are
scheduled across threads, and different modes evaluated with the same seed
see the same UE positions, shadowing and white-noise channel draws.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import channel as ch
from .config import ScenarioConfig, SimMode, UmiPathloss
from .numerics import SvdResult, condition_number, numerical_rank, singular_values, svd
from .shaping import ShapingConfig, virtual_channel
from .transceiver import LinkState, effective_sinr, link, throughput

log = logging.getLogger(__name__)

N_SITES = 7


@dataclass(frozen=True)
class DropResult:
    ue_position: tuple
    serving_sinr_db: tuple
    throughput_bps: float
    condition_number: float
    effective_sinr_db: float


class CdfSeries:
    """Empirical distribution of one scalar metric."""

    def __init__(self, values: Sequence[float], metric_name: str):
        self.sorted_values = np.sort(np.asarray(values, dtype=float))
        self.metric_name = metric_name

    def __len__(self):
        return self.sorted_values.size

    def percentile(self, p: float) -> float:
        if not 0 <= p <= 100:
            raise ValueError("percentile must lie in [0, 100]")
        return float(np.percentile(self.sorted_values, p))

    def median(self) -> float:
        return self.percentile(50)

    def cumulative_probability(self) -> np.ndarray:
        n = self.sorted_values.size
        return np.arange(1, n + 1) / n


def hex_layout(isd_m: float) -> np.ndarray:
    """Serving site at the origin plus six neighbours at 0, 60, ..., 300 degrees."""
    if not isd_m > 0:
        raise ValueError("isd_m must be positive")
    ang = np.deg2rad(np.arange(6) * 60.0)
    ring = isd_m * np.column_stack([np.cos(ang), np.sin(ang)])
    return np.vstack([[0.0, 0.0], ring])


def in_serving_hexagon(point: np.ndarray, isd_m: float) -> bool:
    # serving-cell region: closer to the origin than to any neighbour
    ang = np.deg2rad(np.arange(6) * 60.0)
    proj = point[0] * np.cos(ang) + point[1] * np.sin(ang)
    return bool(np.all(proj <= isd_m / 2.0))


def drop_ue(isd_m: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform point in the central hexagon (rejection from its bounding box)."""
    rx = isd_m / math.sqrt(3.0)  # circumradius
    ry = isd_m / 2.0
    while True:
        p = np.array([rng.uniform(-ry, ry), rng.uniform(-rx, rx)])
        if in_serving_hexagon(p, isd_m):
            return p


def los_probability(d_m: float, model: UmiPathloss = UmiPathloss()) -> float:
    if not d_m > 0:
        raise ValueError("distance must be positive")
    b, c = model.los_prob_breakpoint_m, model.los_prob_decay_m
    e = math.exp(-d_m / c)
    return min(b / d_m, 1.0) * (1.0 - e) + e


def pathloss_db(d_m: float, los: bool, carrier_ghz: float,
                model: UmiPathloss = UmiPathloss()) -> float:
    if d_m < 1.0:
        log.warning("path-loss distance %.3f m below 1 m, clamped to 1 m", d_m)
        d_m = 1.0
    if los:
        return model.los_slope * math.log10(d_m) + model.los_intercept + model.los_freq_coeff * math.log10(carrier_ghz)
    return model.nlos_slope * math.log10(d_m) + model.nlos_intercept + model.nlos_freq_coeff * math.log10(carrier_ghz)


def noise_power_w(bandwidth_hz: float, noise_figure_db: float) -> float:
    return 10 ** ((-174.0 + 10 * math.log10(bandwidth_hz) + noise_figure_db - 30.0) / 10.0)


def drop_rng(master_seed: int, drop_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(drop_index)]))


def resolve_delays(scenario: ScenarioConfig) -> tuple:
    if not isinstance(scenario.delays, str):
        return scenario.delays
    from .delay_opt import optimize_for_scenario
    return optimize_for_scenario(scenario).delays


def _shaping(scenario: ScenarioConfig, delays) -> ShapingConfig:
    return scenario.shaping.with_delays(delays)


def in_channel_basis(dec: SvdResult, sigma) -> np.ndarray:
    """U diag(sigma) V^H using the singular vectors of a physical channel.

    Expresses the (diagonal) virtual channel in antenna coordinates so it can
    share the antenna-domain interference covariance with the other modes.
    Singular values, Frobenius norm and condition number are unchanged.
    """
    L = len(sigma)
    return (dec.u[:, :L] * np.asarray(sigma)) @ dec.v[:, :L].conj().T


@dataclass(frozen=True, eq=False)
class DropLink:
    """Internals of one drop: UE position, serving channel as used, and link state."""
    ue: np.ndarray
    h_serv: np.ndarray
    serving_gain: float
    state: LinkState


def drop_link(scenario: ScenarioConfig, drop_index: int,
              delays: Optional[Sequence[float]] = None) -> DropLink:
    """Draw one drop and evaluate its downlink.

    DPST delays are resolved from the scenario when not given.
    """
    rng = drop_rng(scenario.master_seed, drop_index)
    n = scenario.mimo
    sites = hex_layout(scenario.isd_m)
    ue = drop_ue(scenario.isd_m, rng)
    dist = np.maximum(np.linalg.norm(sites - ue, axis=1), 1.0)

    # large-scale fading; drawn for all sites regardless of single_cell
    gains = np.empty(N_SITES)
    for k in range(N_SITES):
        los = rng.random() < los_probability(dist[k], scenario.pathloss)
        sigma = scenario.shadowing_sigma_los_db if los else scenario.shadowing_sigma_nlos_db
        shadow = rng.normal(0.0, sigma)
        pl = pathloss_db(dist[k], los, scenario.carrier_ghz, scenario.pathloss)
        gains[k] = 10 ** ((scenario.antenna_gain_dbi - pl - shadow) / 10.0)

    mode = scenario.mode
    chan_mode = ch.ChannelMode.RAYLEIGH if mode is SimMode.RAYLEIGH else ch.ChannelMode.CORRELATED
    channels = []
    for k in range(N_SITES):
        params = ch.ChannelParams(n_tx=n, n_rx=n, distance_m=float(dist[k]),
                                  tx_spacing_wl=scenario.tx_spacing_wl,
                                  rx_spacing_wl=scenario.rx_spacing_wl, mode=chan_mode)
        channels.append(ch.assemble_channel(params, rng).h)

    p_tx = 10 ** ((scenario.bs_power_dbm - 30.0) / 10.0)
    n0 = noise_power_w(scenario.bandwidth_hz, scenario.noise_figure_db)
    interferers = [] if scenario.single_cell else range(1, N_SITES)

    h0 = channels[0]
    src = svd(h0)
    if mode is SimMode.DPST:
        if delays is None:
            delays = resolve_delays(scenario)
        vc = virtual_channel(h0, _shaping(scenario, delays), full=False)
        h_serv = in_channel_basis(src, singular_values(vc.h_n))
    elif mode is SimMode.OPTIMUM:
        h_serv = ch.equalize_singular_values(h0)
    else:
        h_serv = h0

    phi = np.zeros((n, n), dtype=complex)
    for k in interferers:
        hk = channels[k]
        # interferers precode with unitary bases: isotropic per-antenna power
        phi += (p_tx / n) * gains[k] * (hk @ hk.conj().T)

    # precode along the physical right singular vectors; this only matters
    # when the spectrum is degenerate (optimum mode), where SVD is not unique
    state = link(np.sqrt(gains[0]) * h_serv, phi, n0, p_tx, v=src.v[:, :n])
    return DropLink(ue=ue, h_serv=h_serv, serving_gain=float(gains[0]), state=state)


def run_drop(scenario: ScenarioConfig, drop_index: int,
             delays: Optional[Sequence[float]] = None) -> DropResult:
    """Simulate one UE drop and return its link metrics."""
    dl = drop_link(scenario, drop_index, delays)
    ue, sinr = dl.ue, dl.state.sinr
    with np.errstate(divide="ignore"):
        sinr_db = tuple(float(x) for x in 10 * np.log10(sinr))
    eff = effective_sinr(sinr)
    return DropResult(
        ue_position=(float(ue[0]), float(ue[1])),
        serving_sinr_db=sinr_db,
        throughput_bps=throughput(sinr, scenario.bandwidth_hz, scenario.se_cap),
        condition_number=condition_number(dl.h_serv),
        effective_sinr_db=float(10 * np.log10(eff)) if eff > 0 else float("-inf"),
    )


def _ordered_map(fn, n: int, threads: int) -> list:
    # results in index order whatever the thread count
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def run_drops(scenario: ScenarioConfig, delays=None, threads: int = 1) -> list[DropResult]:
    """All drops of a scenario, in drop-index order whatever the thread count."""
    if scenario.mode is SimMode.DPST and delays is None:
        delays = resolve_delays(scenario)
    return _ordered_map(lambda i: run_drop(scenario, i, delays), scenario.n_drops, threads)


def run_scenario(scenario: ScenarioConfig, delays=None, threads: int = 1) -> dict[str, CdfSeries]:
    """CDFs of effective SINR (dB), UE throughput (bit/s) and condition number."""
    drops = run_drops(scenario, delays, threads)
    return {
        "sinr": CdfSeries([d.effective_sinr_db for d in drops], "effective_sinr_db"),
        "throughput": CdfSeries([d.throughput_bps for d in drops], "throughput_bps"),
        "condnum": CdfSeries([d.condition_number for d in drops], "condition_number"),
    }


@dataclass(frozen=True)
class ChannelStats:
    mode: str
    n_draws: int
    mean_rank: float
    mean_condition: float


def draw_channel(scenario: ScenarioConfig, mode: SimMode, index: int, delays=None) -> np.ndarray:
    """Serving-link channel of draw ``index`` as seen in ``mode``.

    The UE position is dropped in the serving hexagon (it sets the Rician K
    factor); Rayleigh draws ignore it. The DPST entry is the virtual channel.
    """
    rng = drop_rng(scenario.master_seed, index)
    d = max(float(np.linalg.norm(drop_ue(scenario.isd_m, rng))), 1.0)
    chan_mode = ch.ChannelMode.RAYLEIGH if mode is SimMode.RAYLEIGH else ch.ChannelMode.CORRELATED
    params = ch.ChannelParams(n_tx=scenario.mimo, n_rx=scenario.mimo, distance_m=d,
                              tx_spacing_wl=scenario.tx_spacing_wl,
                              rx_spacing_wl=scenario.rx_spacing_wl, mode=chan_mode)
    h = ch.assemble_channel(params, rng).h
    if mode is SimMode.DPST:
        return virtual_channel(h, _shaping(scenario, delays), full=False).h_n
    if mode is SimMode.OPTIMUM:
        return ch.equalize_singular_values(h)
    return h


def channel_statistics(scenario: ScenarioConfig, mode: SimMode, delays=None,
                       threads: int = 1) -> ChannelStats:
    """Mean numerical rank and mean condition number over ``n_drops`` draws."""
    mode = SimMode(mode)
    if mode is SimMode.DPST and delays is None:
        delays = resolve_delays(scenario)

    def one(i):
        h = draw_channel(scenario, mode, i, delays)
        return numerical_rank(h), condition_number(h)

    res = np.array(_ordered_map(one, scenario.n_drops, threads), dtype=float)
    return ChannelStats(mode=mode.value, n_draws=scenario.n_drops,
                        mean_rank=float(res[:, 0].mean()), mean_condition=float(res[:, 1].mean()))
