"""Run configuration: dataclasses plus the INI-style ``key = value`` file format.

Sections: ``[scenario]``, ``[radio]``, ``[shaping]``, ``[search]`` and
``[pathloss]``. Unknown sections or keys are rejected.

Delays are fractions of the symbol period. ``scenario.delays_ns`` is accepted
as an alternative when ``scenario.assumed_symbol_period_ns`` is set; it is
converted on load, so serialized configs always carry fractions.
"""
from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from .shaping import ShapingConfig


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending ``section.key``."""


class SimMode(str, Enum):
    CORRELATED = "correlated"
    RAYLEIGH = "rayleigh"
    DPST = "dpst"
    OPTIMUM = "optimum"


class SearchMetric(str, Enum):
    CONDITION_NUMBER = "condition_number"
    COVARIANCE_DIAGONALIZATION = "covariance_diagonalization"


@dataclass(frozen=True)
class DelaySearchConfig:
    grid_points_per_dim: int = 100
    epsilon: float = 0.3
    ensemble_size: int = 200
    metric: SearchMetric = SearchMetric.CONDITION_NUMBER
    max_delay: Optional[float] = None  # None -> symbol period
    budget: int = 200_000
    coarse_points_per_dim: int = 20
    seed: int = 2024

    def __post_init__(self):
        object.__setattr__(self, "metric", SearchMetric(self.metric))


@dataclass(frozen=True)
class UmiPathloss:
    """Urban-micro hexagonal-layout LOS/NLOS path loss and LOS probability."""
    los_slope: float = 22.0
    los_intercept: float = 28.0
    los_freq_coeff: float = 20.0
    nlos_slope: float = 36.7
    nlos_intercept: float = 22.7
    nlos_freq_coeff: float = 26.0
    los_prob_breakpoint_m: float = 18.0
    los_prob_decay_m: float = 36.0


Delays = Union[str, tuple]


@dataclass(frozen=True)
class ScenarioConfig:
    # [scenario]
    isd_m: float = 50.0
    area_m: float = 500.0
    n_drops: int = 10_000
    master_seed: int = 1
    mimo: int = 2
    mode: SimMode = SimMode.CORRELATED
    delays: Delays = "optimize"
    assumed_symbol_period_ns: Optional[float] = None
    tx_spacing_wl: float = 0.5
    rx_spacing_wl: float = 0.5
    single_cell: bool = False
    # [radio]
    carrier_ghz: float = 2.0
    bandwidth_hz: float = 1e7
    bs_power_dbm: float = 24.0
    noise_figure_db: float = 9.0
    antenna_gain_dbi: float = 0.0
    shadowing_sigma_los_db: float = 3.0
    shadowing_sigma_nlos_db: float = 4.0
    se_cap: Optional[float] = None
    # nested sections
    shaping: ShapingConfig = field(default_factory=ShapingConfig)
    search: DelaySearchConfig = field(default_factory=DelaySearchConfig)
    pathloss: UmiPathloss = field(default_factory=UmiPathloss)

    def __post_init__(self):
        object.__setattr__(self, "mode", SimMode(self.mode))
        if not isinstance(self.delays, str):
            object.__setattr__(self, "delays", tuple(float(d) for d in self.delays))
        validate(self)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


SECTIONS = {
    "scenario": ("isd_m", "area_m", "n_drops", "master_seed", "mimo", "mode", "delays",
                 "assumed_symbol_period_ns", "tx_spacing_wl", "rx_spacing_wl", "single_cell"),
    "radio": ("carrier_ghz", "bandwidth_hz", "bs_power_dbm", "noise_figure_db", "antenna_gain_dbi",
              "shadowing_sigma_los_db", "shadowing_sigma_nlos_db", "se_cap"),
}
NESTED = {"shaping": ("shaping", ShapingConfig), "search": ("search", DelaySearchConfig),
          "pathloss": ("pathloss", UmiPathloss)}
# per-antenna delays are a scenario setting, not part of the shaping section
EXCLUDED = {"shaping": {"delays"}}


def _fail(key: str, msg: str):
    raise ConfigError(f"{key}: {msg}")


def validate(cfg: ScenarioConfig) -> None:
    if not cfg.isd_m > 0:
        _fail("scenario.isd_m", f"must be > 0, got {cfg.isd_m}")
    if not cfg.area_m > 0:
        _fail("scenario.area_m", f"must be > 0, got {cfg.area_m}")
    if cfg.n_drops < 1:
        _fail("scenario.n_drops", f"must be >= 1, got {cfg.n_drops}")
    if cfg.mimo not in (2, 4):
        _fail("scenario.mimo", f"must be 2 or 4, got {cfg.mimo}")
    if not 0 <= cfg.master_seed < 2 ** 64:
        _fail("scenario.master_seed", "must be an unsigned 64-bit integer")
    if isinstance(cfg.delays, str):
        if cfg.delays != "optimize":
            _fail("scenario.delays", f"expected 'optimize' or a list of delays, got {cfg.delays!r}")
    else:
        if len(cfg.delays) != cfg.mimo:
            _fail("scenario.delays", f"need {cfg.mimo} delays, got {len(cfg.delays)}")
        if cfg.delays[0] != 0.0:
            _fail("scenario.delays", "first delay must be 0")
        if any(not 0.0 <= d < cfg.shaping.symbol_period for d in cfg.delays):
            _fail("scenario.delays", f"delays must lie in [0, {cfg.shaping.symbol_period})")
    if cfg.assumed_symbol_period_ns is not None and not cfg.assumed_symbol_period_ns > 0:
        _fail("scenario.assumed_symbol_period_ns", "must be > 0")
    for k in ("tx_spacing_wl", "rx_spacing_wl"):
        if getattr(cfg, k) < 0:
            _fail(f"scenario.{k}", "must be >= 0")
    for k in ("carrier_ghz", "bandwidth_hz"):
        if not getattr(cfg, k) > 0:
            _fail(f"radio.{k}", "must be > 0")
    for k in ("shadowing_sigma_los_db", "shadowing_sigma_nlos_db"):
        if getattr(cfg, k) < 0:
            _fail(f"radio.{k}", "must be >= 0")
    if cfg.se_cap is not None and not cfg.se_cap > 0:
        _fail("radio.se_cap", "must be > 0")
    s = cfg.search
    if s.grid_points_per_dim < 2:
        _fail("search.grid_points_per_dim", "must be >= 2")
    if not 0 < s.epsilon < 1:
        _fail("search.epsilon", "must lie in (0, 1)")
    if s.ensemble_size < 1:
        _fail("search.ensemble_size", "must be >= 1")
    if s.budget < 1:
        _fail("search.budget", "must be >= 1")
    if s.coarse_points_per_dim < 2:
        _fail("search.coarse_points_per_dim", "must be >= 2")
    if s.max_delay is not None and not 0 < s.max_delay <= cfg.shaping.symbol_period:
        _fail("search.max_delay", "must lie in (0, symbol_period]")


def _coerce(key: str, raw: str, default, annotation: str):
    raw = raw.strip()
    optional = "Optional" in annotation
    if optional and raw.lower() in ("", "none"):
        return None
    try:
        if key.endswith("delays") and "Delays" in annotation:
            if raw.lower() == "optimize":
                return "optimize"
            return tuple(float(x) for x in raw.replace("[", "").replace("]", "").split(",") if x.strip())
        if "bool" in annotation:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if "SimMode" in annotation:
            return SimMode(raw.lower())
        if "SearchMetric" in annotation:
            return SearchMetric(raw.lower())
        if "int" in annotation and "float" not in annotation:
            return int(raw)
        if "float" in annotation:
            return float(raw)
    except ValueError:
        _fail(key, f"cannot parse {raw!r} as {annotation}")
    return raw


def _build(cls, section: str, items: dict, base=None):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for k, raw in items.items():
        if k not in fields or k in EXCLUDED.get(section, ()):
            _fail(f"{section}.{k}", "unknown key")
        default = getattr(base, k) if base is not None else fields[k].default
        kwargs[k] = _coerce(f"{section}.{k}", raw, default, str(fields[k].type))
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        _fail(section, str(exc))


def parse_text(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    top = {}
    nested = {}
    for sec in cp.sections():
        items = dict(cp.items(sec))
        if sec in SECTIONS:
            for k in items:
                if k not in SECTIONS[sec] and not (sec == "scenario" and k == "delays_ns"):
                    _fail(f"{sec}.{k}", "unknown key")
            top.update({k: (sec, v) for k, v in items.items()})
        elif sec in NESTED:
            nested[sec] = items
        else:
            _fail(sec, "unknown section")
    fields = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
    kwargs = {}
    ns = top.pop("delays_ns", None)
    for k, (sec, raw) in top.items():
        kwargs[k] = _coerce(f"{sec}.{k}", raw, fields[k].default, str(fields[k].type))
    for sec, items in nested.items():
        attr, cls = NESTED[sec]
        kwargs[attr] = _build(cls, sec, items)
    if ns is not None:
        kwargs["delays"] = _delays_from_ns(ns[1], kwargs, top)
    try:
        return ScenarioConfig(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _delays_from_ns(raw: str, kwargs: dict, top: dict) -> tuple:
    """Convert ``scenario.delays_ns`` to fractions of the symbol period."""
    if "delays" in top:
        _fail("scenario.delays_ns", "give either delays or delays_ns, not both")
    period_ns = kwargs.get("assumed_symbol_period_ns")
    if period_ns is None:
        _fail("scenario.delays_ns", "requires scenario.assumed_symbol_period_ns")
    try:
        ns = [float(x) for x in raw.replace("[", "").replace("]", "").split(",") if x.strip()]
    except ValueError:
        _fail("scenario.delays_ns", f"cannot parse {raw!r} as a list of numbers")
    shaping = kwargs.get("shaping", ShapingConfig())
    return tuple(d / period_ns * shaping.symbol_period for d in ns)


def parse_config(path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_text(p.read_text(encoding="utf-8"))


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, Enum):
        return v.value
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: ScenarioConfig) -> str:
    """Inverse of :func:`parse_text`; floats use repr so values round-trip exactly."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for sec, keys in SECTIONS.items():
        cp[sec] = {k: _fmt(getattr(cfg, k)) for k in keys}
    for sec, (attr, cls) in NESTED.items():
        obj = getattr(cfg, attr)
        cp[sec] = {f.name: _fmt(getattr(obj, f.name)) for f in dataclasses.fields(cls)
                   if f.name not in EXCLUDED.get(sec, ())}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def to_dict(cfg: ScenarioConfig) -> dict:
    def conv(v):
        if isinstance(v, Enum):
            return v.value
        if dataclasses.is_dataclass(v):
            return {f.name: conv(getattr(v, f.name)) for f in dataclasses.fields(v)}
        if isinstance(v, tuple):
            return [conv(x) for x in v]
        return v
    return conv(cfg)
