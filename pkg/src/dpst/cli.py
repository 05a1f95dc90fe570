"""Command-line front end.

    dpst simulate        --config run.ini --mode all --out-dir out/
    dpst optimize-delay  --config run.ini --out-dir out/
    dpst channel-stats   --config run.ini --mode all

``--seed`` overrides ``scenario.master_seed`` (for ``optimize-delay`` it
overrides ``search.seed``). ``--threads`` falls back to ``DPST_SIM_THREADS``
and never changes results.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import ConfigError, ScenarioConfig, SimMode, parse_config, serialize, to_dict
from .delay_opt import SearchConfigError, optimize_for_scenario
from .system import CdfSeries, channel_statistics, resolve_delays, run_scenario

log = logging.getLogger("dpst")

THREADS_ENV = "DPST_SIM_THREADS"
MODE_CHOICES = [m.value for m in SimMode] + ["all"]
CDF_FILES = {"sinr": "sinr_cdf", "throughput": "throughput_cdf", "condnum": "condnum_cdf"}


def _fmt(x: float) -> str:
    # shortest repr that round-trips; inf/-inf/nan as Python spells them
    return repr(float(x))


def write_cdf(path: Path, series: CdfSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value", "cumulative_probability"])
        for v, p in zip(series.sorted_values, series.cumulative_probability()):
            w.writerow([_fmt(v), _fmt(p)])


def read_cdf(path) -> tuple[list[float], list[float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["value", "cumulative_probability"]:
        raise ValueError(f"unexpected header in {path}: {rows[0]}")
    return [float(r[0]) for r in rows[1:]], [float(r[1]) for r in rows[1:]]


def resolve_threads(arg: Optional[int]) -> int:
    if arg is not None:
        n = arg
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}: expected an integer, got {raw!r}")
    if n < 1:
        raise ConfigError(f"threads must be >= 1, got {n}")
    return n


def _load(args) -> ScenarioConfig:
    cfg = parse_config(args.config) if args.config else ScenarioConfig()
    if args.seed is not None:
        if args.command == "optimize-delay":
            cfg = cfg.replace(search=dataclasses.replace(cfg.search, seed=args.seed))
        else:
            cfg = cfg.replace(master_seed=args.seed)
    return cfg


def _modes(args, cfg: ScenarioConfig) -> list[SimMode]:
    if args.mode is None:
        return [cfg.mode]
    if args.mode == "all":
        return list(SimMode)
    return [SimMode(args.mode)]


def _period_note(cfg: ScenarioConfig, delays) -> Optional[str]:
    if cfg.assumed_symbol_period_ns is None:
        return None
    ts = cfg.shaping.symbol_period
    ns = [d / ts * cfg.assumed_symbol_period_ns for d in delays]
    return (f"delays are fractions of the symbol period; with the assumed period of "
            f"{cfg.assumed_symbol_period_ns} ns they correspond to {ns} ns")


def _write_manifest(out: Path, cfg: ScenarioConfig, seed: int, t0: float,
                    outputs: list, **extra) -> Path:
    manifest = {
        "artifact_version": __version__,
        "seed": seed,
        "wall_time_s": time.perf_counter() - t0,
        "outputs": [str(p) for p in outputs],
        "config_echo": to_dict(cfg),
        "config_text": serialize(cfg),
        **{k: v for k, v in extra.items() if v is not None},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")
    return path


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    cfg = _load(args)
    threads = resolve_threads(args.threads)
    modes = _modes(args, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs, delays_used = [], None
    for mode in modes:
        sc = cfg.replace(mode=mode)
        delays = resolve_delays(sc) if mode is SimMode.DPST else None
        if delays is not None:
            delays_used = list(delays)
        cdfs = run_scenario(sc, delays=delays, threads=threads)
        suffix = f"_{mode.value}" if len(modes) > 1 else ""
        for key, stem in CDF_FILES.items():
            path = out / f"{stem}{suffix}.csv"
            write_cdf(path, cdfs[key])
            outputs.append(path)
        print(f"{mode.value:>10}: median effective SINR {cdfs['sinr'].median():7.2f} dB, "
              f"median throughput {cdfs['throughput'].median() / 1e6:8.2f} Mbit/s, "
              f"median condition {cdfs['condnum'].median():8.3f}")
    note = _period_note(cfg, delays_used) if delays_used else None
    _write_manifest(out, cfg, cfg.master_seed, t0, outputs, modes=[m.value for m in modes],
                    dpst_delays=delays_used, symbol_period_note=note)
    return 0


def cmd_optimize_delay(args) -> int:
    t0 = time.perf_counter()
    cfg = _load(args)
    res = optimize_for_scenario(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "delay_trace.csv"
    with open(trace_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"delay_{u + 1}" for u in range(1, cfg.mimo)] + ["metric"])
        for delays, val in res.metric_trace:
            w.writerow([_fmt(d) for d in delays[1:]] + [_fmt(val)])
    delays = ", ".join(f"{d:.4f}" for d in res.delays)
    print(f"optimal delays (fractions of Ts): {delays}")
    print(f"objective ({cfg.search.metric.value}): {res.objective_value:.6f}")
    sv = ", ".join(f"{s:.3f}" for s in res.mean_singular_values)
    print(f"mean normalized singular values: {sv}; within 1 +/- {cfg.search.epsilon}: "
          f"{'yes' if res.within_epsilon else 'no'}")
    note = _period_note(cfg, res.delays)
    if note:
        print(note)
    _write_manifest(out, cfg, cfg.search.seed, t0, [trace_path], delays=list(res.delays),
                    objective_value=res.objective_value, stages=res.stages,
                    n_evaluations=res.n_evaluations, within_epsilon=res.within_epsilon,
                    symbol_period_note=note)
    return 0


def cmd_channel_stats(args) -> int:
    cfg = _load(args)
    threads = resolve_threads(args.threads)
    modes = _modes(args, cfg) if args.mode is not None else list(SimMode)
    n = cfg.mimo
    print(f"{n}x{n} channels, {cfg.n_drops} realizations, seed {cfg.master_seed}")
    print(f"{'channel':<12}{'mean rank':>10}{'mean condition':>16}")
    for mode in modes:
        st = channel_statistics(cfg.replace(mode=mode), mode, threads=threads)
        print(f"{mode.value:<12}{st.mean_rank:>10.2f}{st.mean_condition:>16.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style configuration file (defaults if omitted)")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    common.add_argument("--mode", choices=MODE_CHOICES, help="channel mode, or 'all'")
    common.add_argument("--out-dir", default=".", help="directory for CSV and manifest output")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dpst", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the multi-cell Monte-Carlo"
                   ).set_defaults(func=cmd_simulate)
    sub.add_parser("optimize-delay", parents=[common], help="search the per-antenna delays"
                   ).set_defaults(func=cmd_optimize_delay)
    sub.add_parser("channel-stats", parents=[common], help="mean rank and condition number per mode"
                   ).set_defaults(func=cmd_channel_stats)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SearchConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
