"""Command-line entry points: single runs, grid sweeps, and a debug dump of
the bounded rate process."""

from __future__ import annotations

import argparse
import csv
import itertools
import sys

import numpy as np

from .engine import NS_PER_S
from .fgn import (BoundingMode, FgnParams, RateBounds, bound_sequence,
                  generate_fgn)
from .harness import (SCENARIOS, ConfigError, ScenarioConfig, emit_report,
                      run_experiment)

TRACE_COLUMNS = ["t_s", "port", "q_cells", "vbr_rate_cps",
                 "target_capacity_cps", "z", "fairshare_cps"]


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", choices=SCENARIOS, default="wan")
    p.add_argument("--mss", type=int, default=512,
                   help="TCP maximum segment size in bytes")
    p.add_argument("--video-mean", type=float, default=5.0,
                   help="per-video-source mean rate, Mbps")
    p.add_argument("--video-sigma", type=float, default=5.0,
                   help="per-video-source rate standard deviation, Mbps")
    p.add_argument("--hurst", type=float, default=0.8,
                   help="Hurst parameter of the video rate process")
    p.add_argument("--duration", type=float, default=None,
                   help="simulated seconds (default: per-scenario)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--n-tcp", type=int, default=15)
    p.add_argument("--n-video", type=int, default=9)
    p.add_argument("--sat-one-way-ms", type=float, default=270.0)


def _config_from_args(args, **overrides) -> ScenarioConfig:
    kw = dict(
        scenario=args.scenario, mss=args.mss, video_mean=args.video_mean,
        video_sigma=args.video_sigma, hurst=args.hurst,
        duration_s=args.duration, seed=args.seed, n_tcp=args.n_tcp,
        n_video=args.n_video, sat_one_way_ms=args.sat_one_way_ms,
    )
    kw.update(overrides)
    return ScenarioConfig(**kw)


def _write_trace(trace, destination: str) -> None:
    with open(destination, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
        writer.writeheader()
        for t_ns, entry in trace:
            row = {"t_s": t_ns / NS_PER_S}
            row.update(entry)
            writer.writerow(row)


def _run_one(config: ScenarioConfig, out: str, trace_path=None,
             plot_dir=None, echo=True) -> None:
    want_trace = trace_path is not None or plot_dir is not None
    interval_trace = [] if want_trace else None
    acr_trace = [] if plot_dir is not None else None
    report = run_experiment(config, interval_trace=interval_trace,
                            acr_trace=acr_trace)
    emit_report(report, out)
    if trace_path is not None:
        _write_trace(interval_trace, trace_path)
    if plot_dir is not None:
        from .plots import render_all
        for path in render_all(report, interval_trace, acr_trace, plot_dir):
            if echo:
                print(f"wrote {path}")
    if echo:
        print(f"{config.scenario} mss={config.mss} seed={config.seed}: "
              f"tcp={report.total_tcp_throughput_mbps:.2f} Mbps "
              f"vbr={report.vbr_mean_mbps:.2f} Mbps "
              f"maxq={report.max_abr_queue_cells} cells "
              f"eff={report.efficiency_pct:.1f}% "
              f"retx={report.retransmissions}")


def cmd_run(args) -> int:
    config = _config_from_args(args)
    _run_one(config, args.out, trace_path=args.trace, plot_dir=args.plot_dir)
    return 0


_SWEEP_KEYS = {
    "scenario": str, "mss": int, "video_mean": float, "video_sigma": float,
    "hurst": float, "duration": float, "seed": int, "n_tcp": int,
    "n_video": int, "sat_one_way_ms": float,
}


def parse_matrix(path: str) -> dict[str, list]:
    """Read a sweep matrix: one ``key = v1, v2, ...`` line per swept axis.

    Blank lines and ``#`` comments are ignored. Every key must be a run
    parameter; single-valued lines pin a parameter for the whole sweep.
    """
    axes = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, _, rhs = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _SWEEP_KEYS:
                raise ConfigError(
                    f"{path}:{lineno}: unknown parameter {key!r} "
                    f"(valid: {', '.join(sorted(_SWEEP_KEYS))})")
            cast = _SWEEP_KEYS[key]
            try:
                values = [cast(v.strip()) for v in rhs.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
            if not values:
                raise ConfigError(f"{path}:{lineno}: no values for {key!r}")
            axes[key] = values
    if not axes:
        raise ConfigError(f"{path}: empty sweep matrix")
    return axes


def cmd_sweep(args) -> int:
    axes = parse_matrix(args.matrix)
    keys = list(axes)
    n = 0
    for combo in itertools.product(*(axes[k] for k in keys)):
        overrides = dict(zip(keys, combo))
        overrides["duration_s"] = overrides.pop("duration", None)
        config = ScenarioConfig(**overrides)
        _run_one(config, args.out, echo=not args.quiet)
        n += 1
    print(f"sweep complete: {n} runs -> {args.out}")
    return 0


def cmd_fgn_dump(args) -> int:
    params = FgnParams(hurst=args.hurst, mean=args.mean, sigma=args.sigma,
                       length=args.length, seed=args.seed)
    raw = generate_fgn(params)
    if args.raw:
        values = np.asarray(raw, dtype=float)
    else:
        mode = BoundingMode[args.mode.upper().replace("-", "_")]
        values = bound_sequence(raw, mode, RateBounds(args.lo, args.hi)).values
    out = sys.stdout if args.out is None else open(args.out, "w")
    try:
        for v in values:
            out.write(f"{v}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abrsim",
        description="Cell-level simulator of TCP over explicit-rate ABR with "
                    "self-similar video background traffic.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    _add_run_args(p_run)
    p_run.add_argument("--out", required=True, help="results CSV (appended)")
    p_run.add_argument("--trace", default=None,
                       help="per-interval switch trace CSV")
    p_run.add_argument("--plot-dir", default=None,
                       help="also render PNG figures into this directory")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a grid of experiments")
    p_sweep.add_argument("--matrix", required=True,
                         help="plain-text file, one key=v1,v2,... line per axis")
    p_sweep.add_argument("--out", required=True, help="results CSV (appended)")
    p_sweep.add_argument("--quiet", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_fgn = sub.add_parser("fgn", help="rate-process debug tools")
    fgn_sub = p_fgn.add_subparsers(dest="fgn_command", required=True)
    p_dump = fgn_sub.add_parser(
        "dump", help="print a bounded rate sequence, one Mbps value per line")
    p_dump.add_argument("--hurst", type=float, default=0.8)
    p_dump.add_argument("--mean", type=float, default=5.0)
    p_dump.add_argument("--sigma", type=float, default=5.0)
    p_dump.add_argument("--length", type=int, default=1024)
    p_dump.add_argument("--seed", type=int, default=1)
    p_dump.add_argument("--mode", default="reject",
                        choices=[m.name.lower().replace("_", "-")
                                 for m in BoundingMode])
    p_dump.add_argument("--lo", type=float, default=0.0)
    p_dump.add_argument("--hi", type=float, default=15.0)
    p_dump.add_argument("--raw", action="store_true",
                        help="dump the unbounded samples instead")
    p_dump.add_argument("--out", default=None, help="file instead of stdout")
    p_dump.set_defaults(func=cmd_fgn_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
