"""Command-line entry point: ``blindofdm run|sweep|compare``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .errors import ConfigurationError
from .harness import (
    ESTIMATORS,
    SimConfig,
    SweepSpec,
    emit_outputs,
    load_config,
    run_point,
    run_sweep,
)


def _parse_values(text: str, axis: str):
    conv = int if axis == "blocks" else float
    return tuple(conv(v) for v in text.split(",") if v.strip())


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with configuration keys")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default: 1)")
    p.add_argument("--trials", type=int, help="override n_trials")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blindofdm",
        description="Monte-Carlo NMSE experiments for blind OFDM channel estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a single operating point")
    _common(p_run)

    for name, helptext in (("sweep", "sweep block count or SNR"),
                           ("compare", "subspace, precoding and hybrid on one grid")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--axis", choices=("blocks", "snr"), default="blocks")
        p.add_argument("--values", help="comma-separated grid (default: figure grid)")
    return parser


def _config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.trials is not None:
        cfg = replace(cfg, n_trials=args.trials)
    if args.command == "compare":
        cfg = replace(cfg, estimators=ESTIMATORS)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command == "run":
            report = run_point(cfg, args.workers)
            stem = "run"
        else:
            sweep = (SweepSpec(args.axis, _parse_values(args.values, args.axis))
                     if args.values else SweepSpec.default(args.axis))
            report = run_sweep(cfg, sweep, args.workers)
            stem = f"{args.command}_{args.axis}"
        csv_path, gp_path = emit_outputs(report, args.out, stem)
    except (ConfigurationError, OSError) as exc:
        print(f"blindofdm: error: {exc}", file=sys.stderr)
        return 2

    for pt in report.points:
        print(f"{pt.axis}={pt.axis_value:<8g} {pt.estimator:<10} nmse={pt.nmse:.4e} "
              f"({pt.nmse_db:6.2f} dB)  failures={pt.failures}/{pt.trials}")
    print(f"wrote {csv_path} and {gp_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
