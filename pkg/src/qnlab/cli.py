"""Command-line entry point.

    qnlab <kind> --config FILE [--set KEY=VALUE]... [--jobs N] [--out DIR]

Exit codes: 0 success, 1 a solver failed (error records written), 2 the
configuration was missing or invalid (record on stderr).
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import KINDS, apply_overrides, build_config, load_config
from .errors import ConfigError
from .experiments import run_experiment

_KIND_HELP = {
    "pb_solve": "solve the nonlinear elliptic potential equation once",
    "schrodinger_run": "evolve one well-prepared wave function",
    "euler_run": "evolve the limiting isothermal flow",
    "quasineutral_sweep": "compare wave and limit dynamics across (eps, hbar)",
    "nbody_stats": "Monte-Carlo statistics of the N-particle energy",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnlab",
        description="numerical laboratory for the quasi-neutral limit",
    )
    sub = parser.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        p = sub.add_parser(kind, help=_KIND_HELP[kind])
        p.add_argument("--config", required=True, metavar="FILE",
                       help="key = value experiment file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config entry")
        p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="worker processes for sweep points")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="output directory (overrides output_dir)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = load_config(args.config)
        raw = apply_overrides(raw, args.overrides)
        cfg = build_config(raw, args.kind, out_override=args.out, jobs=args.jobs)
    except ConfigError as exc:
        record = {"type": type(exc).__name__, "message": str(exc)}
        if exc.path is not None:
            record["path"] = exc.path
        print(json.dumps(record), file=sys.stderr)
        return 2
    outcome = run_experiment(cfg)
    for record in outcome.errors:
        print(json.dumps(record), file=sys.stderr)
    print(outcome.out_dir)
    return outcome.status


if __name__ == "__main__":
    raise SystemExit(main())
