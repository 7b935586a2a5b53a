"""Command-line entry point: ``waterwaves {simulate,verify,converge,selftest}``."""

import argparse
import json
import sys

from . import runs
from .config import parse_config
from .errors import ConfigError, GridMismatch, InsufficientSnapshots, NumericalAbort


def build_parser():
    parser = argparse.ArgumentParser(prog="waterwaves", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate the surface system and stream snapshots")
    sim.add_argument("--config", required=True)

    ver = sub.add_parser("verify", help="reconstruct bulk fields and check the Euler system")
    ver.add_argument("--input", required=True)
    ver.add_argument("--config", required=True)
    ver.add_argument("--report", default=None, help="report path (default: <input>.report.json)")

    conv = sub.add_parser("converge", help="refinement study with fitted log-log slopes")
    conv.add_argument("--config", required=True)
    conv.add_argument("--levels", type=int, required=True)
    conv.add_argument("--vary", choices=("nz", "dt"), default="nz")
    conv.add_argument("--output", default=None, help="write the table here instead of stdout")

    st = sub.add_parser("selftest", help="run the invariant suite on a small grid")
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--inject-cg-tol", type=float, default=None, help=argparse.SUPPRESS)
    return parser


def _dispatch(args):
    if args.command == "selftest":
        rows = runs.run_selftest(seed=args.seed, inject_cg_tol=args.inject_cg_tol)
        print(runs.format_selftest(rows))
        failed = [r[0] for r in rows if not r[3]]
        if failed:
            print(f"FAILED: {', '.join(failed)}")
            return runs.EXIT_CHECK
        print("all checks passed")
        return runs.EXIT_OK

    cfg = parse_config(args.config)
    if args.command == "simulate":
        return runs.run_simulate(cfg)
    if args.command == "verify":
        report, status = runs.run_verify(args.input, cfg, args.report)
        for name, ok in report.checks.items():
            print(f"{name:<20} {'PASS' if ok else 'FAIL'}")
        return status
    table = runs.run_converge(cfg, args.levels, args.vary)
    text = json.dumps(table, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return runs.EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, InsufficientSnapshots, GridMismatch, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return runs.EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {type(exc).__name__}: {exc}", file=sys.stderr)
        return runs.EXIT_ABORT
