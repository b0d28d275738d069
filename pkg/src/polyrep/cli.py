"""Command line entry point: ``polyrep run | list-builtins | validate``."""

from __future__ import annotations

import argparse
import sys

from .errors import ParseError, ValidationError
from .scenario import BUILTINS, load_scenario, run_scenario


def _load(source: str):
    try:
        return load_scenario(source)
    except (ParseError, ValidationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return None


def cmd_run(args) -> int:
    cfg = _load(args.scenario)
    if cfg is None:
        return 2
    result = run_scenario(cfg, out_dir=args.out_dir, seed=args.seed)
    results = result.report["results"]
    for name, ok in results["verdicts"].items():
        print(f"{name:18s} {'pass' if ok else 'FAIL'}")
    for err in results["errors"]:
        print(f"error: {err}", file=sys.stderr)
    print(f"report: {result.report_path}")
    if result.trajectory_path is not None:
        print(f"trajectory: {result.trajectory_path}")
    return result.status


def cmd_list(args) -> int:
    for name in BUILTINS:
        print(name)
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args.scenario)
    if cfg is None:
        return 2
    print(f"ok: {cfg.name} ({', '.join(cfg.analyses)})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyrep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file or builtin:<name>")
    run.add_argument("scenario")
    run.add_argument("--out-dir", default=".")
    run.add_argument("--seed", type=int, default=None, help="override the neighborhood sampling seed")
    run.set_defaults(func=cmd_run)

    lst = sub.add_parser("list-builtins", help="list embedded scenarios")
    lst.set_defaults(func=cmd_list)

    val = sub.add_parser("validate", help="parse and validate a scenario without running it")
    val.add_argument("scenario")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
