"""Command-line driver: ``run``, ``verify`` and ``explain``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .engine import run_until
from .errors import InvariantViolation, MalformedTrace, ScenarioSyntaxError, ScenarioValidationError
from .scenario import load_scenario
from .steps import OPTIONS
from .trace import read_trace, write_trace
from .verify import dumps_metrics, explain, verify_trace
from .world import World

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVARIANT = 2
EXIT_VERIFY = 3


def _cmd_run(args) -> int:
    try:
        config = load_scenario(args.scenario).with_overrides(option=args.option, seed=args.seed,
                                                             max_ticks=args.max_ticks)
    except ScenarioSyntaxError as exc:
        print(f"{args.scenario}:{exc.line}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioValidationError, OSError) as exc:
        print(f"{args.scenario}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        world = World(config)
        result = run_until(world, None, config.max_ticks)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    write_trace(args.trace_out, result.trace)
    Path(args.metrics_out).write_text(dumps_metrics(world.metrics()), encoding="utf-8")
    print(f"{result.ticks} ticks, {len(result.trace)} trace records, option {config.option}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    try:
        records = read_trace(args.trace)
    except (MalformedTrace, OSError) as exc:
        print(f"{args.trace}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    verdict = verify_trace(records, args.option)
    print(verdict.report())
    return EXIT_OK if verdict.passed else EXIT_VERIFY


def _cmd_explain(args) -> int:
    try:
        records = read_trace(args.trace)
        print(explain(records, args.correlation))
    except (MalformedTrace, OSError) as exc:
        print(f"{args.trace}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyError:
        print(f"no chain {args.correlation!r} in {args.trace}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zsmsim", description="Closed-loop network slice management simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write trace and metrics")
    run.add_argument("--scenario", required=True)
    run.add_argument("--trace-out", required=True)
    run.add_argument("--metrics-out", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--max-ticks", type=int)
    run.add_argument("--option", choices=OPTIONS, help="overrides the scenario's option")
    run.set_defaults(func=_cmd_run)

    verify = sub.add_parser("verify", help="check a trace against an option's step sequence")
    verify.add_argument("--trace", required=True)
    verify.add_argument("--option", required=True, choices=OPTIONS)
    verify.set_defaults(func=_cmd_verify)

    exp = sub.add_parser("explain", help="pretty-print one correlation chain")
    exp.add_argument("--trace", required=True)
    exp.add_argument("--correlation", required=True)
    exp.set_defaults(func=_cmd_explain)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
