"""Command-line front end.

Four subcommands: `validate` checks a configuration bundle, `replay` runs
an event file through the engine and prints the alert stream, `advise`
ranks data-acquisition methods for a weighting of criteria, and `simulate`
writes a deterministic fixture scenario with ground truth attached.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .acquisition import (
    CRITERIA,
    CRITERION_LABELS,
    METHOD_LABELS,
    METHOD_TABLE,
    advise_method,
)
from .engine import load_bundle, load_config, replay
from .errors import EngineError
from .simulate import SCENARIOS, simulate


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ids",
        description="Replay audit-event streams through policy and attack-stage machines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="load a config bundle and report every check")
    p_validate.add_argument("--config", required=True, help="engine config JSON path")
    p_validate.set_defaults(func=cmd_validate)

    p_replay = sub.add_parser("replay", help="replay an event file and print alerts")
    p_replay.add_argument("--config", required=True, help="engine config JSON path")
    p_replay.add_argument("--events", required=True, help="newline-delimited JSON event file")
    p_replay.add_argument(
        "--verbose", action="store_true", help="also print Secure outputs, not only deviations"
    )
    p_replay.add_argument(
        "--no-halt",
        action="store_true",
        help="keep assessing a subject after its first UnSecure (outputs flagged post_halt)",
    )
    p_replay.add_argument(
        "--lenient", action="store_true", help="skip malformed or unmappable lines instead of failing"
    )
    p_replay.add_argument("--json", action="store_true", help="print the summary as JSON")
    p_replay.add_argument("--report-dir", help="also write alerts.csv and figures to this directory")
    p_replay.set_defaults(func=cmd_replay)

    p_advise = sub.add_parser(
        "advise",
        help="rank acquisition methods for a criteria weighting",
        epilog="criteria: " + ", ".join(CRITERIA) + ". Mixed cells score 0, Up +1, Down -1.",
    )
    p_advise.add_argument(
        "--weight",
        action="append",
        required=True,
        metavar="CRITERION=N",
        help="non-negative weight for one criterion; repeatable",
    )
    p_advise.add_argument("--json", action="store_true", help="print the ranking as JSON")
    p_advise.add_argument("--report-dir", help="also write scores.csv and a figure to this directory")
    p_advise.set_defaults(func=cmd_advise)

    p_simulate = sub.add_parser("simulate", help="write a deterministic fixture scenario")
    p_simulate.add_argument("--scenario", required=True, help=", ".join(SCENARIOS))
    p_simulate.add_argument("--seed", required=True, type=int, help="generator seed")
    p_simulate.add_argument("--out", required=True, help="output directory")
    p_simulate.set_defaults(func=cmd_simulate)
    return parser


def cmd_validate(args) -> int:
    config = load_config(args.config)
    bundle, checks = load_bundle(config)
    for check in checks:
        print(check.line())
    failed = sum(1 for c in checks if not c.ok)
    print(f"{len(checks)} checks, {failed} failed")
    return 0 if bundle is not None else 1


def cmd_replay(args) -> int:
    config = load_config(args.config)
    if args.lenient:
        config.options.lenient = True
    if args.no_halt:
        config.options.no_halt = True
    if args.verbose:
        config.options.verbose = True
    if args.report_dir:
        config.options.report_dir = args.report_dir
    bundle, checks = load_bundle(config)
    if bundle is None:
        for check in checks:
            if not check.ok:
                print(f"error: {check.name}: {check.detail}", file=sys.stderr)
        return 1
    try:
        events_document = Path(args.events).read_text(encoding="utf-8")
    except OSError as exc:
        raise EngineError(f"cannot read events {args.events}: {exc}") from None
    result = replay(bundle, events_document)
    stream = result.records if bundle.options.verbose else result.alerts
    for alert in stream:
        print(alert.to_json_line())
    for line in result.diagnostics:
        print(line, file=sys.stderr)
    if args.json:
        print(json.dumps({"summary": result.summary, "exit_code": result.exit_code}), file=sys.stderr)
    else:
        counts = " ".join(f"{key}={result.summary[key]}" for key in result.summary)
        print(f"replay summary: {counts}", file=sys.stderr)
    if bundle.options.report_dir:
        from .report import write_replay_report

        for path in write_replay_report(result, bundle.options.report_dir):
            print(f"wrote {path}", file=sys.stderr)
    return result.exit_code


def _parse_weights(pairs: list[str]) -> dict[str, float]:
    weights: dict[str, float] = {}
    for pair in pairs:
        criterion, sep, value = pair.partition("=")
        if not sep:
            raise EngineError(f"weight {pair!r} must look like criterion=number")
        if criterion not in CRITERIA:
            raise EngineError(
                f"unknown criterion {criterion!r}; valid: {', '.join(CRITERIA)}"
            )
        if criterion in weights:
            raise EngineError(f"criterion {criterion!r} was weighted twice")
        try:
            weights[criterion] = float(value)
        except ValueError:
            raise EngineError(f"weight for {criterion!r} is not a number: {value!r}") from None
    return weights


def cmd_advise(args) -> int:
    weights = _parse_weights(args.weight)
    rankings = advise_method(METHOD_TABLE, weights)
    weighted = [c for c in CRITERIA if weights.get(c, 0) > 0]
    if args.json:
        payload = [
            {
                "method": method,
                "label": METHOD_LABELS[method],
                "score": score,
                "cells": {
                    c: METHOD_TABLE.cell(c, method).name.capitalize() for c in weighted
                },
            }
            for method, score in rankings
        ]
        print(json.dumps(payload, indent=2))
    else:
        width = max(len(METHOD_LABELS[m]) for m, _ in rankings)
        header = f"{'method':<{width}}  {'score':>7}"
        if weighted:
            header += "  " + "  ".join(weighted)
        print(header)
        for method, score in rankings:
            row = f"{METHOD_LABELS[method]:<{width}}  {score:>7.2f}"
            for criterion in weighted:
                cell = METHOD_TABLE.cell(criterion, method).name.capitalize()
                row += f"  {cell:<{len(criterion)}}"
            print(row)
    if args.report_dir:
        from .report import write_advise_report

        for path in write_advise_report(rankings, METHOD_TABLE, weights, args.report_dir):
            print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    files = simulate(args.scenario, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (out / name).write_text(content, encoding="utf-8")
        print(f"wrote {out / name}", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
