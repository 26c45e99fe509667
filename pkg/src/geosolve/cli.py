"""Command-line front end.

Subcommands: ``parse`` (prose -> propositions and target), ``verify``
(literal against a diagram's three heuristics), ``solve`` (one problem with
a full trace), ``bench`` (batch metrics), ``ablate`` (the component grid).

Exit codes: 0 success, 1 any problem errored, 2 bad usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .diagram import load_diagram
from .disambig import verify_candidate
from .harness import (
    ManifestError,
    ProblemRecord,
    RunConfig,
    render_summary,
    run_ablation,
    run_batch,
    run_problem,
    write_report,
)
from .terms import parse_term, print_term
from .textparse import TextParseError, parse_text


def _add_backend_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--backend-rectifier",
        choices=["http", "canned", "heuristic", "replay"],
        default="heuristic",
    )
    sub.add_argument(
        "--backend-predictor",
        choices=["http", "canned", "traversal", "replay"],
        default="traversal",
    )
    sub.add_argument("--seed", type=int, default=1, help="RNG seed (default 1)")
    sub.add_argument("--no-verifier", action="store_true")
    sub.add_argument("--no-disambiguation", action="store_true")
    sub.add_argument("--endpoint", default=None, help="chat-completions URL")
    sub.add_argument("--model", default="", help="model name for the http backend")
    sub.add_argument("--api-key-env", default="GEOSOLVE_API_KEY")
    sub.add_argument("--rectifier-store", default=None, help="canned/replay store path")
    sub.add_argument("--predictor-store", default=None, help="canned/replay store path")
    sub.add_argument("--prompt-dir", default=None, help="override prompt templates")
    sub.add_argument("--max-rounds", type=int, default=3)
    sub.add_argument("--budget", type=int, default=20)
    sub.add_argument("--out", default="out", help="report output directory")


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        rng_seed=args.seed,
        rectifier_backend=args.backend_rectifier,
        predictor_backend=args.backend_predictor,
        disambiguation_on=not args.no_disambiguation,
        verifier_on=not args.no_verifier,
        predictor_on=args.backend_predictor != "traversal",
        max_rounds=args.max_rounds,
        budget=args.budget,
        rectifier_store=args.rectifier_store,
        predictor_store=args.predictor_store,
        prompt_dir=args.prompt_dir,
        endpoint=args.endpoint,
        model_name=args.model,
        api_key_env=args.api_key_env,
        out_dir=args.out,
    )


def cmd_parse(args: argparse.Namespace) -> int:
    try:
        problem = parse_text(args.prose)
    except TextParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for literal in problem.propositions:
        print(print_term(literal))
    print(print_term(problem.target))
    for span in problem.unmatched_spans:
        print(f"warning: unmatched {span!r}", file=sys.stderr)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        literal = parse_term(args.literal)
        diagram = load_diagram(args.diagram)
    except Exception as exc:  # noqa: BLE001 - bad literal or diagram file
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = verify_candidate(literal, diagram)
    print(f"verdict: {report.verdict}")
    if report.repaired_literal is not None:
        print(f"repaired: {print_term(report.repaired_literal)}")
    for violation in report.violations:
        print(f"violation[{violation.heuristic}]: {violation.message}")
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    path = Path(args.problem)
    try:
        entry = json.loads(path.read_text())
        record = ProblemRecord(
            id=str(entry.get("id", path.stem)),
            prose=entry["prose"],
            diagram=entry["diagram"],
            answer=float(entry.get("answer", "nan")),
            options=tuple(float(o) for o in entry["options"])
            if entry.get("options")
            else None,
            question_type=entry.get("question_type", ""),
            shape=entry.get("shape", ""),
        )
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: bad problem file: {exc}", file=sys.stderr)
        return 1
    result = run_problem(record, _config(args), path.parent)
    print(json.dumps(result.row() | {"traces": result.traces}, indent=2, sort_keys=True))
    return 1 if result.errors else 0


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        report = run_batch(args.manifest, _config(args))
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_report(report, args.out)
    print(render_summary(report), end="")
    errored = any(row["errors"] for row in report.rows)
    return 1 if errored else 0


def cmd_ablate(args: argparse.Namespace) -> int:
    try:
        combined = run_ablation(args.manifest, _config(args))
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.json").write_text(
        json.dumps(combined, indent=2, sort_keys=True) + "\n"
    )
    print(f"{'disambiguation':>15} {'predictor':>10} {'completion':>11} {'choice':>8} {'steps':>18}")
    for row in combined["grid"]:
        steps = row["steps"]
        steps_text = (
            "n/a"
            if steps["mean"] is None
            else f"{steps['min']}-{steps['max']} (mean {steps['mean']:.2f})"
        )
        comp = "n/a" if row["completion_percent"] is None else f"{row['completion_percent']:.1f}"
        choice = "n/a" if row["choice_percent"] is None else f"{row['choice_percent']:.1f}"
        print(
            f"{str(row['disambiguation']):>15} {str(row['predictor']):>10} "
            f"{comp:>11} {choice:>8} {steps_text:>18}"
        )
    print()
    for row in combined["rectifier_verifier"]:
        comp = "n/a" if row["completion_percent"] is None else f"{row['completion_percent']:.1f}"
        print(f"{row['setting']:<32} completion={comp}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geosolve",
        description="Neuro-symbolic plane-geometry problem solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse prose into formal propositions")
    p.add_argument("prose")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("verify", help="run the three verifier heuristics")
    p.add_argument("literal")
    p.add_argument("diagram")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve", help="solve one problem file with full trace")
    p.add_argument("problem")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a manifest and write reports")
    p.add_argument("manifest")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ablate", help="run the component ablation grid")
    p.add_argument("manifest")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
