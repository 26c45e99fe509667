"""Batch harness: run problems through the full pipeline, score the
Completion and Choice metrics, and emit deterministic reports.

Completion counts an emitted answer matching the gold answer within
max(1e-2, 1%).  Choice picks the closest matching option under the same
tolerance, falling back to a seeded-uniform pick over the four candidates;
a correct completed answer therefore always selects its option, so
Choice >= Completion on every batch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .clients import ModelClient, ModelClientConfig, make_rectifier_client
from .diagram import DiagramParse, load_diagram
from .disambig import rectify
from .engine import Schedule, predict_schedule, solve
from .rng import derive_stream
from .rules import TheoremRule, default_library
from .terms import Unknown, print_term, walk
from .textparse import ParsedProblem, parse_text


def unknown_in_target(problem: ParsedProblem) -> bool:
    return any(isinstance(node, Unknown) for _, node in walk(problem.target))

__all__ = [
    "ManifestError",
    "ProblemRecord",
    "RunConfig",
    "ProblemResult",
    "Report",
    "load_manifest",
    "run_problem",
    "run_batch",
    "run_ablation",
    "write_report",
]

MATCH_TOL_ABS = 1e-2
MATCH_TOL_REL = 1e-2


class ManifestError(ValueError):
    pass


def match_tolerance(reference: float) -> float:
    return max(MATCH_TOL_ABS, MATCH_TOL_REL * abs(reference))


def numbers_match(value: float, reference: float) -> bool:
    return abs(value - reference) <= match_tolerance(reference)


@dataclass(frozen=True)
class ProblemRecord:
    id: str
    prose: str
    diagram: str  # path, relative to the manifest
    answer: float
    options: tuple[float, ...] | None = None
    question_type: str = ""
    shape: str = ""

    def validate(self) -> None:
        if self.options is not None:
            if len(self.options) != 4:
                raise ManifestError(f"{self.id}: options must have length 4")
            if not any(numbers_match(o, self.answer) for o in self.options):
                raise ManifestError(f"{self.id}: no option matches the answer")


@dataclass
class RunConfig:
    rng_seed: int  # mandatory: reproducibility
    rectifier_backend: str = "heuristic"
    predictor_backend: str = "traversal"
    disambiguation_on: bool = True
    verifier_on: bool = True
    predictor_on: bool = True
    max_rounds: int = 3
    budget: int = 20
    rectifier_store: str | None = None
    predictor_store: str | None = None
    prompt_dir: str | None = None
    endpoint: str | None = None
    model_name: str = ""
    api_key_env: str = "GEOSOLVE_API_KEY"
    out_dir: str | None = None

    def describe(self) -> dict:
        return {
            "rng_seed": self.rng_seed,
            "rectifier_backend": self.rectifier_backend if self.disambiguation_on else "off",
            "predictor_backend": self.predictor_backend if self.predictor_on else "traversal",
            "disambiguation_on": self.disambiguation_on,
            "verifier_on": self.verifier_on,
            "predictor_on": self.predictor_on,
            "max_rounds": self.max_rounds,
            "budget": self.budget,
            "match_tolerance": "max(1e-2, 1e-2 * |gold|)",
            "choice_fallback_rng": "xoshiro256** seeded from (seed, problem id)",
        }


@dataclass
class ProblemResult:
    id: str
    answer: float | None
    completion_hit: bool
    choice_index: int | None
    choice_hit: bool | None
    choice_fallback: bool
    steps_used: int
    question_type: str
    shape: str
    errors: list[str] = field(default_factory=list)
    traces: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "id": self.id,
            "answer": self.answer,
            "completion_hit": self.completion_hit,
            "choice_index": self.choice_index,
            "choice_hit": self.choice_hit,
            "choice_fallback": self.choice_fallback,
            "steps_used": self.steps_used,
            "question_type": self.question_type,
            "shape": self.shape,
            "errors": list(self.errors),
        }


def load_manifest(path: str | Path) -> list[ProblemRecord]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise ManifestError("manifest must be a JSON array of problem records")
    records = []
    for entry in raw:
        try:
            record = ProblemRecord(
                id=str(entry["id"]),
                prose=entry["prose"],
                diagram=entry["diagram"],
                answer=float(entry["answer"]),
                options=tuple(float(o) for o in entry["options"])
                if entry.get("options") is not None
                else None,
                question_type=entry.get("question_type", ""),
                shape=entry.get("shape", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"bad manifest entry {entry!r}: {exc}") from exc
        record.validate()
        records.append(record)
    if len({r.id for r in records}) != len(records):
        raise ManifestError("duplicate problem ids in manifest")
    return records


# ---------------------------------------------------------------------------
# Single problem


def _choice(
    record: ProblemRecord, answer: float | None, seed: int
) -> tuple[int | None, bool | None, bool]:
    """(choice index, hit, used fallback).  Deterministic per problem id."""
    if record.options is None:
        return None, None, False
    if answer is not None and not math.isnan(answer):
        matching = [
            (abs(answer - option), i)
            for i, option in enumerate(record.options)
            if numbers_match(answer, option) or numbers_match(option, answer)
        ]
        if matching:
            _, index = min(matching)
            return index, numbers_match(record.options[index], record.answer), False
    index = derive_stream(seed, record.id).below(4)
    return index, numbers_match(record.options[index], record.answer), True


def run_problem(
    record: ProblemRecord,
    cfg: RunConfig,
    manifest_dir: Path,
    library: list[TheoremRule] | None = None,
) -> ProblemResult:
    """Run one problem through parse -> disambiguate -> schedule -> solve.
    Stage failures are captured in the result, never raised."""
    if library is None:
        library = default_library()
    errors: list[str] = []
    traces: dict = {}
    answer: float | None = None
    steps_used = 0

    problem: ParsedProblem | None = None
    diagram: DiagramParse | None = None
    try:
        diagram = load_diagram(manifest_dir / record.diagram)
    except Exception as exc:  # noqa: BLE001 - batch must survive anything
        errors.append(f"diagram: {exc}")
    try:
        problem = parse_text(record.prose)
        traces["propositions"] = [print_term(p) for p in problem.propositions]
        traces["target"] = print_term(problem.target)
        traces["unmatched_spans"] = list(problem.unmatched_spans)
    except Exception as exc:  # noqa: BLE001
        errors.append(f"parse: {exc}")

    if problem is not None and diagram is not None:
        if cfg.disambiguation_on:
            try:
                client = make_rectifier_client(
                    cfg.rectifier_backend,
                    diagram,
                    store_path=cfg.rectifier_store,
                    config=_http_config(cfg),
                )
                problem, rect_traces = rectify(
                    problem,
                    diagram,
                    client,
                    max_rounds=cfg.max_rounds,
                    verifier_on=cfg.verifier_on,
                    prompt_dir=cfg.prompt_dir,
                )
                traces["rectification"] = [t.to_jsonable() for t in rect_traces]
                traces["disambiguated"] = [
                    print_term(p) for p in problem.literals()
                ]
            except Exception as exc:  # noqa: BLE001
                errors.append(f"rectify: {exc}")

        schedule: Schedule | None = None
        if cfg.predictor_on and cfg.predictor_backend != "traversal":
            if unknown_in_target(problem):
                schedule = Schedule((), "traversal", ("unresolved $ in target",))
            else:
                try:
                    client = _predictor_client(cfg)
                    schedule = predict_schedule(
                        problem, diagram, library, client, prompt_dir=cfg.prompt_dir
                    )
                except Exception as exc:  # noqa: BLE001
                    errors.append(f"predictor: {exc}")
                    schedule = Schedule((), "traversal", (str(exc),))
        if schedule is not None:
            traces["schedule"] = {
                "order": list(schedule.order),
                "source": schedule.source,
                "warnings": list(schedule.warnings),
            }

        try:
            outcome = solve(problem, diagram, library, schedule=schedule, budget=cfg.budget)
            answer = outcome.answer
            steps_used = outcome.steps_used
            traces["steps"] = outcome.steps
        except Exception as exc:  # noqa: BLE001
            errors.append(f"solve: {exc}")

    completion_hit = answer is not None and numbers_match(answer, record.answer)
    choice_index, choice_hit, fallback = _choice(record, answer, cfg.rng_seed)
    return ProblemResult(
        id=record.id,
        answer=answer,
        completion_hit=completion_hit,
        choice_index=choice_index,
        choice_hit=choice_hit,
        choice_fallback=fallback,
        steps_used=steps_used,
        question_type=record.question_type,
        shape=record.shape,
        errors=errors,
        traces=traces,
    )


def _http_config(cfg: RunConfig) -> ModelClientConfig | None:
    if cfg.rectifier_backend != "http" and cfg.predictor_backend != "http":
        return None
    return ModelClientConfig(
        backend="http",
        endpoint=cfg.endpoint,
        model_name=cfg.model_name,
        api_key_env=cfg.api_key_env,
    )


def _predictor_client(cfg: RunConfig) -> ModelClient:
    from .clients import CannedClient, HttpClient, RecordReplayClient

    if cfg.predictor_backend == "canned":
        if cfg.predictor_store is None:
            raise ValueError("canned predictor needs a store path")
        return CannedClient.from_file(cfg.predictor_store)
    if cfg.predictor_backend == "replay":
        return RecordReplayClient("replay", cfg.predictor_store)
    if cfg.predictor_backend == "http":
        return HttpClient(_http_config(cfg))
    raise ValueError(f"unknown predictor backend {cfg.predictor_backend!r}")


# ---------------------------------------------------------------------------
# Batches and reports


def _percent(hits: int, total: int) -> float | None:
    if total == 0:
        return None  # 0/0: undefined, rendered as n/a
    return 100.0 * hits / total


def _steps_stats(values: list[int]) -> dict:
    if not values:
        return {"min": None, "max": None, "mean": None}
    return {
        "min": min(values),
        "max": max(values),
        "mean": sum(values) / len(values),
    }


@dataclass
class Report:
    config: dict
    rows: list[dict]
    completion: float | None
    choice: float | None
    steps: dict
    by_question_type: dict
    by_shape: dict

    def to_jsonable(self) -> dict:
        return {
            "config": self.config,
            "completion_percent": self.completion,
            "choice_percent": self.choice,
            "steps": self.steps,
            "by_question_type": self.by_question_type,
            "by_shape": self.by_shape,
            "problems": self.rows,
        }


def _aggregate(results: list[ProblemResult], key) -> dict:
    groups: dict[str, list[ProblemResult]] = {}
    for r in results:
        label = key(r) or "unknown"
        groups.setdefault(label, []).append(r)
    out = {}
    for label in sorted(groups):
        members = groups[label]
        choice_members = [m for m in members if m.choice_hit is not None]
        out[label] = {
            "count": len(members),
            "completion_percent": _percent(
                sum(m.completion_hit for m in members), len(members)
            ),
            "choice_percent": _percent(
                sum(bool(m.choice_hit) for m in choice_members), len(choice_members)
            ),
        }
    return out


def run_batch(
    manifest_path: str | Path,
    cfg: RunConfig,
    library: list[TheoremRule] | None = None,
) -> Report:
    manifest_path = Path(manifest_path)
    records = load_manifest(manifest_path)
    if library is None:
        library = default_library()
    results = [
        run_problem(record, cfg, manifest_path.parent, library)
        for record in sorted(records, key=lambda r: r.id)
    ]
    choice_results = [r for r in results if r.choice_hit is not None]
    solved_steps = [r.steps_used for r in results if r.answer is not None]
    return Report(
        config=cfg.describe(),
        rows=[r.row() for r in results],
        completion=_percent(sum(r.completion_hit for r in results), len(results)),
        choice=_percent(
            sum(bool(r.choice_hit) for r in choice_results), len(choice_results)
        ),
        steps=_steps_stats(solved_steps),
        by_question_type=_aggregate(results, lambda r: r.question_type),
        by_shape=_aggregate(results, lambda r: r.shape),
    )


def _fmt_percent(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.1f}"


def _fmt_steps(steps: dict) -> str:
    if steps["mean"] is None:
        return "n/a"
    return f"{steps['min']}-{steps['max']} (mean {steps['mean']:.2f})"


def render_summary(report: Report, title: str = "benchmark") -> str:
    lines = [
        f"== {title} ==",
        "config: "
        + ", ".join(f"{k}={v}" for k, v in sorted(report.config.items())),
        f"problems: {len(report.rows)}",
        f"Completion: {_fmt_percent(report.completion)}%",
        f"Choice:     {_fmt_percent(report.choice)}%",
        f"Steps:      {_fmt_steps(report.steps)}",
        "",
        "by question type:",
    ]
    for label, stats in report.by_question_type.items():
        lines.append(
            f"  {label:<10} n={stats['count']:<3} completion={_fmt_percent(stats['completion_percent'])}%"
            f" choice={_fmt_percent(stats['choice_percent'])}%"
        )
    lines.append("by shape:")
    for label, stats in report.by_shape.items():
        lines.append(
            f"  {label:<10} n={stats['count']:<3} completion={_fmt_percent(stats['completion_percent'])}%"
            f" choice={_fmt_percent(stats['choice_percent'])}%"
        )
    lines.append("")
    lines.append(f"{'id':<22}{'answer':>14}{'completion':>12}{'choice':>8}{'steps':>7}")
    for row in report.rows:
        answer = "-" if row["answer"] is None else f"{row['answer']:.3f}"
        choice = "-" if row["choice_index"] is None else str(row["choice_index"])
        lines.append(
            f"{row['id']:<22}{answer:>14}{str(row['completion_hit']):>12}"
            f"{choice:>8}{row['steps_used']:>7}"
        )
    return "\n".join(lines) + "\n"


def write_report(report: Report, out_dir: str | Path, title: str = "benchmark") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(report.to_jsonable(), indent=2, sort_keys=True) + "\n"
    )
    (out / "summary.txt").write_text(render_summary(report, title))
    return report_path


# ---------------------------------------------------------------------------
# Ablation grid


def run_ablation(
    manifest_path: str | Path,
    cfg: RunConfig,
    library: list[TheoremRule] | None = None,
) -> dict:
    """The 2x2 disambiguation/predictor grid plus the rectifier/verifier
    rows, as one combined report."""
    from dataclasses import replace

    grid = []
    for disam in (False, True):
        for predictor in (False, True):
            sub = replace(cfg, disambiguation_on=disam, predictor_on=predictor)
            report = run_batch(manifest_path, sub, library)
            grid.append(
                {
                    "disambiguation": disam,
                    "predictor": predictor,
                    "completion_percent": report.completion,
                    "choice_percent": report.choice,
                    "steps": report.steps,
                }
            )
    rows = []
    for label, disam, verifier in (
        ("baseline (no disambiguation)", False, False),
        ("rectifier only", True, False),
        ("rectifier + verifier", True, True),
    ):
        sub = replace(cfg, disambiguation_on=disam, verifier_on=verifier)
        report = run_batch(manifest_path, sub, library)
        rows.append(
            {
                "setting": label,
                "completion_percent": report.completion,
                "choice_percent": report.choice,
            }
        )
    return {"grid": grid, "rectifier_verifier": rows, "config": cfg.describe()}
