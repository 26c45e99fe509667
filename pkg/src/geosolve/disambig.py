"""Textual-ambiguity resolution: detect `$` placeholders, prompt a model to
fill them from the diagram, and verify/repair the answers against diagram
heuristics in a bounded feedback loop.

The verifier runs three checks, in order:

* entity existence  — every named point/circle/line exists in the diagram;
* shape closure     — polygon vertices induce a single simple cycle, with
                      wrong orderings repaired by walking the cycle;
* vertex geometry   — coordinates actually trace the claimed shape kind.

Violations are fed back into the next prompt round; after ``max_rounds``
failures the literal keeps its `$` and is marked residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .clients import ClientError, ModelClient, ModelRequest
from .diagram import (
    DiagramGraph,
    DiagramParse,
    build_graph,
    effective_edge,
    shape_matches_geometry,
)
from .terms import (
    POLYGON_PREDICATES,
    PREDICATE_TABLE,
    LanguageError,
    PointRef,
    Predicate,
    Term,
    Unknown,
    parse_term,
    point_names,
    print_term,
    replace_at,
    subterm_at,
    unknown_paths,
    walk,
)
from .textparse import ParsedProblem

__all__ = [
    "UNSPECIFIED_POINTS",
    "UNSPECIFIED_SHAPES",
    "UNSPECIFIED_AREAS",
    "Ambiguity",
    "Violation",
    "VerificationReport",
    "PromptBundle",
    "RectificationRound",
    "RectificationTrace",
    "detect_ambiguities",
    "craft_prompt",
    "verify_entities",
    "verify_shape_closure",
    "verify_vertex_geometry",
    "rectify",
]

UNSPECIFIED_POINTS = "UnspecifiedPoints"
UNSPECIFIED_SHAPES = "UnspecifiedShapes"
UNSPECIFIED_AREAS = "UnspecifiedAreas"

ENTITY_EXISTENCE = "EntityExistence"
SHAPE_CLOSURE = "ShapeClosure"
VERTEX_GEOMETRY = "VertexGeometry"
REPLY = "Reply"  # unparseable or malformed model reply

SYSTEM_RECTIFIER = (
    "You resolve placeholders in a geometry formal language. Reply with "
    "exactly one formal-language term and nothing else: no prose, no "
    "markdown. Use only the listed diagram points."
)
SYSTEM_RECTIFIER_AREAS = (
    "You resolve placeholders in a geometry formal language. Reply with one "
    "arithmetic composition of AreaOf terms joined by + and - and nothing "
    "else, for example: AreaOf(Square(A,B,C,D)) - AreaOf(Circle(O)). Use "
    "only the listed diagram points."
)

_TEMPLATE_FILES = {
    UNSPECIFIED_POINTS: "unspecified_points.txt",
    UNSPECIFIED_SHAPES: "unspecified_shapes.txt",
    UNSPECIFIED_AREAS: "unspecified_areas.txt",
}


@dataclass(frozen=True)
class Ambiguity:
    kind: str
    literal_index: int  # position in propositions + [target]
    path: tuple[int, ...]  # tree path to the Unknown leaf


@dataclass(frozen=True)
class Violation:
    heuristic: str
    message: str

    def to_jsonable(self) -> dict:
        return {"heuristic": self.heuristic, "message": self.message}


@dataclass
class VerificationReport:
    verdict: str  # accepted | repaired | rejected
    repaired_literal: Term | None = None
    violations: list[Violation] = field(default_factory=list)

    def to_jsonable(self) -> dict:
        return {
            "verdict": self.verdict,
            "repaired_literal": (
                print_term(self.repaired_literal) if self.repaired_literal else None
            ),
            "violations": [v.to_jsonable() for v in self.violations],
        }


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    image: str | None = None


@dataclass
class RectificationRound:
    prompt: PromptBundle
    model_reply: str
    parsed_candidate: Term | None
    report: VerificationReport

    def to_jsonable(self) -> dict:
        return {
            "prompt": {"system": self.prompt.system, "user": self.prompt.user},
            "model_reply": self.model_reply,
            "parsed_candidate": (
                print_term(self.parsed_candidate) if self.parsed_candidate else None
            ),
            "report": self.report.to_jsonable(),
        }


@dataclass
class RectificationTrace:
    ambiguity: Ambiguity
    rounds: list[RectificationRound] = field(default_factory=list)
    final: Term | None = None  # None marks ResidualAmbiguity

    @property
    def residual(self) -> bool:
        return self.final is None

    def to_jsonable(self) -> dict:
        return {
            "ambiguity": {
                "kind": self.ambiguity.kind,
                "literal_index": self.ambiguity.literal_index,
                "path": list(self.ambiguity.path),
            },
            "rounds": [r.to_jsonable() for r in self.rounds],
            "final": print_term(self.final) if self.final is not None else None,
            "residual": self.residual,
        }


# ---------------------------------------------------------------------------
# Detection


def _classify(literal: Term, path: tuple[int, ...]) -> str:
    chain = []
    node = literal
    for i in path:
        chain.append(node)
        node = node.args[i]  # type: ignore[union-attr]
    names = [n.name for n in chain if isinstance(n, Predicate)]
    if "Shaded" in names:
        return UNSPECIFIED_AREAS
    parent = chain[-1] if chain else None
    if isinstance(parent, Predicate):
        if parent.name == "Shape":
            return UNSPECIFIED_SHAPES
        if PREDICATE_TABLE[parent.name].category == "entity":
            return UNSPECIFIED_POINTS
    return UNSPECIFIED_SHAPES


def detect_ambiguities(problem: ParsedProblem) -> list[Ambiguity]:
    """One Ambiguity per `$` leaf, left-to-right within each literal."""
    out: list[Ambiguity] = []
    for idx, literal in enumerate(problem.literals()):
        for path in unknown_paths(literal):
            out.append(Ambiguity(_classify(literal, path), idx, path))
    return out


# ---------------------------------------------------------------------------
# Prompts


def _load_template(kind: str, prompt_dir: str | Path | None) -> str:
    name = _TEMPLATE_FILES[kind]
    if prompt_dir is not None:
        return (Path(prompt_dir) / name).read_text()
    return resources.files("geosolve.data.prompts").joinpath(name).read_text()


def _point_inventory(d: DiagramParse) -> str:
    points = ", ".join(d.point_names()) or "(none)"
    if d.circles:
        circles = "; ".join(
            f"Circle({c.center}) radius {c.radius:g}" for c in d.circles
        )
        return f"{points}\nDiagram circles: {circles}"
    return points


def craft_prompt(
    a: Ambiguity,
    problem: ParsedProblem,
    d: DiagramParse,
    feedback: str = "",
    prompt_dir: str | Path | None = None,
) -> PromptBundle:
    """Kind-specific prompt carrying the offending literal, the diagram's
    point inventory, the original prose, and any verifier feedback."""
    literal = problem.literals()[a.literal_index]
    template = _load_template(a.kind, prompt_dir)
    user = template.format(
        literal=print_term(literal),
        points=_point_inventory(d),
        prose=problem.prose,
        feedback=(feedback + "\n") if feedback else "",
    )
    system = SYSTEM_RECTIFIER_AREAS if a.kind == UNSPECIFIED_AREAS else SYSTEM_RECTIFIER
    return PromptBundle(system=system, user=user, image=d.image_path)


# ---------------------------------------------------------------------------
# Verifier heuristics


def _polygon_subterms(t: Term) -> list[tuple[tuple[int, ...], Predicate]]:
    """Polygon nodes whose arguments are all named points."""
    out = []
    for path, node in walk(t):
        if not isinstance(node, Predicate):
            continue
        if node.name in POLYGON_PREDICATES or (
            node.name == "Shape" and len(node.args) >= 3
        ):
            if node.args and all(isinstance(arg, PointRef) for arg in node.args):
                out.append((path, node))
    return out


def verify_entities(candidate: Term, d: DiagramParse) -> list[Violation]:
    """Every point, circle, and line in the candidate must exist in the
    diagram (lines directly or through one collinear chain)."""
    known = set(d.point_names())
    violations: list[Violation] = []
    seen_points: set[str] = set()
    for name in point_names(candidate):
        if name not in known and name not in seen_points:
            violations.append(Violation(ENTITY_EXISTENCE, f"unknown point {name}"))
            seen_points.add(name)
    g = build_graph(d)
    groups = [set(grp) for grp in d.collinear_groups]
    for _, node in walk(candidate):
        if not isinstance(node, Predicate):
            continue
        if node.name == "Circle" and isinstance(node.args[0], PointRef):
            center = node.args[0].name
            if center in known and d.circle_by_center(center) is None:
                violations.append(
                    Violation(ENTITY_EXISTENCE, f"no circle centered at {center}")
                )
        elif node.name == "Line" and all(isinstance(x, PointRef) for x in node.args):
            a, b = (x.name for x in node.args)
            if a not in known or b not in known:
                continue
            chained = any(a in grp and b in grp for grp in groups)
            if not (g.has_edge(a, b) or chained):
                violations.append(
                    Violation(ENTITY_EXISTENCE, f"no line through {a} and {b}")
                )
    return violations


def _cyclic_walk(vertices: tuple[str, ...], adj: dict[str, set[str]]) -> list[str] | None:
    """The single simple cycle through all vertices, started at the
    candidate's first vertex toward its earlier-listed neighbor."""
    if any(len(adj[v]) != 2 for v in vertices):
        return None
    rank = {v: i for i, v in enumerate(vertices)}
    start = vertices[0]
    first = min(adj[start], key=lambda w: rank[w])
    order = [start, first]
    while len(order) < len(vertices):
        prev, cur = order[-2], order[-1]
        (nxt,) = adj[cur] - {prev}
        if nxt in order:
            return None
        order.append(nxt)
    if start not in adj[order[-1]]:
        return None
    return order


def _closure_check(
    vertices: tuple[str, ...], g: DiagramGraph
) -> tuple[str, tuple[str, ...] | None, list[Violation]]:
    if len(set(vertices)) != len(vertices):
        return "rejected", None, [Violation(SHAPE_CLOSURE, "repeated vertex")]
    vs = set(vertices)
    adj: dict[str, set[str]] = {v: set() for v in vertices}
    for i, u in enumerate(vertices):
        for v in vertices[i + 1 :]:
            if effective_edge(g, u, v, vs):
                adj[u].add(v)
                adj[v].add(u)
    walk_order = _cyclic_walk(vertices, adj)
    if walk_order is None:
        bad = [v for v in vertices if len(adj[v]) != 2]
        detail = (
            "vertices " + ", ".join(f"{v} (degree {len(adj[v])})" for v in bad)
            if bad
            else "induced edges do not form one cycle"
        )
        return (
            "rejected",
            None,
            [Violation(SHAPE_CLOSURE, f"vertex set does not close a cycle: {detail}")],
        )
    if tuple(walk_order) == vertices:
        return "accepted", None, []
    return "repaired", tuple(walk_order), []


def verify_shape_closure(candidate: Term, g: DiagramGraph) -> VerificationReport:
    """Check every polygon subterm closes into one simple cycle; reorder the
    vertices along the diagram cycle when only the order is wrong."""
    repaired = candidate
    any_repair = False
    for path, node in _polygon_subterms(candidate):
        vertices = tuple(arg.name for arg in node.args)  # type: ignore[union-attr]
        verdict, order, violations = _closure_check(vertices, g)
        if verdict == "rejected":
            return VerificationReport("rejected", None, violations)
        if verdict == "repaired":
            any_repair = True
            fixed = Predicate(node.name, tuple(PointRef(n) for n in order))  # type: ignore[arg-type]
            repaired = replace_at(repaired, path, fixed)
    if any_repair:
        return VerificationReport("repaired", repaired, [])
    return VerificationReport("accepted", None, [])


def verify_vertex_geometry(candidate: Term, g: DiagramGraph) -> list[Violation]:
    """Analytical-geometry check of every shape subterm's coordinates."""
    violations: list[Violation] = []
    for _, node in _polygon_subterms(candidate):
        vertices = tuple(arg.name for arg in node.args)  # type: ignore[union-attr]
        kind = node.name
        for message in shape_matches_geometry(kind, vertices, g):
            violations.append(
                Violation(VERTEX_GEOMETRY, f"{kind}({','.join(vertices)}): {message}")
            )
    return violations


def verify_candidate(
    candidate: Term, d: DiagramParse, g: DiagramGraph | None = None
) -> VerificationReport:
    """All three heuristics in sequence; repair applies and is re-checked."""
    if g is None:
        g = build_graph(d)
    entity_violations = verify_entities(candidate, d)
    if entity_violations:
        return VerificationReport("rejected", None, entity_violations)
    closure = verify_shape_closure(candidate, g)
    if closure.verdict == "rejected":
        return closure
    final = closure.repaired_literal if closure.verdict == "repaired" else candidate
    geometry_violations = verify_vertex_geometry(final, g)
    if geometry_violations:
        return VerificationReport("rejected", None, geometry_violations)
    if closure.verdict == "repaired":
        return VerificationReport("repaired", final, [])
    return VerificationReport("accepted", None, [])


# ---------------------------------------------------------------------------
# Reply handling


def _split_top_level(text: str) -> list[tuple[str, str]]:
    """Split an area composition into (sign, chunk) at depth-0 + and -."""
    parts: list[tuple[str, str]] = []
    depth = 0
    sign = "+"
    buf: list[str] = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and ch in "+-":
            parts.append((sign, "".join(buf)))
            sign = ch
            buf = []
        else:
            buf.append(ch)
    parts.append((sign, "".join(buf)))
    return [(s, chunk.strip()) for s, chunk in parts if chunk.strip()]


def _parse_area_composition(reply: str) -> Term:
    parts = _split_top_level(reply)
    if not parts:
        raise LanguageError("empty composition")
    terms: list[tuple[str, Term]] = []
    for sign, chunk in parts:
        term = parse_term(chunk)
        if not (isinstance(term, Predicate) and term.name == "AreaOf"):
            raise LanguageError(f"composition operand {chunk!r} is not an AreaOf term")
        terms.append((sign, term))
    if terms[0][0] == "-":
        raise LanguageError("composition cannot start with a negated term")
    result = terms[0][1]
    for sign, term in terms[1:]:
        result = Predicate("Add" if sign == "+" else "Sub", (result, term))
    return result


def _clean_reply(reply: str) -> str:
    text = reply.strip().strip("`")
    if text.endswith("."):
        text = text[:-1]
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    return lines[0] if lines else ""


def _substitute_candidate(
    literal: Term, a: Ambiguity, reply_term: Term
) -> tuple[Term | None, Violation | None]:
    """Place the parsed reply into the literal according to the ambiguity
    kind; returns (candidate literal, violation)."""
    parent_path = a.path[:-1]
    parent = subterm_at(literal, parent_path)
    if a.kind == UNSPECIFIED_AREAS:
        # Replace the enclosing AreaOf(...Shaded...) with the composition.
        areaof_path: tuple[int, ...] | None = None
        for k in range(len(a.path), -1, -1):
            node = subterm_at(literal, a.path[:k])
            if isinstance(node, Predicate) and node.name == "AreaOf":
                areaof_path = a.path[:k]
                break
            if isinstance(node, Predicate) and node.name == "Shaded":
                areaof_path = a.path[:k]
        if areaof_path is None:
            return None, Violation(REPLY, "no AreaOf/Shaded context for composition")
        return replace_at(literal, areaof_path, reply_term), None
    if not isinstance(reply_term, Predicate):
        return None, Violation(REPLY, "reply is not a predicate term")
    if any(isinstance(n, Unknown) for _, n in walk(reply_term)):
        return None, Violation(REPLY, "reply still contains $")
    if a.kind == UNSPECIFIED_POINTS:
        if not isinstance(parent, Predicate) or reply_term.name != parent.name:
            expected = parent.name if isinstance(parent, Predicate) else "?"
            return None, Violation(REPLY, f"expected a {expected}(...) term")
        return replace_at(literal, parent_path, reply_term), None
    # UNSPECIFIED_SHAPES: the reply replaces the whole Shape(...) node.
    allowed = POLYGON_PREDICATES | {"Circle", "Shape"}
    if reply_term.name not in allowed:
        return None, Violation(REPLY, "reply is not an entity shape term")
    shape_path = parent_path if (
        isinstance(parent, Predicate) and parent.name == "Shape"
    ) else a.path
    return replace_at(literal, shape_path, reply_term), None


# ---------------------------------------------------------------------------
# The rectification loop


def _format_feedback(reply: str, violations: list[Violation]) -> str:
    messages = "; ".join(v.message for v in violations) or "invalid reply"
    return (
        f"Your previous answer {reply!r} failed: {messages}. "
        "Answer again using only the listed points."
    )


def rectify(
    problem: ParsedProblem,
    d: DiagramParse,
    client: ModelClient,
    max_rounds: int = 3,
    verifier_on: bool = True,
    prompt_dir: str | Path | None = None,
) -> tuple[ParsedProblem, list[RectificationTrace]]:
    """Resolve each ambiguity in sequence (earlier resolutions visible to
    later prompts); exhausted ambiguities keep their `$` and are traced as
    residual."""
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    g = build_graph(d)
    current = problem
    traces: list[RectificationTrace] = []
    residual: set[tuple[int, tuple[int, ...]]] = set()

    while True:
        pending = [
            a
            for a in detect_ambiguities(current)
            if (a.literal_index, a.path) not in residual
        ]
        if not pending:
            break
        a = pending[0]
        trace = RectificationTrace(ambiguity=a)
        traces.append(trace)
        feedback = ""
        literal = current.literals()[a.literal_index]
        for round_no in range(1, max_rounds + 1):
            bundle = craft_prompt(a, current, d, feedback=feedback, prompt_dir=prompt_dir)
            request = ModelRequest(system=bundle.system, user=bundle.user, image=bundle.image)
            try:
                reply = client.complete(request)
            except ClientError as exc:
                raise type(exc)(
                    f"{exc} (rectifier round {round_no}, literal {print_term(literal)})"
                ) from exc
            candidate, report = _evaluate_reply(reply, a, literal, d, g, verifier_on)
            trace.rounds.append(
                RectificationRound(bundle, reply, candidate, report)
            )
            if report.verdict in ("accepted", "repaired"):
                final = report.repaired_literal if report.verdict == "repaired" else candidate
                trace.final = final
                current = _replace_literal(current, a.literal_index, final)
                break
            feedback = _format_feedback(reply, report.violations)
        else:
            residual.add((a.literal_index, a.path))
    return current, traces


def _evaluate_reply(
    reply: str,
    a: Ambiguity,
    literal: Term,
    d: DiagramParse,
    g: DiagramGraph,
    verifier_on: bool,
) -> tuple[Term | None, VerificationReport]:
    text = _clean_reply(reply)
    try:
        if a.kind == UNSPECIFIED_AREAS:
            reply_term = _parse_area_composition(text)
        else:
            reply_term = parse_term(text)
    except LanguageError as exc:
        return None, VerificationReport(
            "rejected", None, [Violation(REPLY, f"unparseable reply: {exc}")]
        )
    candidate, violation = _substitute_candidate(literal, a, reply_term)
    if candidate is None:
        return None, VerificationReport("rejected", None, [violation])
    if not verifier_on:
        return candidate, VerificationReport("accepted", None, [])
    return candidate, verify_candidate(candidate, d, g)


def _replace_literal(problem: ParsedProblem, index: int, literal: Term) -> ParsedProblem:
    props = list(problem.propositions)
    target = problem.target
    if index < len(props):
        props[index] = literal
    else:
        target = literal
    return ParsedProblem(
        propositions=tuple(props),
        target=target,
        unmatched_spans=problem.unmatched_spans,
        prose=problem.prose,
        segments=problem.segments,
    )
