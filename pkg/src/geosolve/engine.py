"""The symbolic deduction engine.

A deduction state holds ground relations, a numeric binding table keyed by
canonical measure serializations, and pending equations.  Theorems matched
against the relations append conclusions; propagation then runs to fixpoint,
solving any equation reduced to a single unknown (exact isolation for
linear/power chains, bracketed bisection plus a Newton polish otherwise).

Answers are exact as long as the arithmetic permits (``4 - pi`` stays
symbolic until the final float).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import exact
from .clients import ClientError, ModelClient, ModelRequest
from .diagram import DiagramParse, build_graph, effective_edge, polygon_area
from .exact import Num, Value
from .rules import (
    Instantiation,
    TheoremRule,
    canon,
    canon_key,
    instantiate,
    match_theorem,
)
from .terms import (
    NumberLit,
    PointRef,
    Predicate,
    Term,
    Unknown,
    VarRef,
    print_term,
    walk,
)
from .textparse import ParsedProblem

__all__ = [
    "InconsistentStateError",
    "DeductionState",
    "Schedule",
    "Outcome",
    "seed_state",
    "apply_theorem",
    "propagate",
    "predict_schedule",
    "solve",
]

CONSISTENCY_TOL = 1e-6
ROOT_TOL = 1e-9

_MEASURE_HEADS = {
    "LengthOf",
    "MeasureOf",
    "AreaOf",
    "PerimeterOf",
    "RadiusOf",
    "DiameterOf",
    "RatioOf",
    "ScaleFactorOf",
}
_ARITH_HEADS = {"Add", "Sub", "Mul", "Div", "Pow", "Sqrt"}
_POSITIVE_HEADS = {"LengthOf", "AreaOf", "PerimeterOf", "RadiusOf", "DiameterOf"}


class InconsistentStateError(Exception):
    pass


class UnsolvedError(Exception):
    pass


@dataclass
class DeductionState:
    relations: set[Term] = field(default_factory=set)
    bindings: dict[str, Value] = field(default_factory=dict)
    equations: list[tuple[Term, Term]] = field(default_factory=list)
    steps: list[dict] = field(default_factory=list)
    # Engine internals: coordinates feed orientation guards only (never
    # values); goal is the target measure expression.
    coords: dict[str, tuple[float, float]] = field(default_factory=dict)
    goal: Term | None = None
    _equation_keys: set[tuple[str, str]] = field(default_factory=set)

    def add_relation(self, literal: Term) -> bool:
        c = canon(literal)
        if c in self.relations:
            return False
        self.relations.add(c)
        return True

    def add_equation(self, lhs: Term, rhs: Term) -> bool:
        key = tuple(sorted((canon_key(lhs), canon_key(rhs))))
        if key in self._equation_keys:
            return False
        self._equation_keys.add(key)
        self.equations.append((canon(lhs), canon(rhs)))
        return True

    def set_binding(self, key: str, value: Value) -> bool:
        existing = self.bindings.get(key)
        if existing is not None:
            if not exact.is_close(existing, value, CONSISTENCY_TOL):
                raise InconsistentStateError(
                    f"{key} = {exact.to_float(existing)!r} conflicts with "
                    f"{exact.to_float(value)!r}"
                )
            return False
        self.bindings[key] = value
        return True


@dataclass(frozen=True)
class Schedule:
    order: tuple[str, ...]
    source: str  # predicted | traversal
    warnings: tuple[str, ...] = ()


@dataclass
class Outcome:
    answer: float | None
    steps_used: int
    steps: list[dict]
    state: DeductionState
    schedule: Schedule | None = None


# ---------------------------------------------------------------------------
# Term evaluation


def _is_atom(t: Term) -> bool:
    if isinstance(t, VarRef):
        return True
    return isinstance(t, Predicate) and t.name not in _ARITH_HEADS


def _atom_key(t: Term) -> str:
    return t.name if isinstance(t, VarRef) else canon_key(t)


def atoms_of(t: Term) -> list[Term]:
    if isinstance(t, (VarRef,)):
        return [t]
    if isinstance(t, Predicate):
        if t.name in _ARITH_HEADS:
            out: list[Term] = []
            for a in t.args:
                out.extend(atoms_of(a))
            return out
        return [t]
    return []


def eval_term(t: Term, bindings: dict[str, Value]) -> Value | None:
    """Evaluate an expression over bound atoms; None while any is unknown."""
    if isinstance(t, NumberLit):
        return t.value
    if isinstance(t, Unknown):
        return None
    if _is_atom(t):
        return bindings.get(_atom_key(t))
    assert isinstance(t, Predicate)
    vals = [eval_term(a, bindings) for a in t.args]
    if any(v is None for v in vals):
        return None
    if t.name == "Add":
        acc: Value = vals[0]
        for v in vals[1:]:
            acc = exact.add(acc, v)
        return acc
    if t.name == "Sub":
        return exact.sub(vals[0], vals[1])
    if t.name == "Mul":
        acc = vals[0]
        for v in vals[1:]:
            acc = exact.mul(acc, v)
        return acc
    if t.name == "Div":
        return exact.div(vals[0], vals[1])
    if t.name == "Pow":
        return exact.pow_(vals[0], vals[1])
    if t.name == "Sqrt":
        return exact.sqrt(vals[0])
    raise ValueError(f"cannot evaluate {print_term(t)}")


def _atom_kind(key: str) -> str:
    head = key.split("(", 1)[0]
    if head in _POSITIVE_HEADS:
        return "positive"
    if head == "MeasureOf":
        return "angle"
    return "free"


# ---------------------------------------------------------------------------
# Equation solving


def _contains_atom(t: Term, key: str) -> bool:
    return any(_atom_key(a) == key for a in atoms_of(t))


def _check_value(kind: str, value: Value) -> Value:
    f = exact.to_float(value)
    if kind == "positive" and f < -CONSISTENCY_TOL:
        raise InconsistentStateError(f"negative value {f} for a nonnegative measure")
    return value


def _isolate(
    expr: Term, target: Value, bindings: dict[str, Value], key: str, kind: str
) -> Value | None:
    """Walk down to the single occurrence of `key`, inverting each arithmetic
    node exactly; None when a sibling is unbound."""
    if _is_atom(expr):
        return _check_value(kind, target)
    assert isinstance(expr, Predicate)
    holders = [i for i, a in enumerate(expr.args) if _contains_atom(a, key)]
    if len(holders) != 1:
        return None
    i = holders[0]
    others: list[Value] = []
    for j, a in enumerate(expr.args):
        if j == i:
            continue
        v = eval_term(a, bindings)
        if v is None:
            return None
        others.append(v)
    name = expr.name
    if name == "Add":
        for v in others:
            target = exact.sub(target, v)
    elif name == "Sub":
        target = exact.add(target, others[0]) if i == 0 else exact.sub(others[0], target)
    elif name == "Mul":
        for v in others:
            if abs(exact.to_float(v)) < 1e-300:
                return None
            target = exact.div(target, v)
    elif name == "Div":
        if i == 0:
            target = exact.mul(target, others[0])
        else:
            if abs(exact.to_float(target)) < 1e-300:
                return None
            target = exact.div(others[0], target)
    elif name == "Pow":
        if i != 0:
            return None
        exponent = others[0]
        if not (isinstance(exponent, Num) and exponent.is_rational()):
            return None
        n = exponent.rat
        if n == 2:
            if exact.to_float(target) < -CONSISTENCY_TOL:
                raise InconsistentStateError("even power equals a negative value")
            # Nonnegative root preferred (lengths, areas, angle measures).
            target = exact.sqrt(target if exact.to_float(target) >= 0 else exact.ZERO)
        elif n == 1:
            pass
        elif n.denominator == 1 and n.numerator % 2 == 1:
            f = exact.to_float(target)
            target = math.copysign(abs(f) ** (1.0 / int(n)), f)
        else:
            return None
    elif name == "Sqrt":
        if exact.to_float(target) < -CONSISTENCY_TOL:
            raise InconsistentStateError("sqrt equals a negative value")
        target = exact.mul(target, target)
    else:
        return None
    return _isolate(expr.args[i], target, bindings, key, kind)


def _substituted(t: Term, bindings: dict[str, Value], key: str, x: float) -> float:
    if _is_atom(t):
        if _atom_key(t) == key:
            return x
        v = bindings.get(_atom_key(t))
        if v is None:
            raise ValueError("unbound atom")
        return exact.to_float(v)
    if isinstance(t, NumberLit):
        return exact.to_float(t.value)
    assert isinstance(t, Predicate)
    vals = [_substituted(a, bindings, key, x) for a in t.args]
    name = t.name
    if name == "Add":
        return sum(vals)
    if name == "Sub":
        return vals[0] - vals[1]
    if name == "Mul":
        out = 1.0
        for v in vals:
            out *= v
        return out
    if name == "Div":
        return vals[0] / vals[1]
    if name == "Pow":
        return vals[0] ** vals[1]
    if name == "Sqrt":
        return math.sqrt(vals[0])
    raise ValueError(f"cannot evaluate {print_term(t)}")


def _root_find(
    lhs: Term, rhs: Term, bindings: dict[str, Value], key: str, kind: str
) -> float | None:
    """Single unknown appearing more than once: bracket a sign change and
    bisect to 1e-9, then polish with Newton steps."""

    def f(x: float) -> float:
        return _substituted(lhs, bindings, key, x) - _substituted(rhs, bindings, key, x)

    if kind == "angle":
        grids = [[i * 0.5 for i in range(1, 360)]]
    elif kind == "positive":
        grids = [[10.0**e for e in range(-9, 10)]]
    else:
        grids = [
            [0.0] + [10.0**e for e in range(-9, 7)],
            [-(10.0**e) for e in range(-9, 7)],
        ]
    for grid in grids:
        prev_x: float | None = None
        prev_y: float | None = None
        for x in grid:
            try:
                y = f(x)
            except (ValueError, ZeroDivisionError, OverflowError):
                prev_x, prev_y = None, None
                continue
            if y == 0.0:
                return x
            if prev_y is not None and (prev_y > 0) != (y > 0):
                lo, hi = prev_x, x
                flo = prev_y
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    fmid = f(mid)
                    if fmid == 0.0 or hi - lo < ROOT_TOL * max(1.0, abs(mid)):
                        lo = hi = mid
                        break
                    if (flo > 0) != (fmid > 0):
                        hi = mid
                    else:
                        lo, flo = mid, fmid
                root = 0.5 * (lo + hi)
                for _ in range(5):  # Newton polish
                    h = max(1e-9, abs(root) * 1e-9)
                    try:
                        d = (f(root + h) - f(root - h)) / (2 * h)
                        if d == 0:
                            break
                        root -= f(root) / d
                    except (ValueError, ZeroDivisionError, OverflowError):
                        break
                return root
            prev_x, prev_y = x, y
    return None


def propagate(state: DeductionState) -> DeductionState:
    """Fixpoint: substitute bindings into pending equations, solve any
    equation with one unknown, and consistency-check fully bound ones."""
    while True:
        changed = False
        remaining: list[tuple[Term, Term]] = []
        for lhs, rhs in state.equations:
            unknown_keys: dict[str, int] = {}
            for a in atoms_of(lhs) + atoms_of(rhs):
                k = _atom_key(a)
                if k not in state.bindings:
                    unknown_keys[k] = unknown_keys.get(k, 0) + 1
            if not unknown_keys:
                lv, rv = eval_term(lhs, state.bindings), eval_term(rhs, state.bindings)
                if lv is None or rv is None:
                    remaining.append((lhs, rhs))
                    continue
                if not exact.is_close(lv, rv, CONSISTENCY_TOL):
                    raise InconsistentStateError(
                        f"{print_term(lhs)} = {print_term(rhs)} violated: "
                        f"{exact.to_float(lv)!r} vs {exact.to_float(rv)!r}"
                    )
                changed = True  # resolved and dropped
                continue
            if len(unknown_keys) == 1:
                (key, count), = unknown_keys.items()
                kind = _atom_kind(key)
                value: Value | None = None
                if count == 1:
                    if _contains_atom(lhs, key):
                        known = eval_term(rhs, state.bindings)
                        if known is not None:
                            value = _isolate(lhs, known, state.bindings, key, kind)
                    else:
                        known = eval_term(lhs, state.bindings)
                        if known is not None:
                            value = _isolate(rhs, known, state.bindings, key, kind)
                else:
                    value = _root_find(lhs, rhs, state.bindings, key, kind)
                if value is not None:
                    if state.set_binding(key, value):
                        changed = True
                    continue
            remaining.append((lhs, rhs))
        state.equations = remaining
        if not changed:
            return state


# ---------------------------------------------------------------------------
# Seeding


def _rewrite_ratios(t: Term) -> Term:
    if isinstance(t, Predicate):
        args = tuple(_rewrite_ratios(a) for a in t.args)
        if t.name == "RatioOf":
            return Predicate("Div", args)
        return Predicate(t.name, args)
    return t


def _has_unknown(t: Term) -> bool:
    return any(isinstance(n, Unknown) for _, n in walk(t))


def _has_var(t: Term) -> bool:
    return any(isinstance(n, VarRef) for _, n in walk(t))


def _seed_equals(state: DeductionState, literal: Predicate) -> None:
    lhs, rhs = (_rewrite_ratios(a) for a in literal.args)
    if isinstance(rhs, NumberLit) and _is_atom(lhs):
        state.set_binding(_atom_key(lhs), rhs.value)
        return
    if isinstance(lhs, NumberLit) and _is_atom(rhs):
        state.set_binding(_atom_key(rhs), lhs.value)
        return
    state.add_equation(lhs, rhs)
    # Atomic equalities (AB = AC) double as relations so premises like the
    # isosceles rule's can match them; arithmetic equations do not.
    if (
        _is_atom(lhs)
        and _is_atom(rhs)
        and not _has_var(literal)
        and not _has_unknown(literal)
    ):
        state.add_relation(Predicate("Equals", (lhs, rhs)))


def structural_relations(d: DiagramParse) -> list[Term]:
    """Ground literals implied by the diagram parse: lines per segment and
    collinear pair, circles with their memberships and on-line centers, and
    every non-degenerate triangle the drawn segments close up."""
    out: list[Term] = []

    def line(a: str, b: str) -> Predicate:
        return Predicate("Line", (PointRef(a), PointRef(b)))

    for a, b in d.segments:
        out.append(line(a, b))
    for group in d.collinear_groups:
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                out.append(line(group[i], group[j]))
                for k in range(i + 1, j):
                    out.append(
                        Predicate(
                            "PointLiesOnLine",
                            (PointRef(group[k]), line(group[i], group[j])),
                        )
                    )
    for circle in d.circles:
        circ = Predicate("Circle", (PointRef(circle.center),))
        out.append(circ)
        for member in circle.on_circle:
            out.append(Predicate("PointLiesOnCircle", (PointRef(member), circ)))
    g = build_graph(d)
    coords = g.coordinates
    names = sorted(g.adjacency)
    for i, a in enumerate(names):
        for j in range(i + 1, len(names)):
            b = names[j]
            for c in names[j + 1 :]:
                trio = {a, b, c}
                if not all(
                    effective_edge(g, u, v, trio)
                    for u, v in ((a, b), (b, c), (a, c))
                ):
                    continue
                if a in coords and b in coords and c in coords:
                    area = polygon_area([coords[a], coords[b], coords[c]])
                    side = max(
                        math.dist(coords[u], coords[v])
                        for u, v in ((a, b), (b, c), (a, c))
                    )
                    if area < 1e-4 * side * side:
                        continue
                out.append(
                    Predicate("Triangle", (PointRef(a), PointRef(b), PointRef(c)))
                )
    return out


_PRESUPPOSED_ENTITIES = {
    "Triangle",
    "Quadrilateral",
    "Parallelogram",
    "Rectangle",
    "Square",
    "Rhombus",
    "Trapezoid",
    "Pentagon",
    "Hexagon",
    "Circle",
    "Line",
}


def _presupposed(state: DeductionState, literal: Term) -> None:
    # Naming an entity inside any literal asserts its existence: the target
    # Find(PerimeterOf(Pentagon(A,B,D,E,C))) presupposes that pentagon.
    for _, node in walk(literal):
        if (
            isinstance(node, Predicate)
            and node.name in _PRESUPPOSED_ENTITIES
            and node.args
            and all(isinstance(a, PointRef) for a in node.args)
        ):
            state.add_relation(node)


def seed_state(problem: ParsedProblem, d: DiagramParse) -> DeductionState:
    """P_T plus the diagram's relations, with numeric literals folded into
    bindings; `$`-bearing literals stay inert."""
    state = DeductionState(coords=d.coordinates())
    for literal in structural_relations(d):
        state.add_relation(literal)
    for literal in list(d.relations) + list(problem.literals()):
        if _has_unknown(literal):
            continue
        _presupposed(state, literal)
        if isinstance(literal, Predicate) and literal.name == "Find":
            continue
        if _has_var(literal) and not (
            isinstance(literal, Predicate) and literal.name == "Equals"
        ):
            continue
        if isinstance(literal, Predicate) and literal.name == "Equals":
            _seed_equals(state, literal)
        else:
            state.add_relation(literal)
    goal = _rewrite_ratios(problem.target.args[0])  # type: ignore[union-attr]
    state.goal = None if _has_unknown(goal) else goal
    return state


# ---------------------------------------------------------------------------
# Applying theorems


def apply_theorem(
    rule: TheoremRule, inst: Instantiation, state: DeductionState
) -> bool:
    """Instantiate the rule's conclusions into the state, then propagate
    once.  Returns True (and records a step) when at least one relation or
    binding was added; re-derivations are no-ops."""
    relations_before = len(state.relations)
    bindings_before = len(state.bindings)

    if rule.builtin == "area_difference":
        _apply_area_difference(state)
    else:
        case = rule.cases[inst.case_index]
        binding = inst.as_dict()
        for conclusion in case.conclusions:
            ground = instantiate(conclusion, binding)
            if isinstance(ground, Predicate) and ground.name == "Equals":
                _seed_equals(state, ground)
            else:
                state.add_relation(ground)
    propagate(state)

    changed = (
        len(state.relations) != relations_before
        or len(state.bindings) != bindings_before
    )
    if changed:
        state.steps.append(
            {"theorem": rule.id, "instantiation": inst.as_dict(), "note": inst.note}
        )
    return changed


def _composition_instantiations(rule_id: str, state: DeductionState) -> list[Instantiation]:
    """area_difference fires when the goal is an arithmetic composition whose
    AreaOf operands are all bound but the composition itself is not."""
    goal = state.goal
    if goal is None or not isinstance(goal, Predicate):
        return []
    if goal.name not in ("Add", "Sub"):
        return []
    parts = atoms_of(goal)
    if not parts or not all(
        isinstance(p, Predicate) and p.name == "AreaOf" for p in parts
    ):
        return []
    if canon_key(goal) in state.bindings:
        return []
    if any(_atom_key(p) not in state.bindings for p in parts):
        return []
    return [Instantiation(rule_id, 0, (), note=print_term(goal))]


def _apply_area_difference(state: DeductionState) -> None:
    goal = state.goal
    value = eval_term(goal, state.bindings) if goal is not None else None
    if value is not None:
        state.set_binding(canon_key(goal), value)


def match_in_state(rule: TheoremRule, state: DeductionState) -> list[Instantiation]:
    if rule.builtin == "area_difference":
        return _composition_instantiations(rule.id, state)
    return match_theorem(rule, state.relations, state.coords)


# ---------------------------------------------------------------------------
# Theorem schedule prediction


SYSTEM_PREDICTOR = (
    "You schedule geometry theorems for a symbolic solver. Reply with a "
    "comma-separated list of theorem ids from the library, in application "
    "order, and nothing else."
)


def _predictor_prompt(
    problem: ParsedProblem,
    d: DiagramParse,
    library: list[TheoremRule],
    prompt_dir: str | Path | None,
) -> str:
    if prompt_dir is not None:
        template = (Path(prompt_dir) / "predictor.txt").read_text()
    else:
        template = (
            resources.files("geosolve.data.prompts").joinpath("predictor.txt").read_text()
        )
    theorems = "\n".join(f"- {r.id}: {r.description}" for r in library)
    propositions = "\n".join(print_term(p) for p in problem.propositions) or "(none)"
    relations = "\n".join(print_term(r) for r in d.relations) or "(none)"
    return template.format(
        theorems=theorems,
        propositions=propositions,
        target=print_term(problem.target),
        relations=relations,
    )


def predict_schedule(
    problem: ParsedProblem,
    d: DiagramParse,
    library: list[TheoremRule],
    client: ModelClient,
    prompt_dir: str | Path | None = None,
) -> Schedule:
    """Ask the model for a theorem order; unknown ids are dropped with a
    warning and any failure falls back to traversal (never fatal)."""
    if _has_unknown(problem.target):
        raise ValueError("unresolved $ in target; use traversal instead")
    prompt = _predictor_prompt(problem, d, library, prompt_dir)
    try:
        reply = client.complete(ModelRequest(system=SYSTEM_PREDICTOR, user=prompt))
    except ClientError as exc:
        return Schedule((), "traversal", (f"predictor client error: {exc}",))
    known = {r.id for r in library}
    order: list[str] = []
    warnings: list[str] = []
    for token in reply.replace("\n", ",").replace(";", ",").split(","):
        rule_id = token.strip().strip(".").strip()
        if not rule_id:
            continue
        if rule_id in known:
            order.append(rule_id)
        else:
            warnings.append(f"dropped unknown theorem id {rule_id!r}")
    if not order:
        return Schedule((), "traversal", tuple(warnings))
    return Schedule(tuple(order), "predicted", tuple(warnings))


# ---------------------------------------------------------------------------
# Solving


def _target_value(state: DeductionState) -> Value | None:
    if state.goal is None:
        return None
    direct = state.bindings.get(canon_key(state.goal))
    if direct is not None:
        return direct
    return eval_term(state.goal, state.bindings)


def solve(
    problem: ParsedProblem,
    d: DiagramParse,
    library: list[TheoremRule],
    schedule: Schedule | None = None,
    budget: int = 20,
) -> Outcome:
    """Apply theorems (scheduled order first, then exhaustive traversal
    rounds) until the target is numerically determined, fixpoint, or budget
    exhaustion.  steps_used counts applications that added something."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    state = seed_state(problem, d)
    propagate(state)
    rules = sorted(library, key=lambda r: r.id)
    by_id = {r.id: r for r in rules}

    def finished() -> bool:
        return _target_value(state) is not None

    if not finished() and schedule is not None:
        for rule_id in schedule.order:
            rule = by_id.get(rule_id)
            if rule is None:
                continue
            for inst in match_in_state(rule, state):
                apply_theorem(rule, inst, state)
                if finished():
                    break
            if finished():
                break

    rounds = 0
    while not finished() and rounds < budget:
        rounds += 1
        progress = False
        for rule in rules:
            for inst in match_in_state(rule, state):
                if apply_theorem(rule, inst, state):
                    progress = True
                if finished():
                    break
            if finished():
                break
        if not progress:
            break

    value = _target_value(state)
    answer = exact.to_float(value) if value is not None else None
    return Outcome(
        answer=answer,
        steps_used=len(state.steps),
        steps=list(state.steps),
        state=state,
        schedule=schedule,
    )
