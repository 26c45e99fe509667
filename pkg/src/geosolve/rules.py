"""Theorem rules: loading, canonical forms, and premise matching.

Rules live in a JSON library.  Premises and conclusions are formal-language
terms with lowercase variables; a rule may group several premise/conclusion
``cases`` under one id and may declare coordinate-backed orientation
``guards`` (``opposite_sides(p,q,r,s)``, ``same_side``, ``between``,
``not_collinear``) that keep direction-sensitive rules sound under blind
traversal.

Matching is symmetry-aware: Line(A,B)=Line(B,A), unsigned angles, cyclic and
reflected polygon orders, symmetric Equals/Perpendicular/Parallel, and
correspondence-preserving Similar/Congruent.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator

from .diagram import EPS_COLLINEAR_REL, collinear_within
from .terms import (
    POLYGON_PREDICATES,
    PREDICATE_TABLE,
    NumberLit,
    PointRef,
    Predicate,
    Term,
    VarRef,
    parse_term,
    print_term,
)

__all__ = [
    "TheoremRule",
    "RuleCase",
    "Instantiation",
    "load_library",
    "default_library",
    "canon",
    "canon_key",
    "match_theorem",
    "instantiate",
]


# ---------------------------------------------------------------------------
# Canonical forms

_SORT_PAIR = {"Equals", "Perpendicular", "Parallel"}
_CORRESPONDENCE = {"Similar", "Congruent"}
_COMMUTATIVE = {"Add", "Mul"}


def _poly_canon(names: tuple[str, ...]) -> tuple[str, ...]:
    best: tuple[str, ...] | None = None
    for seq in (names, tuple(reversed(names))):
        for r in range(len(seq)):
            rot = seq[r:] + seq[:r]
            if best is None or rot < best:
                best = rot
    return best


def _is_point_tuple(args: tuple[Term, ...]) -> bool:
    return bool(args) and all(isinstance(a, PointRef) for a in args)


def _tandem_canon(p1: Predicate, p2: Predicate) -> tuple[Predicate, Predicate]:
    """Minimize a correspondence pair under simultaneous rotation/reflection
    and operand swap (all of which preserve vertex correspondence)."""
    k = len(p1.args)
    best = None
    for a, b in ((p1, p2), (p2, p1)):
        for reflect in (False, True):
            sa = tuple(reversed(a.args)) if reflect else a.args
            sb = tuple(reversed(b.args)) if reflect else b.args
            for r in range(k):
                ca = Predicate(a.name, sa[r:] + sa[:r])
                cb = Predicate(b.name, sb[r:] + sb[:r])
                key = (print_term(ca), print_term(cb))
                if best is None or key < best[0]:
                    best = (key, (ca, cb))
    return best[1]


def canon(t: Term) -> Term:
    """Canonical representative under entity symmetries."""
    if not isinstance(t, Predicate):
        return t
    name = t.name
    if name in _CORRESPONDENCE and all(
        isinstance(a, Predicate) and _is_point_tuple(a.args) for a in t.args
    ):
        a, b = t.args
        if isinstance(a, Predicate) and isinstance(b, Predicate) and len(a.args) == len(b.args):
            # Correspondence pairs canonicalize in tandem on the raw vertex
            # orders; canonicalizing each polygon alone would erase which
            # vertex maps to which.
            return Predicate(name, _tandem_canon(a, b))
    args = tuple(canon(a) for a in t.args)
    if name in ("Line", "Arc") and _is_point_tuple(args):
        args = tuple(sorted(args, key=lambda p: p.name))
    elif name == "Angle" and _is_point_tuple(args) and len(args) == 3:
        if args[2].name < args[0].name:
            args = (args[2], args[1], args[0])
    elif name == "Sector" and _is_point_tuple(args) and len(args) == 3:
        if args[2].name < args[1].name:
            args = (args[0], args[2], args[1])
    elif (
        name in POLYGON_PREDICATES or name == "Shape"
    ) and _is_point_tuple(args) and len(args) >= 3:
        names = _poly_canon(tuple(p.name for p in args))
        args = tuple(PointRef(n) for n in names)
    elif name in _SORT_PAIR:
        args = tuple(sorted(args, key=print_term))
    elif name in _COMMUTATIVE:
        args = tuple(sorted(args, key=print_term))
    return Predicate(name, args)


def canon_key(t: Term) -> str:
    return print_term(canon(t))


# ---------------------------------------------------------------------------
# Library


@dataclass(frozen=True)
class RuleCase:
    premises: tuple[Term, ...]
    conclusions: tuple[Term, ...]
    guards: tuple[tuple[str, tuple[str, ...]], ...] = ()


@dataclass(frozen=True)
class TheoremRule:
    id: str
    description: str
    cases: tuple[RuleCase, ...]
    builtin: str | None = None


_GUARD_RE = re.compile(r"^(\w+)\(([a-z](?:,[a-z])*)\)$")
_KNOWN_GUARDS = {"opposite_sides", "same_side", "between", "not_collinear"}


def _parse_guard(text: str) -> tuple[str, tuple[str, ...]]:
    m = _GUARD_RE.match(text.replace(" ", ""))
    if not m or m.group(1) not in _KNOWN_GUARDS:
        raise ValueError(f"bad guard {text!r}")
    return m.group(1), tuple(m.group(2).split(","))


def _term_vars(t: Term) -> set[str]:
    if isinstance(t, VarRef):
        return {t.name}
    if isinstance(t, Predicate):
        out: set[str] = set()
        for a in t.args:
            out |= _term_vars(a)
        return out
    return set()


def _load_case(raw: dict, rule_id: str) -> RuleCase:
    premises = tuple(parse_term(p) for p in raw["premises"])
    conclusions = tuple(parse_term(c) for c in raw["conclusions"])
    guards = tuple(_parse_guard(g) for g in raw.get("guards", []))
    bound = set()
    for p in premises:
        bound |= _term_vars(p)
    for c in conclusions:
        free = _term_vars(c) - bound
        if free:
            raise ValueError(f"{rule_id}: conclusion vars {free} unbound by premises")
    for _, args in guards:
        free = set(args) - bound
        if free:
            raise ValueError(f"{rule_id}: guard vars {free} unbound by premises")
    return RuleCase(premises, conclusions, guards)


def load_library(path: str | Path) -> list[TheoremRule]:
    raw = json.loads(Path(path).read_text())
    rules = []
    for entry in raw:
        rule_id = entry["id"]
        if "cases" in entry:
            cases = tuple(_load_case(c, rule_id) for c in entry["cases"])
        elif entry.get("builtin"):
            cases = ()
        else:
            cases = (_load_case(entry, rule_id),)
        rules.append(
            TheoremRule(
                id=rule_id,
                description=entry.get("description", ""),
                cases=cases,
                builtin=entry.get("builtin"),
            )
        )
    if len({r.id for r in rules}) != len(rules):
        raise ValueError("duplicate theorem ids in library")
    return rules


_DEFAULT_LIBRARY: list[TheoremRule] | None = None


def default_library() -> list[TheoremRule]:
    global _DEFAULT_LIBRARY
    if _DEFAULT_LIBRARY is None:
        with resources.as_file(
            resources.files("geosolve.data").joinpath("theorems.json")
        ) as path:
            _DEFAULT_LIBRARY = load_library(path)
    return _DEFAULT_LIBRARY


# ---------------------------------------------------------------------------
# Matching


@dataclass(frozen=True)
class Instantiation:
    rule_id: str
    case_index: int
    binding: tuple[tuple[str, str], ...]  # sorted (var, point) pairs
    note: str = ""

    def as_dict(self) -> dict[str, str]:
        return dict(self.binding)


def _arg_orders(ground: Predicate) -> list[tuple[Term, ...]]:
    """Ground argument orderings equivalent under the head's symmetry."""
    name, args = ground.name, ground.args
    if name in ("Line", "Arc") and len(args) == 2:
        return [args, (args[1], args[0])]
    if name == "Angle" and len(args) == 3:
        return [args, (args[2], args[1], args[0])]
    if name in _SORT_PAIR:
        return [args, (args[1], args[0])]
    if (name in POLYGON_PREDICATES or name == "Shape") and _is_point_tuple(args) and len(args) >= 3:
        orders = []
        for seq in (args, tuple(reversed(args))):
            for r in range(len(seq)):
                orders.append(seq[r:] + seq[:r])
        return orders
    return [args]


def _unify(pat: Term, ground: Term, binding: dict[str, str]) -> Iterator[dict[str, str]]:
    if isinstance(pat, VarRef):
        if not isinstance(ground, PointRef):
            return
        bound = binding.get(pat.name)
        if bound is None:
            if ground.name in binding.values():
                return  # variables bind injectively
            new = dict(binding)
            new[pat.name] = ground.name
            yield new
        elif bound == ground.name:
            yield binding
        return
    if isinstance(pat, PointRef):
        if isinstance(ground, PointRef) and pat.name == ground.name:
            yield binding
        return
    if isinstance(pat, NumberLit):
        if isinstance(ground, NumberLit) and pat.value == ground.value:
            yield binding
        return
    if not (isinstance(pat, Predicate) and isinstance(ground, Predicate)):
        return
    if pat.name != ground.name or len(pat.args) != len(ground.args):
        return
    if pat.name in _CORRESPONDENCE and all(
        isinstance(a, Predicate) for a in pat.args
    ):
        g1, g2 = ground.args
        if not (isinstance(g1, Predicate) and isinstance(g2, Predicate)):
            return
        for a, b in ((g1, g2), (g2, g1)):
            if a.name != pat.args[0].name or b.name != pat.args[1].name:
                continue
            if len(a.args) != len(pat.args[0].args) or len(b.args) != len(pat.args[1].args):
                continue
            k = len(a.args)
            for reflect in (False, True):
                sa = tuple(reversed(a.args)) if reflect else a.args
                sb = tuple(reversed(b.args)) if reflect else b.args
                for r in range(k):
                    ga = sa[r:] + sa[:r]
                    gb = sb[r:] + sb[:r]
                    yield from _unify_seq(
                        tuple(pat.args[0].args) + tuple(pat.args[1].args),
                        ga + gb,
                        binding,
                    )
        return
    for order in _arg_orders(ground):
        yield from _unify_seq(pat.args, order, binding)


def _unify_seq(
    pats: tuple[Term, ...], grounds: tuple[Term, ...], binding: dict[str, str]
) -> Iterator[dict[str, str]]:
    if not pats:
        yield binding
        return
    for b in _unify(pats[0], grounds[0], binding):
        yield from _unify_seq(pats[1:], grounds[1:], b)


# -- guards


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _guard_holds(
    name: str,
    args: tuple[str, ...],
    binding: dict[str, str],
    coords: dict[str, tuple[float, float]],
) -> bool:
    try:
        pts = [coords[binding[v]] for v in args]
    except KeyError:
        return False  # unknown coordinates: be conservative
    if name == "between":
        m, a, b = pts
        return collinear_within(a, m, b)
    if name == "not_collinear":
        a, b, c = pts
        d1 = ((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2) ** 0.5
        d2 = ((c[0] - a[0]) ** 2 + (c[1] - a[1]) ** 2) ** 0.5
        return abs(_cross(a, b, c)) > EPS_COLLINEAR_REL * d1 * d2
    # opposite_sides / same_side of line r-s for points p, q
    p, q, r, s = pts
    rs2 = (s[0] - r[0]) ** 2 + (s[1] - r[1]) ** 2
    cp = _cross(r, s, p)
    cq = _cross(r, s, q)
    strict = EPS_COLLINEAR_REL * rs2
    if abs(cp) <= strict or abs(cq) <= strict:
        return False
    if name == "opposite_sides":
        return (cp > 0) != (cq > 0)
    return (cp > 0) == (cq > 0)


def instantiate(t: Term, binding: dict[str, str]) -> Term:
    if isinstance(t, VarRef) and t.name in binding:
        return PointRef(binding[t.name])
    if isinstance(t, Predicate):
        return Predicate(t.name, tuple(instantiate(a, binding) for a in t.args))
    return t


def match_theorem(
    rule: TheoremRule,
    relations: set[Term],
    coords: dict[str, tuple[float, float]] | None = None,
) -> list[Instantiation]:
    """All substitutions making every premise a member of `relations`
    (symmetry-aware), with orientation guards satisfied; deduplicated by the
    canonical conclusion set and ordered lexicographically by bound points."""
    coords = coords or {}
    by_head: dict[str, list[Term]] = {}
    for relation in relations:
        if isinstance(relation, Predicate):
            by_head.setdefault(relation.name, []).append(relation)
    for head in by_head:
        by_head[head].sort(key=print_term)

    out: list[Instantiation] = []
    seen_conclusions: set[tuple[int, frozenset[str]]] = set()
    for case_index, case in enumerate(rule.cases):

        def search(i: int, binding: dict[str, str]) -> Iterator[dict[str, str]]:
            if i == len(case.premises):
                yield binding
                return
            pat = case.premises[i]
            for ground in by_head.get(pat.name, ()):  # type: ignore[union-attr]
                for b in _unify(pat, ground, binding):
                    yield from search(i + 1, b)

        candidates = []
        for binding in search(0, {}):
            if all(
                _guard_holds(g, args, binding, coords) for g, args in case.guards
            ):
                candidates.append(binding)
        candidates.sort(key=lambda b: tuple(b[v] for v in sorted(b)))
        for binding in candidates:
            key = (
                case_index,
                frozenset(
                    canon_key(instantiate(c, binding)) for c in case.conclusions
                ),
            )
            if key in seen_conclusions:
                continue
            seen_conclusions.add(key)
            out.append(
                Instantiation(
                    rule_id=rule.id,
                    case_index=case_index,
                    binding=tuple(sorted(binding.items())),
                )
            )
    return out
