"""The geometry formal language: predicate terms, parsing, canonical printing.

Every stage of the pipeline exchanges text in this language, e.g.
``Equals(LengthOf(Line(A,B)),5)`` or ``Find(AreaOf(Shaded(Shape($))))``.
The grammar is::

    term   := NAME '(' term (',' term)* ')'   predicate application
            | NAME                            point (uppercase) or variable
            | NUMBER                          decimal, p/q fraction, or pi
            | '$'                             unknown placeholder

The predicate table is closed: applying any symbol not listed below is an
error, and arities are enforced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence, Union

from .exact import PI, Num

__all__ = [
    "Term",
    "Predicate",
    "PointRef",
    "NumberLit",
    "VarRef",
    "Unknown",
    "UNKNOWN",
    "PredicateInfo",
    "PREDICATE_TABLE",
    "LanguageError",
    "TermSyntaxError",
    "ArityError",
    "UnknownPredicateError",
    "CountMismatchError",
    "parse_term",
    "print_term",
    "substitute_unknowns",
    "walk",
    "unknown_paths",
    "replace_at",
    "subterm_at",
    "point_names",
    "is_literal",
    "validate_literal",
]


class LanguageError(ValueError):
    """Base for formal-language violations."""


class TermSyntaxError(LanguageError):
    pass


class ArityError(LanguageError):
    pass


class UnknownPredicateError(LanguageError):
    pass


class CountMismatchError(LanguageError):
    pass


class Term:
    """Base class; concrete nodes below are immutable and hashable."""

    __slots__ = ()


@dataclass(frozen=True)
class Predicate(Term):
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class PointRef(Term):
    name: str

    def __post_init__(self) -> None:
        if not re.fullmatch(r"[A-Z][A-Z0-9]*", self.name):
            raise TermSyntaxError(f"invalid point name {self.name!r}")


@dataclass(frozen=True)
class NumberLit(Term):
    value: Num

    def __post_init__(self) -> None:
        # Only plain rationals or the bare constant pi may appear in terms.
        if self.value.pi_coef not in (0, 1) or (
            self.value.pi_coef == 1 and self.value.rat != 0
        ):
            raise TermSyntaxError(f"unprintable numeric literal {self.value!r}")


@dataclass(frozen=True)
class VarRef(Term):
    name: str

    def __post_init__(self) -> None:
        if not re.fullmatch(r"[a-z][a-z0-9_]*", self.name):
            raise TermSyntaxError(f"invalid variable name {self.name!r}")


@dataclass(frozen=True)
class Unknown(Term):
    """The `$` placeholder marking a textual ambiguity."""


UNKNOWN = Unknown()


@dataclass(frozen=True)
class PredicateInfo:
    min_arity: int
    max_arity: int  # == min_arity for fixed arity
    category: str  # entity | measure | relation | goal | modifier | arith

    def accepts(self, n: int) -> bool:
        return self.min_arity <= n <= self.max_arity


def _fixed(n: int, cat: str) -> PredicateInfo:
    return PredicateInfo(n, n, cat)


_VARIADIC_MAX = 12

PREDICATE_TABLE: dict[str, PredicateInfo] = {
    # entities
    "Point": _fixed(1, "entity"),
    "Line": _fixed(2, "entity"),
    "Angle": _fixed(3, "entity"),
    "Arc": _fixed(2, "entity"),
    "Circle": _fixed(1, "entity"),
    "Triangle": _fixed(3, "entity"),
    "Quadrilateral": _fixed(4, "entity"),
    "Parallelogram": _fixed(4, "entity"),
    "Rectangle": _fixed(4, "entity"),
    "Square": _fixed(4, "entity"),
    "Rhombus": _fixed(4, "entity"),
    "Trapezoid": _fixed(4, "entity"),
    "Pentagon": _fixed(5, "entity"),
    "Hexagon": _fixed(6, "entity"),
    "Shape": PredicateInfo(1, _VARIADIC_MAX, "entity"),
    "Sector": _fixed(3, "entity"),
    # modifier
    "Shaded": PredicateInfo(1, _VARIADIC_MAX, "modifier"),
    # measures
    "LengthOf": _fixed(1, "measure"),
    "MeasureOf": _fixed(1, "measure"),
    "AreaOf": _fixed(1, "measure"),
    "PerimeterOf": _fixed(1, "measure"),
    "RadiusOf": _fixed(1, "measure"),
    "DiameterOf": _fixed(1, "measure"),
    "RatioOf": _fixed(2, "measure"),
    "ScaleFactorOf": _fixed(2, "measure"),
    # relations (proposition-forming)
    "Equals": _fixed(2, "relation"),
    "CircumscribedTo": _fixed(2, "relation"),
    "InscribedIn": _fixed(2, "relation"),
    "IsAltitudeOf": _fixed(2, "relation"),
    "IsMidpointOf": _fixed(2, "relation"),
    "Perpendicular": _fixed(2, "relation"),
    "Parallel": _fixed(2, "relation"),
    "Tangent": _fixed(2, "relation"),
    "PointLiesOnLine": _fixed(2, "relation"),
    "PointLiesOnCircle": _fixed(2, "relation"),
    "Similar": _fixed(2, "relation"),
    "Congruent": _fixed(2, "relation"),
    # goal
    "Find": _fixed(1, "goal"),
    # arithmetic (equation templates and area compositions)
    "Add": PredicateInfo(2, _VARIADIC_MAX, "arith"),
    "Sub": _fixed(2, "arith"),
    "Mul": PredicateInfo(2, _VARIADIC_MAX, "arith"),
    "Div": _fixed(2, "arith"),
    "Pow": _fixed(2, "arith"),
    "Sqrt": _fixed(1, "arith"),
}

POLYGON_PREDICATES = {
    "Triangle",
    "Quadrilateral",
    "Parallelogram",
    "Rectangle",
    "Square",
    "Rhombus",
    "Trapezoid",
    "Pentagon",
    "Hexagon",
}

PROPOSITION_PREDICATES = {
    name
    for name, info in PREDICATE_TABLE.items()
    if info.category in ("relation", "goal", "entity")
} - {"Point", "Line", "Angle", "Arc"} | {"Equals", "Find"}
# Entity declarations (Triangle(A,B,C), Square(...)) are legitimate standalone
# propositions; bare structural entities (Point/Line/Angle/Arc) are not.


# ---------------------------------------------------------------------------
# Parsing


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>-?\d+(?:\.\d+)?(?:/\d+)?|pi)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<punct>[(),$])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise TermSyntaxError(f"bad token at {rest[:12]!r}")
        if m.lastgroup is not None:
            tokens.append((m.lastgroup, m.group(m.lastgroup)))
        pos = m.end()
    return tokens


def _parse_number(text: str) -> NumberLit:
    if text == "pi":
        return NumberLit(PI)
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise TermSyntaxError(f"zero denominator in {text!r}")
        return NumberLit(Num(Fraction(int(num), int(den))))
    return NumberLit(Num(Fraction(text)))


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise TermSyntaxError("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.take()
        if tok[1] != value:
            raise TermSyntaxError(f"expected {value!r}, found {tok[1]!r}")

    def term(self) -> Term:
        kind, value = self.take()
        if kind == "num":
            return _parse_number(value)
        if kind == "punct":
            if value == "$":
                return UNKNOWN
            raise TermSyntaxError(f"unexpected {value!r}")
        nxt = self.peek()
        if nxt is not None and nxt[1] == "(":
            return self.application(value)
        return self.atom(value)

    def application(self, name: str) -> Predicate:
        info = PREDICATE_TABLE.get(name)
        if info is None:
            raise UnknownPredicateError(f"unknown predicate {name!r}")
        self.expect("(")
        args = [self.term()]
        while True:
            tok = self.take()
            if tok[1] == ")":
                break
            if tok[1] != ",":
                raise TermSyntaxError(f"expected ',' or ')', found {tok[1]!r}")
            args.append(self.term())
        # A lone `$` stands for the predicate's entire missing argument list
        # (the Square($) convention), so it passes any arity.
        packed = len(args) == 1 and isinstance(args[0], Unknown)
        if not packed and not info.accepts(len(args)):
            raise ArityError(
                f"{name} takes {info.min_arity}"
                + ("" if info.min_arity == info.max_arity else f"..{info.max_arity}")
                + f" args, got {len(args)}"
            )
        return Predicate(name, tuple(args))

    def atom(self, name: str) -> Term:
        if re.fullmatch(r"[A-Z][A-Z0-9]*", name):
            return PointRef(name)
        if re.fullmatch(r"[a-z][a-z0-9_]*", name):
            return VarRef(name)
        if name in PREDICATE_TABLE:
            raise ArityError(f"predicate {name} requires arguments")
        raise TermSyntaxError(f"bad bare name {name!r}")


def parse_term(text: str) -> Term:
    """Parse one formal-language expression; raises on any malformation."""
    parser = _Parser(_tokenize(text))
    term = parser.term()
    if parser.peek() is not None:
        raise TermSyntaxError(f"trailing input after term: {parser.peek()[1]!r}")
    return term


# ---------------------------------------------------------------------------
# Printing


def _print_number(value: Num) -> str:
    if value.pi_coef == 1:
        return "pi"
    q = value.rat
    if q.denominator == 1:
        return str(q.numerator)
    den = q.denominator
    two, five = 0, 0
    while den % 2 == 0:
        den //= 2
        two += 1
    while den % 5 == 0:
        den //= 5
        five += 1
    if den == 1:
        # Finite decimal expansion: print exactly.
        digits = max(two, five)
        scaled = q * 10**digits
        sign = "-" if scaled < 0 else ""
        whole, frac = divmod(abs(scaled.numerator), 10**digits)
        return f"{sign}{whole}.{str(frac).zfill(digits)}"
    return f"{q.numerator}/{q.denominator}"


def print_term(t: Term) -> str:
    """Canonical serialization: no whitespace, args comma-joined."""
    if isinstance(t, Unknown):
        return "$"
    if isinstance(t, PointRef):
        return t.name
    if isinstance(t, VarRef):
        return t.name
    if isinstance(t, NumberLit):
        return _print_number(t.value)
    if isinstance(t, Predicate):
        return f"{t.name}({','.join(print_term(a) for a in t.args)})"
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Tree utilities


def walk(t: Term, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], Term]]:
    """Pre-order traversal yielding (path, node)."""
    yield path, t
    if isinstance(t, Predicate):
        for i, arg in enumerate(t.args):
            yield from walk(arg, path + (i,))


def unknown_paths(t: Term) -> list[tuple[int, ...]]:
    """Paths of all `$` leaves, left to right."""
    return [path for path, node in walk(t) if isinstance(node, Unknown)]


def subterm_at(t: Term, path: tuple[int, ...]) -> Term:
    node = t
    for i in path:
        if not isinstance(node, Predicate):
            raise IndexError(f"path {path} leaves the tree at {node!r}")
        node = node.args[i]
    return node


def replace_at(t: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    if not isinstance(t, Predicate):
        raise IndexError(f"path {path} leaves the tree at {t!r}")
    i = path[0]
    args = list(t.args)
    args[i] = replace_at(args[i], path[1:], new)
    return Predicate(t.name, tuple(args))


def point_names(t: Term) -> list[str]:
    """All point names in the term, in traversal order (with repeats)."""
    return [node.name for _, node in walk(t) if isinstance(node, PointRef)]


def substitute_unknowns(
    t: Term, fills: Sequence[Union[Term, Sequence[Term]]]
) -> Term:
    """Replace the k-th `$` leaf with fills[k], left to right.

    A fill may be a sequence of terms: when the placeholder stands for an
    entity predicate's full argument list (the ``Square($)`` convention) the
    pack is spliced in place of the single `$` argument.
    """
    paths = unknown_paths(t)
    if len(paths) != len(fills):
        raise CountMismatchError(
            f"term has {len(paths)} placeholders, got {len(fills)} fills"
        )

    def rebuild(node: Term, fill_iter: Iterator) -> Term:
        if isinstance(node, Unknown):
            fill = next(fill_iter)
            if isinstance(fill, Term):
                return fill
            raise CountMismatchError("argument pack outside a predicate argument list")
        if isinstance(node, Predicate):
            new_args: list[Term] = []
            for arg in node.args:
                if isinstance(arg, Unknown):
                    fill = next(fill_iter)
                    if isinstance(fill, Term):
                        new_args.append(fill)
                    else:
                        new_args.extend(fill)
                else:
                    new_args.append(rebuild(arg, fill_iter))
            info = PREDICATE_TABLE[node.name]
            if not info.accepts(len(new_args)):
                raise ArityError(
                    f"{node.name} cannot take {len(new_args)} args after substitution"
                )
            return Predicate(node.name, tuple(new_args))
        return node

    result = rebuild(t, iter(fills))
    assert not unknown_paths(result)
    return result


# ---------------------------------------------------------------------------
# Literals


def is_literal(t: Term) -> bool:
    return isinstance(t, Predicate) and t.name in PROPOSITION_PREDICATES


def validate_literal(t: Term) -> Term:
    if not is_literal(t):
        raise LanguageError(f"not a proposition-forming term: {print_term(t)}")
    return t
