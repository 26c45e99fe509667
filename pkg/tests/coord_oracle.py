"""Independent coordinate-geometry oracle for solver bindings.

Recomputes every numeric binding straight from the diagram coordinates
(lengths, unsigned angles, shoelace areas, circle/sector formulas), with a
unit scale inferred from one text-bound linear measure.  Deliberately shares
no code with the deduction engine beyond the term parser.
"""

from __future__ import annotations

import math

from geosolve.diagram import CircleSpec, DiagramParse
from geosolve.terms import PointRef, Predicate, Term, parse_term


def _coords(d: DiagramParse) -> dict[str, tuple[float, float]]:
    return {name: (x, y) for name, x, y in d.points}


def _dist(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _angle_deg(a, v, b) -> float:
    ax, ay = a[0] - v[0], a[1] - v[1]
    bx, by = b[0] - v[0], b[1] - v[1]
    dot = ax * bx + ay * by
    cross = ax * by - ay * bx
    return math.degrees(math.atan2(abs(cross), dot))


def _shoelace(points) -> float:
    total = 0.0
    n = len(points)
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return abs(total) / 2.0


def _circle(d: DiagramParse, center: str) -> CircleSpec | None:
    for c in d.circles:
        if c.center == center:
            return c
    return None


def raw_value(term: Term, d: DiagramParse) -> tuple[float, int] | None:
    """(value in pixel units, scale power) or None when not coordinate-backed.

    Scale power: 1 for linear measures, 2 for areas, 0 for angles/ratios.
    """
    coords = _coords(d)
    if not isinstance(term, Predicate):
        return None
    args = term.args

    def pts(node: Predicate):
        if all(isinstance(a, PointRef) for a in node.args):
            try:
                return [coords[a.name] for a in node.args]
            except KeyError:
                return None
        return None

    if term.name == "LengthOf" and isinstance(args[0], Predicate) and args[0].name == "Line":
        p = pts(args[0])
        return (None if p is None else (_dist(p[0], p[1]), 1))
    if term.name == "MeasureOf" and isinstance(args[0], Predicate) and args[0].name == "Angle":
        p = pts(args[0])
        return (None if p is None else (_angle_deg(p[0], p[1], p[2]), 0))
    if term.name in ("RadiusOf", "DiameterOf") and isinstance(args[0], Predicate):
        circle = _circle(d, args[0].args[0].name) if args[0].args else None
        if circle is None:
            return None
        factor = 1.0 if term.name == "RadiusOf" else 2.0
        return (factor * circle.radius, 1)
    if term.name == "AreaOf" and isinstance(args[0], Predicate):
        shape = args[0]
        if shape.name == "Circle":
            circle = _circle(d, shape.args[0].name)
            return None if circle is None else (math.pi * circle.radius**2, 2)
        if shape.name == "Sector":
            circle = _circle(d, shape.args[0].name)
            p = pts(shape)
            if circle is None or p is None:
                return None
            angle = _angle_deg(p[1], p[0], p[2])
            return (angle / 360.0 * math.pi * circle.radius**2, 2)
        p = pts(shape)
        return None if p is None or len(p) < 3 else (_shoelace(p), 2)
    if term.name == "PerimeterOf" and isinstance(args[0], Predicate):
        shape = args[0]
        if shape.name == "Circle":
            circle = _circle(d, shape.args[0].name)
            return None if circle is None else (2.0 * math.pi * circle.radius, 1)
        p = pts(shape)
        if p is None or len(p) < 3:
            return None
        return (sum(_dist(p[i], p[(i + 1) % len(p)]) for i in range(len(p))), 1)
    return None


def infer_scale(bindings: dict[str, float], d: DiagramParse) -> float:
    """Units per pixel, from the first linear binding; 1.0 if none."""
    for key in sorted(bindings):
        try:
            term = parse_term(key)
        except Exception:  # noqa: BLE001 - variable keys etc.
            continue
        raw = raw_value(term, d)
        if raw is None:
            continue
        value, power = raw
        if power == 1 and value > 0:
            return bindings[key] / value
        if power == 2 and value > 0 and bindings[key] > 0:
            return math.sqrt(bindings[key] / value)
    return 1.0


def check_bindings(
    bindings: dict[str, float], d: DiagramParse, rel_tol: float = 1e-4
) -> list[str]:
    """Mismatch descriptions for every coordinate-backed binding."""
    scale = infer_scale(bindings, d)
    problems = []
    for key in sorted(bindings):
        try:
            term = parse_term(key)
        except Exception:  # noqa: BLE001
            continue
        raw = raw_value(term, d)
        if raw is None:
            continue
        value, power = raw
        expected = value * scale**power
        got = bindings[key]
        if abs(got - expected) > rel_tol * max(1.0, abs(expected)):
            problems.append(f"{key}: solver {got!r} vs coordinates {expected!r}")
    return problems
