"""Diagram-parse ingestion, the diagram graph, and geometric predicates.

The file format is the fixed contract for upstream diagram parsers::

    {"points":   [{"name": "A", "x": 0, "y": 0}, ...],
     "segments": [["A", "B"], ...],
     "collinear": [["A", "M", "B"], ...],
     "circles":  [{"center": "O", "radius": 50, "on_circle": ["P"]}, ...],
     "relations": ["PointLiesOnLine(M,Line(A,B))", ...],
     "image": "optional/path.png"}

Relations use the formal-language text serialization.  Geometric checks use
relative tolerances only, so they are invariant under similarity transforms
of the coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from . import kernels
from .terms import (
    POLYGON_PREDICATES,
    Predicate,
    Term,
    parse_term,
    validate_literal,
)

__all__ = [
    "DiagramError",
    "SchemaError",
    "DanglingReferenceError",
    "MissingCoordinatesError",
    "CircleSpec",
    "DiagramParse",
    "DiagramGraph",
    "load_diagram",
    "build_graph",
    "shape_matches_geometry",
    "enumerate_cycles",
    "augmented_graph",
    "polygon_area",
    "angle_degrees",
]

# Pixel-quantized detector output needs slack; all tolerances are relative.
EPS_LEN_REL = 0.02
EPS_ANG_DEG = 3.0
EPS_AREA_REL = 1e-6
EPS_COLLINEAR_REL = 0.01


class DiagramError(ValueError):
    pass


class SchemaError(DiagramError):
    pass


class DanglingReferenceError(DiagramError):
    pass


class MissingCoordinatesError(DiagramError):
    pass


@dataclass(frozen=True)
class CircleSpec:
    center: str
    radius: float
    on_circle: tuple[str, ...] = ()


@dataclass(frozen=True)
class DiagramParse:
    points: tuple[tuple[str, float, float], ...]
    segments: tuple[tuple[str, str], ...] = ()
    collinear_groups: tuple[tuple[str, ...], ...] = ()
    circles: tuple[CircleSpec, ...] = ()
    relations: tuple[Term, ...] = ()
    image_path: str | None = None

    def point_names(self) -> tuple[str, ...]:
        return tuple(name for name, _, _ in self.points)

    def coordinates(self) -> dict[str, tuple[float, float]]:
        return {name: (x, y) for name, x, y in self.points}

    def circle_by_center(self, center: str) -> CircleSpec | None:
        for c in self.circles:
            if c.center == center:
                return c
        return None


@dataclass
class DiagramGraph:
    adjacency: dict[str, frozenset[str]]
    coordinates: dict[str, tuple[float, float]]

    def has_edge(self, a: str, b: str) -> bool:
        return b in self.adjacency.get(a, frozenset())


# ---------------------------------------------------------------------------
# Loading


def _want(obj, key, kinds, where):
    if key not in obj:
        raise SchemaError(f"{where}.{key}: missing")
    value = obj[key]
    if not isinstance(value, kinds):
        raise SchemaError(f"{where}.{key}: expected {kinds}, got {type(value).__name__}")
    return value


def load_diagram(path: str | Path) -> DiagramParse:
    """Load and validate a diagram-parse file."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise SchemaError("root: expected object")

    points: list[tuple[str, float, float]] = []
    seen: set[str] = set()
    for i, p in enumerate(raw.get("points", [])):
        where = f"points[{i}]"
        if not isinstance(p, dict):
            raise SchemaError(f"{where}: expected object")
        name = _want(p, "name", str, where)
        x = _want(p, "x", (int, float), where)
        y = _want(p, "y", (int, float), where)
        if name in seen:
            raise SchemaError(f"{where}.name: duplicate point {name!r}")
        seen.add(name)
        points.append((name, float(x), float(y)))

    def known(name: str, where: str) -> str:
        if name not in seen:
            raise DanglingReferenceError(f"{where}: undeclared point {name!r}")
        return name

    segments: list[tuple[str, str]] = []
    for i, seg in enumerate(raw.get("segments", [])):
        where = f"segments[{i}]"
        if not (isinstance(seg, list) and len(seg) == 2):
            raise SchemaError(f"{where}: expected a pair")
        a, b = (known(v, where) for v in seg)
        if a == b:
            raise SchemaError(f"{where}: segment endpoints must differ")
        segments.append((a, b))

    groups: list[tuple[str, ...]] = []
    for i, grp in enumerate(raw.get("collinear", [])):
        where = f"collinear[{i}]"
        if not (isinstance(grp, list) and len(grp) >= 3):
            raise SchemaError(f"{where}: expected a list of >= 3 points")
        if len(set(grp)) != len(grp):
            raise SchemaError(f"{where}: repeated point in group")
        groups.append(tuple(known(v, where) for v in grp))

    circles: list[CircleSpec] = []
    for i, c in enumerate(raw.get("circles", [])):
        where = f"circles[{i}]"
        if not isinstance(c, dict):
            raise SchemaError(f"{where}: expected object")
        center = known(_want(c, "center", str, where), where)
        radius = _want(c, "radius", (int, float), where)
        if radius <= 0:
            raise SchemaError(f"{where}.radius: must be positive")
        members = tuple(known(v, where) for v in c.get("on_circle", []))
        circles.append(CircleSpec(center, float(radius), members))

    relations: list[Term] = []
    for i, text in enumerate(raw.get("relations", [])):
        where = f"relations[{i}]"
        if not isinstance(text, str):
            raise SchemaError(f"{where}: expected string")
        term = validate_literal(parse_term(text))
        for name in _term_points(term):
            known(name, where)
        relations.append(term)

    image = raw.get("image")
    if image is not None and not isinstance(image, str):
        raise SchemaError("image: expected string path")

    return DiagramParse(
        points=tuple(points),
        segments=tuple(segments),
        collinear_groups=tuple(groups),
        circles=tuple(circles),
        relations=tuple(relations),
        image_path=image,
    )


def _term_points(term: Term) -> list[str]:
    from .terms import point_names

    return point_names(term)


# ---------------------------------------------------------------------------
# Graph


def build_graph(d: DiagramParse) -> DiagramGraph:
    """Adjacency from segments plus consecutive collinear pairs."""
    adj: dict[str, set[str]] = {name: set() for name in d.point_names()}

    def connect(a: str, b: str) -> None:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)

    for a, b in d.segments:
        connect(a, b)
    for group in d.collinear_groups:
        for a, b in zip(group, group[1:]):
            connect(a, b)
    return DiagramGraph(
        adjacency={k: frozenset(v) for k, v in adj.items()},
        coordinates=d.coordinates(),
    )


def augmented_graph(d: DiagramParse) -> DiagramGraph:
    """build_graph plus an edge between every pair within a collinear group.

    Gives cycle enumeration a direct side for chains (a midpoint on AB splits
    the edge; the augmented graph restores A-B).  Degenerate cycles this
    introduces are culled by the geometry filters downstream.
    """
    g = build_graph(d)
    adj = {k: set(v) for k, v in g.adjacency.items()}
    for group in d.collinear_groups:
        for i, a in enumerate(group):
            for b in group[i + 1 :]:
                adj[a].add(b)
                adj[b].add(a)
    return DiagramGraph(
        adjacency={k: frozenset(v) for k, v in adj.items()},
        coordinates=g.coordinates,
    )


# ---------------------------------------------------------------------------
# Coordinate geometry helpers


def _dist(p: tuple[float, float], q: tuple[float, float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def angle_degrees(
    a: tuple[float, float], v: tuple[float, float], b: tuple[float, float]
) -> float:
    """Unsigned angle at vertex v between rays v->a and v->b, in degrees."""
    ax, ay = a[0] - v[0], a[1] - v[1]
    bx, by = b[0] - v[0], b[1] - v[1]
    dot = ax * bx + ay * by
    cross = ax * by - ay * bx
    return math.degrees(math.atan2(abs(cross), dot))


def polygon_area(coords: list[tuple[float, float]]) -> float:
    """Absolute shoelace area."""
    total = 0.0
    k = len(coords)
    for i in range(k):
        x1, y1 = coords[i]
        x2, y2 = coords[(i + 1) % k]
        total += x1 * y2 - x2 * y1
    return abs(total) / 2.0


def collinear_within(
    a: tuple[float, float], m: tuple[float, float], b: tuple[float, float]
) -> bool:
    """m lies on segment ab (relative cross tolerance, strict betweenness)."""
    abx, aby = b[0] - a[0], b[1] - a[1]
    amx, amy = m[0] - a[0], m[1] - a[1]
    ab2 = abx * abx + aby * aby
    if ab2 == 0:
        return False
    cross = abx * amy - aby * amx
    if abs(cross) > EPS_COLLINEAR_REL * ab2:
        return False
    t = (amx * abx + amy * aby) / ab2
    return 0.0 < t < 1.0


def _bbox_area(coords: list[tuple[float, float]]) -> float:
    xs = [c[0] for c in coords]
    ys = [c[1] for c in coords]
    return max(1e-300, (max(xs) - min(xs)) * (max(ys) - min(ys)))


def _require_coords(g: DiagramGraph, vertices: tuple[str, ...]) -> list[tuple[float, float]]:
    missing = [v for v in vertices if v not in g.coordinates]
    if missing:
        raise MissingCoordinatesError(f"no coordinates for {', '.join(missing)}")
    return [g.coordinates[v] for v in vertices]


def _sides(coords: list[tuple[float, float]]) -> list[float]:
    k = len(coords)
    return [_dist(coords[i], coords[(i + 1) % k]) for i in range(k)]


def _corner_angles(coords: list[tuple[float, float]]) -> list[float]:
    k = len(coords)
    return [
        angle_degrees(coords[i - 1], coords[i], coords[(i + 1) % k]) for i in range(k)
    ]


def _check_equal_sides(sides: list[float], out: list[str]) -> None:
    lo, hi = min(sides), max(sides)
    if lo <= 0 or (hi - lo) / hi > EPS_LEN_REL:
        out.append(f"side lengths {hi:g} vs {lo:g}")


def _check_right_angles(angles: list[float], out: list[str]) -> None:
    for i, ang in enumerate(angles):
        if abs(ang - 90.0) > EPS_ANG_DEG:
            out.append(f"corner {i} is {ang:.1f} degrees, expected 90")


def _check_opposite_sides_equal(sides: list[float], out: list[str]) -> None:
    k = len(sides)
    for i in range(k // 2):
        a, b = sides[i], sides[i + k // 2]
        if abs(a - b) / max(a, b, 1e-300) > EPS_LEN_REL:
            out.append(f"opposite sides {a:g} vs {b:g}")


def _side_direction_deg(p: tuple[float, float], q: tuple[float, float]) -> float:
    return math.degrees(math.atan2(q[1] - p[1], q[0] - p[0])) % 180.0


def _check_opposite_sides_parallel(coords: list[tuple[float, float]], out: list[str]) -> None:
    k = len(coords)
    for i in range(k // 2):
        d1 = _side_direction_deg(coords[i], coords[(i + 1) % k])
        j = i + k // 2
        d2 = _side_direction_deg(coords[j], coords[(j + 1) % k])
        delta = abs(d1 - d2)
        delta = min(delta, 180.0 - delta)
        if delta > EPS_ANG_DEG:
            out.append(f"sides {i} and {j} differ in direction by {delta:.1f} degrees")


def _check_simple(coords: list[tuple[float, float]], out: list[str]) -> None:
    if not kernels.polygon_is_simple([c[0] for c in coords], [c[1] for c in coords]):
        out.append("polygon is self-intersecting or degenerate")
        return
    # Every named vertex must be a real corner: consecutive sides may not be
    # collinear (a straight corner means the point lies on a side, not on
    # the boundary's corner set).
    k = len(coords)
    for i in range(k):
        p, v, q = coords[i - 1], coords[i], coords[(i + 1) % k]
        d1 = math.dist(p, v)
        d2 = math.dist(q, v)
        cross = (p[0] - v[0]) * (q[1] - v[1]) - (p[1] - v[1]) * (q[0] - v[0])
        if abs(cross) <= EPS_COLLINEAR_REL * d1 * d2:
            out.append(f"degenerate: straight corner at vertex {i}")
            return


def shape_matches_geometry(
    kind: str, vertices: tuple[str, ...], g: DiagramGraph
) -> list[str]:
    """Check that the named vertices trace the intended shape; [] means pass.

    Per-kind checks (relative tolerances, similarity invariant): Square needs
    equal sides and right angles; Rectangle right angles and equal opposite
    sides; Parallelogram parallel opposite sides; Triangle non-degeneracy;
    Pentagon/Hexagon/Rhombus equal sides only; Trapezoid one parallel pair;
    generic Shape / Quadrilateral a simple polygon.
    """
    if kind == "Circle":
        return []
    if kind not in POLYGON_PREDICATES and kind != "Shape":
        raise DiagramError(f"{kind} is not a polygon or circle predicate")
    coords = _require_coords(g, vertices)
    violations: list[str] = []
    if kind == "Triangle":
        if polygon_area(coords) <= EPS_AREA_REL * _bbox_area(coords):
            violations.append("degenerate: collinear vertices")
        return violations
    sides = _sides(coords)
    if min(sides) <= 0:
        return ["degenerate: repeated vertices"]
    if kind == "Square":
        _check_equal_sides(sides, violations)
        _check_right_angles(_corner_angles(coords), violations)
    elif kind == "Rectangle":
        _check_right_angles(_corner_angles(coords), violations)
        _check_opposite_sides_equal(sides, violations)
    elif kind == "Parallelogram":
        _check_opposite_sides_parallel(coords, violations)
    elif kind in ("Pentagon", "Hexagon", "Rhombus"):
        _check_equal_sides(sides, violations)
    elif kind == "Trapezoid":
        before = len(violations)
        _check_opposite_sides_parallel(coords, violations)
        # One parallel pair suffices: drop the violation if some pair matched.
        if len(violations) - before == 1:
            del violations[before:]
        elif len(violations) - before == 2:
            violations[before:] = ["no parallel opposite sides"]
    else:  # Shape, Quadrilateral
        _check_simple(coords, violations)
    return violations


def _chain_connected(g: DiagramGraph, u: str, v: str, exclude: set[str]) -> bool:
    """True if u reaches v along graph edges through points lying on the
    open segment u-v (a collinear chain), avoiding `exclude`."""
    cu = g.coordinates.get(u)
    cv = g.coordinates.get(v)
    if cu is None or cv is None:
        return False
    allowed = {
        w
        for w in g.adjacency
        if w not in exclude
        and w != u
        and w != v
        and w in g.coordinates
        and collinear_within(cu, g.coordinates[w], cv)
    }
    frontier = [u]
    seen = {u}
    while frontier:
        cur = frontier.pop()
        for nxt in g.adjacency.get(cur, frozenset()):
            if nxt == v and cur != u:
                return True
            if nxt in allowed and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return False


def effective_edge(g: DiagramGraph, u: str, v: str, exclude: set[str]) -> bool:
    """Direct edge, or a collinear chain acting as a single polygon side."""
    return g.has_edge(u, v) or _chain_connected(g, u, v, exclude - {u, v})


# ---------------------------------------------------------------------------
# Cycle enumeration


def enumerate_cycles(g: DiagramGraph, length: int) -> list[tuple[str, ...]]:
    """All simple cycles of exactly `length` vertices, canonical and sorted.

    Canonical form: the lexicographically smallest vertex first, oriented
    toward its smaller cycle neighbor (one representative per
    rotation/reflection class).
    """
    if not 3 <= length <= 8:
        raise DiagramError(f"cycle length {length} outside 3..8")
    names = sorted(g.adjacency)
    index = {name: i for i, name in enumerate(names)}
    adjacency = [
        sorted(index[w] for w in g.adjacency[name]) for name in names
    ]
    raw = kernels.simple_cycles_length(len(names), adjacency, length)
    return [tuple(names[i] for i in cycle) for cycle in raw]
