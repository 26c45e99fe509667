import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graph_of
from geosolve.diagram import (
    DanglingReferenceError,
    DiagramError,
    DiagramParse,
    MissingCoordinatesError,
    SchemaError,
    augmented_graph,
    build_graph,
    enumerate_cycles,
    load_diagram,
    shape_matches_geometry,
)


def test_load_minimal(write_diagram):
    path = write_diagram(
        {
            "points": [{"name": "A", "x": 0, "y": 0}, {"name": "B", "x": 1, "y": 0}],
            "segments": [["A", "B"]],
        }
    )
    d = load_diagram(path)
    assert len(d.points) == 2 and len(d.segments) == 1


def test_load_dangling_reference(write_diagram):
    path = write_diagram(
        {
            "points": [{"name": "A", "x": 0, "y": 0}],
            "segments": [["A", "Z"]],
        }
    )
    with pytest.raises(DanglingReferenceError):
        load_diagram(path)


@pytest.mark.parametrize(
    "mutation, field",
    [
        ({"points": [{"name": "A", "x": "oops", "y": 0}]}, "points[0].x"),
        ({"points": [{"name": "A", "y": 0}]}, "points[0].x"),
        ({"points": [], "segments": [["A"]]}, "segments[0]"),
        (
            {
                "points": [{"name": "A", "x": 0, "y": 0}],
                "circles": [{"center": "A", "radius": -2}],
            },
            "circles[0].radius",
        ),
    ],
)
def test_load_schema_errors(write_diagram, mutation, field):
    with pytest.raises(SchemaError) as err:
        load_diagram(write_diagram(mutation))
    assert field in str(err.value)


def test_load_duplicate_point(write_diagram):
    path = write_diagram(
        {"points": [{"name": "A", "x": 0, "y": 0}, {"name": "A", "x": 1, "y": 1}]}
    )
    with pytest.raises(SchemaError):
        load_diagram(path)


def test_load_square_circle_sample(square_circle):
    assert len(square_circle.points) == 5
    assert len(square_circle.segments) == 4
    assert len(square_circle.circles) == 1
    assert square_circle.circles[0].radius == 50


def test_load_relations_parsed(write_diagram):
    path = write_diagram(
        {
            "points": [
                {"name": "A", "x": 0, "y": 0},
                {"name": "B", "x": 2, "y": 0},
                {"name": "M", "x": 1, "y": 0},
            ],
            "relations": ["PointLiesOnLine(M,Line(A,B))"],
        }
    )
    d = load_diagram(path)
    assert len(d.relations) == 1


# ---------------------------------------------------------------------------
# build_graph


def test_build_graph_triangle_degrees():
    d = DiagramParse(
        points=(("A", 0, 0), ("B", 1, 0), ("C", 0, 1)),
        segments=(("A", "B"), ("B", "C"), ("C", "A")),
    )
    g = build_graph(d)
    assert all(len(g.adjacency[v]) == 2 for v in "ABC")


def test_build_graph_collinear_consecutive_only():
    d = DiagramParse(
        points=(("A", 0, 0), ("M", 1, 0), ("B", 2, 0)),
        collinear_groups=(("A", "M", "B"),),
    )
    g = build_graph(d)
    assert g.has_edge("A", "M") and g.has_edge("M", "B")
    assert not g.has_edge("A", "B")


def test_build_graph_empty():
    g = build_graph(DiagramParse(points=()))
    assert g.adjacency == {}


@st.composite
def random_diagrams(draw):
    n = draw(st.integers(min_value=0, max_value=7))
    names = [f"P{i}" for i in range(n)]
    points = tuple(
        (name, float(draw(st.integers(0, 50))), float(draw(st.integers(0, 50))))
        for name in names
    )
    pairs = list(itertools.combinations(names, 2))
    segments = tuple(
        pair for pair in pairs if pairs and draw(st.booleans())
    )
    return DiagramParse(points=points, segments=segments)


@settings(max_examples=100, deadline=None)
@given(random_diagrams())
def test_build_graph_symmetric_loop_free(d):
    g = build_graph(d)
    for v, neighbors in g.adjacency.items():
        assert v not in neighbors
        for w in neighbors:
            assert v in g.adjacency[w]


# ---------------------------------------------------------------------------
# shape_matches_geometry


def test_square_passes():
    g = graph_of([], {"A": (0, 0), "B": (2, 0), "C": (2, 2), "D": (0, 2)})
    assert shape_matches_geometry("Square", ("A", "B", "C", "D"), g) == []


def test_square_side_mismatch_message():
    g = graph_of([], {"A": (0, 0), "B": (3, 0), "C": (3, 2), "D": (0, 2)})
    violations = shape_matches_geometry("Square", ("A", "B", "C", "D"), g)
    assert any("side lengths 3 vs 2" in v for v in violations)


def test_triangle_degenerate():
    g = graph_of([], {"A": (0, 0), "B": (1, 1), "C": (2, 2)})
    violations = shape_matches_geometry("Triangle", ("A", "B", "C"), g)
    assert violations and "degenerate" in violations[0]


def test_missing_coordinates():
    g = graph_of([], {"A": (0, 0), "B": (1, 0)})
    with pytest.raises(MissingCoordinatesError):
        shape_matches_geometry("Triangle", ("A", "B", "Z"), g)


def test_rectangle_and_parallelogram():
    g = graph_of([], {"A": (0, 0), "B": (4, 0), "C": (4, 2), "D": (0, 2)})
    assert shape_matches_geometry("Rectangle", ("A", "B", "C", "D"), g) == []
    g2 = graph_of([], {"A": (0, 0), "B": (4, 0), "C": (5, 2), "D": (1, 2)})
    assert shape_matches_geometry("Parallelogram", ("A", "B", "C", "D"), g2) == []
    assert shape_matches_geometry("Rectangle", ("A", "B", "C", "D"), g2) != []


def test_shape_rejects_straight_corner():
    g = graph_of([], {"A": (0, 0), "P": (1, 0), "B": (2, 0), "C": (1, 2)})
    assert shape_matches_geometry("Shape", ("A", "P", "B", "C"), g) != []
    assert shape_matches_geometry("Shape", ("A", "B", "C"), g) == []


@settings(max_examples=60, deadline=None)
@given(
    scale=st.floats(min_value=0.1, max_value=50, allow_nan=False),
    angle=st.floats(min_value=0, max_value=2 * math.pi, allow_nan=False),
    dx=st.floats(min_value=-500, max_value=500, allow_nan=False),
    dy=st.floats(min_value=-500, max_value=500, allow_nan=False),
)
def test_geometry_similarity_invariance(scale, angle, dx, dy):
    base = {"A": (0.0, 0.0), "B": (2.0, 0.0), "C": (2.0, 2.0), "D": (0.0, 2.0)}
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    moved = {
        k: (
            scale * (x * cos_a - y * sin_a) + dx,
            scale * (x * sin_a + y * cos_a) + dy,
        )
        for k, (x, y) in base.items()
    }
    g = graph_of([], moved)
    assert shape_matches_geometry("Square", ("A", "B", "C", "D"), g) == []


# ---------------------------------------------------------------------------
# enumerate_cycles


def brute_force_cycles(g, length):
    """Permutation-check oracle: every vertex subset, every order."""
    names = sorted(g.adjacency)
    found = set()
    for subset in itertools.combinations(names, length):
        for perm in itertools.permutations(subset):
            if perm[0] != min(perm):
                continue
            if perm[1] > perm[-1]:
                continue
            if all(
                g.has_edge(perm[i], perm[(i + 1) % length]) for i in range(length)
            ):
                found.add(perm)
    return sorted(found)


def test_triangle_single_cycle():
    g = graph_of([("A", "B"), ("B", "C"), ("C", "A")])
    assert enumerate_cycles(g, 3) == [("A", "B", "C")]


def test_k4_has_four_triangles():
    vertices = "ABCD"
    g = graph_of([(a, b) for a, b in itertools.combinations(vertices, 2)])
    cycles = enumerate_cycles(g, 3)
    assert len(cycles) == 4
    assert cycles == brute_force_cycles(g, 3)


def test_path_has_no_cycle():
    g = graph_of([("A", "B"), ("B", "C")])
    assert enumerate_cycles(g, 3) == []


def test_cycle_length_bounds():
    g = graph_of([("A", "B")])
    with pytest.raises(DiagramError):
        enumerate_cycles(g, 2)
    with pytest.raises(DiagramError):
        enumerate_cycles(g, 9)


@st.composite
def random_graphs(draw, max_vertices=8):
    n = draw(st.integers(min_value=3, max_value=max_vertices))
    names = [chr(ord("A") + i) for i in range(n)]
    edges = [
        pair
        for pair in itertools.combinations(names, 2)
        if draw(st.booleans())
    ]
    return graph_of(edges, {name: (0.0, 0.0) for name in names})


@settings(max_examples=80, deadline=None)
@given(random_graphs(), st.integers(min_value=3, max_value=6))
def test_cycles_match_brute_force(g, length):
    assert enumerate_cycles(g, length) == brute_force_cycles(g, length)


def test_augmented_graph_restores_chain_edge():
    d = DiagramParse(
        points=(("A", 0, 0), ("M", 1, 0), ("B", 2, 0), ("C", 1, 2)),
        segments=(("A", "C"), ("B", "C")),
        collinear_groups=(("A", "M", "B"),),
    )
    assert not build_graph(d).has_edge("A", "B")
    assert augmented_graph(d).has_edge("A", "B")
