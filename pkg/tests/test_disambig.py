import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graph_of
from geosolve.clients import CannedClient, ClientError, HeuristicClient, ModelRequest, request_key
from geosolve.diagram import DiagramParse, build_graph
from geosolve.disambig import (
    UNSPECIFIED_AREAS,
    UNSPECIFIED_POINTS,
    UNSPECIFIED_SHAPES,
    craft_prompt,
    detect_ambiguities,
    rectify,
    verify_candidate,
    verify_entities,
    verify_shape_closure,
    verify_vertex_geometry,
)
from geosolve.terms import parse_term, print_term
from geosolve.textparse import ParsedProblem, parse_text


def problem_of(*literal_texts: str, target: str = "Find(x)", prose: str = "") -> ParsedProblem:
    return ParsedProblem(
        propositions=tuple(parse_term(t) for t in literal_texts),
        target=parse_term(target),
        unmatched_spans=(),
        prose=prose,
    )


# ---------------------------------------------------------------------------
# detect_ambiguities


def test_detect_none():
    p = problem_of("Equals(LengthOf(Line(A,B)),3)")
    assert detect_ambiguities(p) == []


def test_detect_circumscribed_two_points_kind():
    p = problem_of("CircumscribedTo(Square($),Circle($))")
    ambs = detect_ambiguities(p)
    assert [a.kind for a in ambs] == [UNSPECIFIED_POINTS, UNSPECIFIED_POINTS]


def test_detect_shaded_area_kind():
    p = problem_of(target="Find(AreaOf(Shaded(Shape($))))")
    ambs = detect_ambiguities(p)
    assert [a.kind for a in ambs] == [UNSPECIFIED_AREAS]


def test_detect_shape_kind():
    p = problem_of("IsAltitudeOf(Line(C,P),Shape($))")
    ambs = detect_ambiguities(p)
    assert [a.kind for a in ambs] == [UNSPECIFIED_SHAPES]
    assert ambs[0].literal_index == 0


# ---------------------------------------------------------------------------
# craft_prompt


def test_prompt_embeds_literal_points_prose(square_circle):
    p = problem_of(
        "InscribedIn(Circle(O),Square($))",
        prose="Circle O is inscribed in the square.",
    )
    a = detect_ambiguities(p)[0]
    bundle = craft_prompt(a, p, square_circle)
    assert "Square($)" in bundle.user
    for name in square_circle.point_names():
        assert name in bundle.user
    assert p.prose in bundle.user
    assert "formal-language term" in bundle.system + bundle.user


def test_prompt_area_kind_mentions_composition(square_circle):
    p = problem_of(target="Find(AreaOf(Shaded(Shape($))))", prose="x")
    bundle = craft_prompt(detect_ambiguities(p)[0], p, square_circle)
    assert "AreaOf(Square(A,B,C,D)) - AreaOf(Circle(O))" in bundle.user


def test_prompt_feedback_slot(square_circle):
    p = problem_of(target="Find(AreaOf(Shaded(Shape($))))", prose="x")
    a = detect_ambiguities(p)[0]
    bundle = craft_prompt(a, p, square_circle, feedback="Your previous answer failed")
    assert "Your previous answer failed" in bundle.user


# ---------------------------------------------------------------------------
# verify_entities


def test_entities_pass(square_circle):
    assert verify_entities(parse_term("Square(A,B,C,D)"), square_circle) == []


def test_entities_unknown_point(square_circle):
    violations = verify_entities(parse_term("Triangle(A,B,Q)"), square_circle)
    assert any("unknown point Q" in v.message for v in violations)
    assert all(v.heuristic == "EntityExistence" for v in violations)


def test_entities_circle_lookup(square_circle):
    assert verify_entities(parse_term("Circle(O)"), square_circle) == []
    violations = verify_entities(parse_term("Circle(A)"), square_circle)
    assert any("no circle centered at A" in v.message for v in violations)


def test_entities_line_via_collinear_chain():
    d = DiagramParse(
        points=(("A", 0, 0), ("M", 1, 0), ("B", 2, 0)),
        collinear_groups=(("A", "M", "B"),),
    )
    assert verify_entities(parse_term("Line(A,B)"), d) == []
    assert verify_entities(parse_term("Line(A,M)"), d) == []


def test_entities_disconnected_line(square_circle):
    violations = verify_entities(parse_term("Line(A,C)"), square_circle)
    assert any("no line through" in v.message for v in violations)


# ---------------------------------------------------------------------------
# verify_shape_closure


def test_closure_pentagon_repair_matches_misordered_output(pentagon):
    g = build_graph(pentagon)
    report = verify_shape_closure(parse_term("Pentagon(A,B,C,D,E)"), g)
    assert report.verdict == "repaired"
    assert print_term(report.repaired_literal) == "Pentagon(A,B,D,E,C)"


def test_closure_triangle_accepted():
    g = graph_of([("A", "B"), ("B", "C"), ("C", "A")])
    report = verify_shape_closure(parse_term("Triangle(A,B,C)"), g)
    assert report.verdict == "accepted"


def test_closure_missing_edge_rejected():
    g = graph_of([("A", "B"), ("B", "C"), ("D", "A")])
    report = verify_shape_closure(parse_term("Quadrilateral(A,B,C,D)"), g)
    assert report.verdict == "rejected"
    assert report.violations[0].heuristic == "ShapeClosure"


def test_closure_chain_counts_as_side():
    coords = {"A": (0.0, 0.0), "M": (1.0, 0.0), "B": (2.0, 0.0), "C": (1.0, 2.0)}
    g = graph_of([("A", "M"), ("M", "B"), ("B", "C"), ("C", "A")], coords)
    report = verify_shape_closure(parse_term("Triangle(A,B,C)"), g)
    assert report.verdict == "accepted"


def closure_oracle(vertices, g):
    """Independent oracle: degree counts by pair scan, orders by brute force."""
    vs = set(vertices)
    if len(vs) != len(vertices):
        return "rejected"
    degree = {
        v: sum(1 for w in vertices if w != v and g.has_edge(v, w)) for v in vertices
    }
    if any(d != 2 for d in degree.values()):
        return "rejected"
    k = len(vertices)
    valid_orders = [
        (vertices[0],) + rest
        for rest in itertools.permutations(vertices[1:])
        if all(
            g.has_edge(((vertices[0],) + rest)[i], ((vertices[0],) + rest)[(i + 1) % k])
            for i in range(k)
        )
    ]
    if not valid_orders:
        return "rejected"
    as_given = tuple(vertices)
    if as_given in valid_orders:
        return "accepted"
    return "repaired"


@st.composite
def graph_and_candidate(draw, max_vertices=6):
    n = draw(st.integers(min_value=3, max_value=max_vertices))
    names = [chr(ord("A") + i) for i in range(n)]
    edges = [p for p in itertools.combinations(names, 2) if draw(st.booleans())]
    g = graph_of(edges, {name: (0.0, 0.0) for name in names})
    size = draw(st.integers(min_value=3, max_value=n))
    subset = draw(st.permutations(names))[:size]
    return g, tuple(subset)


POLY_BY_ARITY = {3: "Triangle", 4: "Quadrilateral", 5: "Pentagon", 6: "Hexagon"}


@settings(max_examples=200, deadline=None)
@given(graph_and_candidate())
def test_closure_matches_oracle(case):
    g, vertices = case
    literal = parse_term(f"{POLY_BY_ARITY[len(vertices)]}({','.join(vertices)})")
    report = verify_shape_closure(literal, g)
    assert report.verdict == closure_oracle(vertices, g)


@settings(max_examples=150, deadline=None)
@given(graph_and_candidate())
def test_repair_is_permutation_and_idempotent(case):
    g, vertices = case
    literal = parse_term(f"{POLY_BY_ARITY[len(vertices)]}({','.join(vertices)})")
    report = verify_shape_closure(literal, g)
    if report.verdict != "repaired":
        return
    repaired = report.repaired_literal
    new_vertices = [a.name for a in repaired.args]
    assert sorted(new_vertices) == sorted(vertices)
    assert verify_shape_closure(repaired, g).verdict == "accepted"


# ---------------------------------------------------------------------------
# verify_vertex_geometry


def test_geometry_square_fixture(square_circle):
    g = build_graph(square_circle)
    assert verify_vertex_geometry(parse_term("Square(A,B,C,D)"), g) == []


def test_geometry_center_substitution_flagged(square_circle):
    g = build_graph(square_circle)
    violations = verify_vertex_geometry(parse_term("Square(A,B,C,O)"), g)
    assert violations and violations[0].heuristic == "VertexGeometry"


def test_geometry_degenerate_triangle():
    g = graph_of([], {"A": (0.0, 0.0), "B": (1.0, 1.0), "C": (2.0, 2.0)})
    violations = verify_vertex_geometry(parse_term("Triangle(A,B,C)"), g)
    assert violations


# ---------------------------------------------------------------------------
# rectify


def canned_for(problem, diagram, replies, prompt_dir=None):
    """Build a canned client keyed on the prompts rectify will actually send."""
    store = {}
    ambs = detect_ambiguities(problem)
    for a, reply in zip(ambs, replies):
        bundle = craft_prompt(a, problem, diagram, prompt_dir=prompt_dir)
        store[request_key(ModelRequest(system=bundle.system, user=bundle.user))] = reply
    return CannedClient(store)


def test_rectify_square_one_round(square_circle):
    prose = "Circle O is inscribed in the square."
    p = problem_of("InscribedIn(Circle(O),Square($))", prose=prose)
    client = canned_for(p, square_circle, ["Square(A,B,C,D)"])
    fixed, traces = rectify(p, square_circle, client)
    assert print_term(fixed.propositions[0]) == "InscribedIn(Circle(O),Square(A,B,C,D))"
    assert len(traces) == 1 and len(traces[0].rounds) == 1
    assert traces[0].rounds[0].report.verdict == "accepted"


def test_rectify_pentagon_repaired(pentagon):
    p = problem_of(target="Find(PerimeterOf(Pentagon($)))", prose="the pentagon")
    client = canned_for(p, pentagon, ["Pentagon(A,B,C,D,E)"])
    fixed, traces = rectify(p, pentagon, client)
    assert traces[0].rounds[0].report.verdict == "repaired"
    assert print_term(fixed.target) == "Find(PerimeterOf(Pentagon(A,B,D,E,C)))"


def test_rectify_exhaustion_residual(square_circle):
    p = problem_of("CircumscribedTo(Square($),Circle($))", prose="square and circle")

    class AlwaysWrong:
        def complete(self, req):
            return "Triangle(X,Y,Z)"

    fixed, traces = rectify(p, square_circle, AlwaysWrong(), max_rounds=3)
    assert all(t.residual for t in traces)
    assert all(len(t.rounds) == 3 for t in traces)
    assert print_term(fixed.propositions[0]) == "CircumscribedTo(Square($),Circle($))"


def test_rectify_feedback_carries_violations(square_circle):
    p = problem_of("InscribedIn(Circle(O),Square($))", prose="x")

    class WrongThenRight:
        def __init__(self):
            self.calls = 0

        def complete(self, req):
            self.calls += 1
            if self.calls == 1:
                return "Square(A,B,C,Q)"
            assert "Your previous answer" in req.user
            assert "unknown point Q" in req.user
            return "Square(A,B,C,D)"

    fixed, traces = rectify(p, square_circle, WrongThenRight())
    assert len(traces[0].rounds) == 2
    assert traces[0].rounds[1].report.verdict == "accepted"


def test_rectify_unparseable_reply_counts_as_failed_round(square_circle):
    p = problem_of("InscribedIn(Circle(O),Square($))", prose="x")

    class Gibberish:
        def complete(self, req):
            return "certainly! the square is ABCD"

    _, traces = rectify(p, square_circle, Gibberish(), max_rounds=2)
    assert traces[0].residual
    assert any(
        "unparseable reply" in v.message
        for r in traces[0].rounds
        for v in r.report.violations
    )


def test_rectify_client_error_propagates(square_circle):
    p = problem_of("InscribedIn(Circle(O),Square($))", prose="x")

    class Broken:
        def complete(self, req):
            raise ClientError("backend down")

    with pytest.raises(ClientError) as err:
        rectify(p, square_circle, Broken())
    assert "round 1" in str(err.value)


def test_rectify_verifier_off_accepts_blindly(pentagon):
    p = problem_of(target="Find(PerimeterOf(Pentagon($)))", prose="x")
    client = canned_for(p, pentagon, ["Pentagon(A,B,C,D,E)"])
    fixed, traces = rectify(p, pentagon, client, verifier_on=False)
    # no repair happens without the verifier: the wrong order sticks
    assert print_term(fixed.target) == "Find(PerimeterOf(Pentagon(A,B,C,D,E)))"
    assert traces[0].rounds[0].report.verdict == "accepted"


def test_rectify_area_composition(square_circle):
    prose = "Find the area of the shaded region."
    p = problem_of(target="Find(AreaOf(Shaded(Shape($))))", prose=prose)
    client = canned_for(p, square_circle, ["AreaOf(Square(A,B,C,D)) - AreaOf(Circle(O))"])
    fixed, traces = rectify(p, square_circle, client)
    assert print_term(fixed.target) == "Find(Sub(AreaOf(Square(A,B,C,D)),AreaOf(Circle(O))))"
    assert not traces[0].residual


class ConstantClient:
    def __init__(self, reply):
        self.reply = reply

    def complete(self, req):
        return self.reply


def test_rectify_no_third_state(square_circle, pentagon):
    # after rectification a literal either has no $ and passes the verifier,
    # or is explicitly residual
    for diagram, target, client in (
        (square_circle, "Find(AreaOf(Shaded(Shape($))))", ConstantClient("nonsense")),
        (pentagon, "Find(PerimeterOf(Pentagon($)))", ConstantClient("Pentagon(A,B,C,D,E)")),
    ):
        p = problem_of(target=target, prose="x")
        fixed, traces = rectify(p, diagram, client)
        for trace in traces:
            final = trace.final
            if trace.residual:
                assert "$" in print_term(p.literals()[trace.ambiguity.literal_index])
            else:
                assert "$" not in print_term(final)
                assert verify_candidate(final, diagram).verdict in ("accepted", "repaired")


def test_rectify_deterministic_traces(square_circle):
    p = problem_of(target="Find(AreaOf(Shaded(Shape($))))", prose="x")
    client = canned_for(p, square_circle, ["AreaOf(Square(A,B,C,D)) - AreaOf(Circle(O))"])
    runs = []
    for _ in range(2):
        _, traces = rectify(p, square_circle, client)
        runs.append(json.dumps([t.to_jsonable() for t in traces], sort_keys=True))
    assert runs[0] == runs[1]
