import json
from pathlib import Path

import pytest

from geosolve.diagram import DiagramParse, load_diagram

DATA = Path(__file__).resolve().parent.parent / "src" / "geosolve" / "data"
CORPUS = DATA / "corpus"
CANNED = DATA / "canned"


@pytest.fixture(scope="session")
def manifest_path() -> Path:
    return CORPUS / "manifest.json"


@pytest.fixture(scope="session")
def rectifier_store_path() -> Path:
    return CANNED / "rectifier_replies.json"


@pytest.fixture(scope="session")
def predictor_store_path() -> Path:
    return CANNED / "predictor_schedules.json"


@pytest.fixture(scope="session")
def square_circle() -> DiagramParse:
    return load_diagram(CORPUS / "diagrams" / "square_circle.json")


@pytest.fixture(scope="session")
def pentagon() -> DiagramParse:
    return load_diagram(CORPUS / "diagrams" / "pentagon.json")


@pytest.fixture()
def write_diagram(tmp_path):
    """Write a diagram dict to a temp file and return its path."""

    def _write(data: dict, name: str = "diagram.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return _write


def graph_of(edges: list[tuple[str, str]], coords: dict[str, tuple[float, float]] | None = None):
    """Build a DiagramGraph directly from an edge list (test shorthand)."""
    from geosolve.diagram import DiagramGraph

    adjacency: dict[str, set[str]] = {}
    for a, b in edges:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    if coords is None:
        coords = {}
    for name in coords:
        adjacency.setdefault(name, set())
    return DiagramGraph(
        adjacency={k: frozenset(v) for k, v in adjacency.items()},
        coordinates=dict(coords),
    )
