#!/usr/bin/env python3
"""Regenerate the bundled canned stores for hermetic corpus runs.

* rectifier_replies.json  — one reply per rectifier prompt: point/shape
  placeholders answered by the offline heuristic, shaded-area compositions
  authored below.
* predictor_schedules.json — minimal correct theorem schedules per problem.

Keys are SHA-256 over system+user, so this script must be re-run whenever
prompt templates, the corpus, or the theorem library change; a test compares
its output against the committed files.

Run from the repository root:  python scripts/make_canned.py
"""

from __future__ import annotations

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CANNED = ROOT / "src" / "geosolve" / "data" / "canned"
MANIFEST = ROOT / "src" / "geosolve" / "data" / "corpus" / "manifest.json"

# Shaded regions, authored per problem (outer area minus the hole).
AREA_COMPOSITIONS = {
    "square_circle": "AreaOf(Square(A,B,C,D)) - AreaOf(Circle(O))",
    "p17_rect_shaded": "AreaOf(Rectangle(A,B,C,D)) - AreaOf(Circle(O))",
}

# Minimal correct theorem order per problem (hand-derived).
SCHEDULES = {
    "p01_right_triangle": "pythagorean",
    "square_circle": "area_formulas",
    "pentagon": "perimeter_formulas",
    "p04_altitude": "altitude_right_angle, triangle_angle_sum",
    "p05_semicircle": "inscribed_angle_half_arc, triangle_angle_sum",
    "p06_parallel": "parallel_alternate_angles",
    "p07_vertical": "vertical_angles",
    "p08_linear_pair": "linear_pair",
    "p09_midpoint": "midpoint_halves",
    "p10_similar": "similar_triangle_ratio",
    "p11_ratio": "similar_triangle_ratio",
    "p12_congruent": "congruent_triangle_sides",
    "p13_isosceles": "isosceles_base_angles",
    "p14_equilateral": "equilateral_all_60",
    "p15_tangent": "tangent_perpendicular_radius, triangle_angle_sum",
    "p16_radius": "circle_radius_equal",
    "p17_rect_shaded": "area_formulas",
    "p18_rect_area": "area_formulas",
    "p19_sector": "area_formulas",
    "p20_square_perimeter": "perimeter_formulas",
}


def build_stores() -> tuple[dict[str, str], dict[str, str]]:
    """(rectifier store, predictor store), both key -> reply."""
    from geosolve.clients import HeuristicClient, ModelRequest, request_key
    from geosolve.diagram import load_diagram
    from geosolve.disambig import rectify
    from geosolve.engine import SYSTEM_PREDICTOR, _predictor_prompt
    from geosolve.harness import load_manifest
    from geosolve.rules import default_library

    library = default_library()
    rectifier_store: dict[str, str] = {}
    predictor_store: dict[str, str] = {}

    for record in load_manifest(MANIFEST):
        diagram = load_diagram(MANIFEST.parent / record.diagram)
        composition = AREA_COMPOSITIONS.get(record.id)

        class OracleClient(HeuristicClient):
            def complete(self, req: ModelRequest) -> str:
                reply = super().complete(req)
                if reply == "NoHeuristicForAreas" and composition is not None:
                    reply = composition
                rectifier_store[request_key(req)] = reply
                return reply

        from geosolve.textparse import parse_text

        problem = parse_text(record.prose)
        resolved, traces = rectify(problem, diagram, OracleClient(diagram))
        residual = [t for t in traces if t.residual]
        if residual:
            raise SystemExit(f"{record.id}: unresolved ambiguity; fix the corpus")

        prompt = _predictor_prompt(resolved, diagram, library, None)
        key = request_key(ModelRequest(system=SYSTEM_PREDICTOR, user=prompt))
        predictor_store[key] = SCHEDULES[record.id]

    return rectifier_store, predictor_store


def main() -> None:
    from geosolve.clients import save_store

    rectifier_store, predictor_store = build_stores()
    CANNED.mkdir(parents=True, exist_ok=True)
    save_store(CANNED / "rectifier_replies.json", rectifier_store)
    save_store(CANNED / "predictor_schedules.json", predictor_store)
    print(
        f"wrote {len(rectifier_store)} rectifier replies and "
        f"{len(predictor_store)} schedules to {CANNED}"
    )


if __name__ == "__main__":
    main()
