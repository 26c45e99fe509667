#!/usr/bin/env python3
"""Regenerate the bundled 20-problem corpus (manifest + diagram files).

Every problem's diagram coordinates are computed here analytically, so the
gold answer is backed by an independent coordinate-geometry derivation; the
acceptance suite re-checks solver bindings against these coordinates.

Run from the repository root:  python scripts/make_corpus.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "src" / "geosolve" / "data" / "corpus"
DIAGRAMS = CORPUS / "diagrams"

PI = math.pi


def diagram(name, points, segments=(), collinear=(), circles=(), relations=(), image=None):
    data = {
        "points": [{"name": n, "x": x, "y": y} for n, x, y in points],
        "segments": [list(s) for s in segments],
        "collinear": [list(g) for g in collinear],
        "circles": [
            {"center": c[0], "radius": c[1], "on_circle": list(c[2])} for c in circles
        ],
        "relations": list(relations),
    }
    if image:
        data["image"] = image
    DIAGRAMS.joinpath(f"{name}.json").write_text(json.dumps(data, indent=2) + "\n")


def problem(id, prose, answer, options, question_type, shape):
    return {
        "id": id,
        "prose": prose,
        "diagram": f"diagrams/{id}.json",
        "answer": answer,
        "options": options,
        "question_type": question_type,
        "shape": shape,
    }


manifest = []

# -- p01: right triangle, Pythagoras ----------------------------------------
diagram(
    "p01_right_triangle",
    [("A", 0.0, 75.0), ("B", 0.0, 0.0), ("C", 100.0, 0.0)],
    segments=[("A", "B"), ("B", "C"), ("C", "A")],
)
manifest.append(
    problem(
        "p01_right_triangle",
        "In triangle ABC, AB = 3 and BC = 4. AB is perpendicular to BC. "
        "Find the length of AC.",
        5.0,
        [3.0, 4.0, 5.0, 6.0],
        "Length",
        "Triangle",
    )
)

# -- p02: square with inscribed circle, shaded area (spec's bundled sample) --
diagram(
    "square_circle",
    [("A", 0.0, 0.0), ("B", 100.0, 0.0), ("C", 100.0, 100.0), ("D", 0.0, 100.0),
     ("O", 50.0, 50.0)],
    segments=[("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")],
    circles=[("O", 50.0, [])],
)
manifest.append(
    problem(
        "square_circle",
        "ABCD is a square. AB = 2. Circle O is inscribed in the square. "
        "The radius of circle O is 1. Find the area of the shaded region.",
        4.0 - PI,
        [round(4.0 - PI, 3), round(PI, 3), 2.0, 4.0],
        "Area",
        "Circle",
    )
)

# -- p03: pentagon named out of boundary order (the repair fixture) ---------
# Regular pentagon, radius 100, labeled so the boundary cycle is A-B-D-E-C.
_pent = {}
for label, angle_deg in (("A", 90), ("B", 162), ("D", 234), ("E", 306), ("C", 18)):
    theta = math.radians(angle_deg)
    _pent[label] = (100.0 * math.cos(theta), 100.0 * math.sin(theta))
diagram(
    "pentagon",
    [(k, *v) for k, v in sorted(_pent.items())],
    segments=[("A", "B"), ("B", "D"), ("D", "E"), ("E", "C"), ("C", "A")],
)
manifest.append(
    problem(
        "pentagon",
        "AB = 2. BD = 2. DE = 2. EC = 2. CA = 2. "
        "Find the perimeter of the pentagon.",
        10.0,
        [8.0, 10.0, 12.0, 14.0],
        "Length",
        "Other",
    )
)

# -- p04: altitude of an unnamed figure, solve for x -------------------------
_h = 100.0 * math.tan(math.radians(50.0))
diagram(
    "p04_altitude",
    [("A", 0.0, 0.0), ("B", 260.0, 0.0), ("P", 100.0, 0.0), ("C", 100.0, _h)],
    segments=[("C", "A"), ("C", "B"), ("C", "P")],
    collinear=[("A", "P", "B")],
)
manifest.append(
    problem(
        "p04_altitude",
        "CP is an altitude of the figure. The measure of angle CAP is 50 degrees. "
        "The measure of angle ACP is x degrees. Find x.",
        40.0,
        [25.0, 40.0, 50.0, 65.0],
        "Angle",
        "Triangle",
    )
)

# -- p05: angle in a semicircle ----------------------------------------------
_b = math.radians(60.0)
diagram(
    "p05_semicircle",
    [("A", -100.0, 0.0), ("B", 100.0 * math.cos(_b), 100.0 * math.sin(_b)),
     ("C", 100.0, 0.0), ("O", 0.0, 0.0)],
    segments=[("A", "B"), ("B", "C"), ("A", "C")],
    collinear=[("A", "O", "C")],
    circles=[("O", 100.0, ["A", "B", "C"])],
)
manifest.append(
    problem(
        "p05_semicircle",
        "AC is a diameter of circle O. The measure of angle BAC is 30 degrees. "
        "Find the measure of angle BCA.",
        60.0,
        [30.0, 45.0, 60.0, 90.0],
        "Angle",
        "Circle",
    )
)

# -- p06: alternate interior angles ------------------------------------------
_t = 100.0 / math.tan(math.radians(70.0))
diagram(
    "p06_parallel",
    [("A", 0.0, 100.0), ("B", 200.0, 100.0), ("C", _t, 0.0), ("D", _t - 200.0, 0.0)],
    segments=[("A", "B"), ("C", "D"), ("A", "C")],
)
manifest.append(
    problem(
        "p06_parallel",
        "AB is parallel to CD. The measure of angle BAC is 70 degrees. "
        "Find the measure of angle ACD.",
        70.0,
        [20.0, 70.0, 110.0, 160.0],
        "Angle",
        "Line",
    )
)

# -- p07: vertical angles ------------------------------------------------------
def _at(deg):
    return (100.0 * math.cos(math.radians(deg)), 100.0 * math.sin(math.radians(deg)))

_a = _at(162.5)
_b2 = _at(197.5)
diagram(
    "p07_vertical",
    [("A", *_a), ("B", *_b2), ("C", -_a[0], -_a[1]), ("D", -_b2[0], -_b2[1]),
     ("E", 0.0, 0.0)],
    collinear=[("A", "E", "C"), ("B", "E", "D")],
)
manifest.append(
    problem(
        "p07_vertical",
        "The measure of angle AEB is 35 degrees. Find the measure of angle CED.",
        35.0,
        [35.0, 55.0, 145.0, 180.0],
        "Angle",
        "Line",
    )
)

# -- p08: linear pair ----------------------------------------------------------
_d = _at(62.0)
diagram(
    "p08_linear_pair",
    [("A", -100.0, 0.0), ("B", 0.0, 0.0), ("C", 100.0, 0.0), ("D", *_d)],
    segments=[("B", "D")],
    collinear=[("A", "B", "C")],
)
manifest.append(
    problem(
        "p08_linear_pair",
        "The measure of angle ABD is 118 degrees. Find the measure of angle DBC.",
        62.0,
        [28.0, 62.0, 118.0, 152.0],
        "Angle",
        "Line",
    )
)

# -- p09: midpoint -------------------------------------------------------------
diagram(
    "p09_midpoint",
    [("A", 0.0, 0.0), ("M", 100.0, 0.0), ("B", 200.0, 0.0)],
    collinear=[("A", "M", "B")],
)
manifest.append(
    problem(
        "p09_midpoint",
        "M is the midpoint of AB. AM = 4. Find the length of AB.",
        8.0,
        [2.0, 4.0, 8.0, 16.0],
        "Length",
        "Line",
    )
)

# -- p10: similar triangles, find a side ----------------------------------------
_c10 = (400.0 + 600.0 * math.cos(math.radians(80.0)), 600.0 * math.sin(math.radians(80.0)))
_f10 = (900.0 + _c10[0] / 2.0, _c10[1] / 2.0)
diagram(
    "p10_similar",
    [("A", 0.0, 0.0), ("B", 400.0, 0.0), ("C", *_c10),
     ("D", 900.0, 0.0), ("E", 1100.0, 0.0), ("F", *_f10)],
    segments=[("A", "B"), ("B", "C"), ("C", "A"), ("D", "E"), ("E", "F"), ("F", "D")],
)
manifest.append(
    problem(
        "p10_similar",
        "Triangle ABC is similar to triangle DEF. AB = 4. BC = 6. DE = 2. "
        "Find the length of EF.",
        3.0,
        [2.0, 3.0, 6.0, 9.0],
        "Length",
        "Triangle",
    )
)

# -- p11: ratio of similar sides -------------------------------------------------
diagram(
    "p11_ratio",
    [("A", 0.0, 0.0), ("B", 600.0, 0.0), ("C", 300.0, 450.0),
     ("D", 900.0, 0.0), ("E", 1100.0, 0.0), ("F", 1000.0, 150.0)],
    segments=[("A", "B"), ("B", "C"), ("C", "A"), ("D", "E"), ("E", "F"), ("F", "D")],
)
manifest.append(
    problem(
        "p11_ratio",
        "Triangle ABC is similar to triangle DEF. AB = 6. DE = 2. "
        "Find the ratio of AB to DE.",
        3.0,
        [2.0, 3.0, 4.0, 6.0],
        "Ratio",
        "Triangle",
    )
)

# -- p12: congruent triangles ----------------------------------------------------
diagram(
    "p12_congruent",
    [("A", 0.0, 0.0), ("B", 700.0, 0.0), ("C", 300.0, 400.0),
     ("D", 900.0, 100.0), ("E", 1600.0, 100.0), ("F", 1200.0, 500.0)],
    segments=[("A", "B"), ("B", "C"), ("C", "A"), ("D", "E"), ("E", "F"), ("F", "D")],
)
manifest.append(
    problem(
        "p12_congruent",
        "Triangle ABC is congruent to triangle DEF. AB = 7. Find the length of DE.",
        7.0,
        [3.5, 7.0, 14.0, 21.0],
        "Length",
        "Triangle",
    )
)

# -- p13: isosceles base angles ---------------------------------------------------
diagram(
    "p13_isosceles",
    [("A", 0.0, 50.0 * math.tan(math.radians(70.0))), ("B", -50.0, 0.0), ("C", 50.0, 0.0)],
    segments=[("A", "B"), ("B", "C"), ("C", "A")],
)
manifest.append(
    problem(
        "p13_isosceles",
        "In triangle ABC, AB = AC. The measure of angle ABC is 70 degrees. "
        "Find the measure of angle BCA.",
        70.0,
        [40.0, 55.0, 70.0, 110.0],
        "Angle",
        "Triangle",
    )
)

# -- p14: equilateral --------------------------------------------------------------
diagram(
    "p14_equilateral",
    [("A", 0.0, 0.0), ("B", 600.0, 0.0), ("C", 300.0, 300.0 * math.sqrt(3.0))],
    segments=[("A", "B"), ("B", "C"), ("C", "A")],
)
manifest.append(
    problem(
        "p14_equilateral",
        "In triangle ABC, AB = BC and BC = CA. Find the measure of angle ABC.",
        60.0,
        [30.0, 45.0, 60.0, 90.0],
        "Angle",
        "Triangle",
    )
)

# -- p15: tangent line --------------------------------------------------------------
_ax = -100.0 / math.tan(math.radians(32.0))
diagram(
    "p15_tangent",
    [("A", _ax, 100.0), ("B", 0.0, 100.0), ("O", 0.0, 0.0)],
    segments=[("A", "B"), ("O", "B"), ("O", "A")],
    circles=[("O", 100.0, ["B"])],
)
manifest.append(
    problem(
        "p15_tangent",
        "AB is tangent to circle O at B. The measure of angle BAO is 32 degrees. "
        "Find the measure of angle AOB.",
        58.0,
        [32.0, 58.0, 90.0, 122.0],
        "Angle",
        "Circle",
    )
)

# -- p16: radius reaches every on-circle point ----------------------------------------
diagram(
    "p16_radius",
    [("O", 0.0, 0.0), ("P", 100.0, 0.0)],
    segments=[("O", "P")],
    circles=[("O", 100.0, ["P"])],
)
manifest.append(
    problem(
        "p16_radius",
        "The radius of circle O is 5. Find the length of OP.",
        5.0,
        [2.5, 5.0, 10.0, 25.0],
        "Length",
        "Circle",
    )
)

# -- p17: rectangle minus circle (shaded) -----------------------------------------------
diagram(
    "p17_rect_shaded",
    [("A", 0.0, 0.0), ("B", 400.0, 0.0), ("C", 400.0, 300.0), ("D", 0.0, 300.0),
     ("O", 200.0, 150.0)],
    segments=[("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")],
    circles=[("O", 100.0, [])],
)
manifest.append(
    problem(
        "p17_rect_shaded",
        "ABCD is a rectangle. AB = 4. BC = 3. The radius of circle O is 1. "
        "Find the area of the shaded region.",
        12.0 - PI,
        [round(12.0 - PI, 3), round(PI, 3), 12.0, 15.0],
        "Area",
        "Quad",
    )
)

# -- p18: area of an unnamed figure ------------------------------------------------------
diagram(
    "p18_rect_area",
    [("A", 0.0, 0.0), ("B", 600.0, 0.0), ("C", 600.0, 400.0), ("D", 0.0, 400.0)],
    segments=[("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")],
)
manifest.append(
    problem(
        "p18_rect_area",
        "ABCD is a rectangle. AB = 6. BC = 4. Find the area of the figure.",
        24.0,
        [10.0, 20.0, 24.0, 48.0],
        "Area",
        "Quad",
    )
)

# -- p19: sector area ----------------------------------------------------------------------
diagram(
    "p19_sector",
    [("O", 0.0, 0.0), ("A", 100.0, 0.0), ("B", 0.0, 100.0)],
    segments=[("O", "A"), ("O", "B")],
    circles=[("O", 100.0, ["A", "B"])],
)
manifest.append(
    problem(
        "p19_sector",
        "The radius of circle O is 4. The measure of angle AOB is 90 degrees. "
        "Find the area of sector AOB.",
        4.0 * PI,
        [round(2.0 * PI, 3), round(4.0 * PI, 3), round(8.0 * PI, 3), round(16.0 * PI, 3)],
        "Area",
        "Circle",
    )
)

# -- p20: perimeter of an unnamed square ------------------------------------------------------
diagram(
    "p20_square_perimeter",
    [("A", 0.0, 0.0), ("B", 300.0, 0.0), ("C", 300.0, 300.0), ("D", 0.0, 300.0)],
    segments=[("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")],
)
manifest.append(
    problem(
        "p20_square_perimeter",
        "ABCD is a square. AB = 3. Find the perimeter of the square.",
        12.0,
        [6.0, 9.0, 12.0, 15.0],
        "Length",
        "Quad",
    )
)


def main() -> None:
    DIAGRAMS.mkdir(parents=True, exist_ok=True)
    CORPUS.joinpath("manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(manifest)} problems to {CORPUS}")


if __name__ == "__main__":
    main()
