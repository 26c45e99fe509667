"""Pure-Python implementations of the hot kernels.

Mirrors geosolve._kernels (the Cython extension) exactly: same inputs, same
canonical output order.  Used as the fallback when the extension is not built
and as the reference side of the kernel-equivalence tests.
"""

from __future__ import annotations

BACKEND = "pure-python"


def simple_cycles_length(n: int, adjacency: list[list[int]], k: int) -> list[tuple[int, ...]]:
    """All simple cycles of exactly k vertices in an undirected graph.

    ``adjacency[v]`` lists the neighbors of vertex v (0..n-1).  Each cycle is
    reported once, as a tuple starting at its smallest vertex, oriented so the
    second vertex is smaller than the last; the result is sorted.
    """
    cycles: list[tuple[int, ...]] = []
    path = [0] * k
    on_path = [False] * n
    for start in range(n):
        path[0] = start
        on_path[start] = True
        _extend(start, start, 1, k, adjacency, path, on_path, cycles)
        on_path[start] = False
    cycles.sort()
    return cycles


def _extend(start, current, depth, k, adjacency, path, on_path, cycles):
    if depth == k:
        if start in adjacency[current] and path[1] < path[k - 1]:
            cycles.append(tuple(path))
        return
    for nxt in adjacency[current]:
        # Only allow vertices above the start so each cycle has one root.
        if nxt <= start or on_path[nxt]:
            continue
        path[depth] = nxt
        on_path[nxt] = True
        _extend(start, nxt, depth + 1, k, adjacency, path, on_path, cycles)
        on_path[nxt] = False


def _orient(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax, ay, bx, by, px, py) -> bool:
    return (
        min(ax, bx) <= px <= max(ax, bx)
        and min(ay, by) <= py <= max(ay, by)
    )


def segments_intersect(ax, ay, bx, by, cx, cy, dx, dy) -> bool:
    """True if closed segments AB and CD share any point."""
    d1 = _orient(cx, cy, dx, dy, ax, ay)
    d2 = _orient(cx, cy, dx, dy, bx, by)
    d3 = _orient(ax, ay, bx, by, cx, cy)
    d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _on_segment(cx, cy, dx, dy, ax, ay):
        return True
    if d2 == 0 and _on_segment(cx, cy, dx, dy, bx, by):
        return True
    if d3 == 0 and _on_segment(ax, ay, bx, by, cx, cy):
        return True
    if d4 == 0 and _on_segment(ax, ay, bx, by, dx, dy):
        return True
    return False


def polygon_is_simple(xs: list[float], ys: list[float]) -> bool:
    """True if the closed polygon has no repeated vertices and no two
    non-adjacent sides touching or crossing."""
    k = len(xs)
    if k < 3:
        return False
    for i in range(k):
        for j in range(i + 1, k):
            if xs[i] == xs[j] and ys[i] == ys[j]:
                return False
    for i in range(k):
        i2 = (i + 1) % k
        for j in range(i + 1, k):
            j2 = (j + 1) % k
            if i == j or i2 == j or i == j2:
                continue
            if segments_intersect(
                xs[i], ys[i], xs[i2], ys[i2], xs[j], ys[j], xs[j2], ys[j2]
            ):
                return False
    return True
