# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: bounded simple-cycle enumeration and the
polygon-simplicity scan.  Must stay output-identical to _kernels_py."""

from libc.stdlib cimport malloc, free

BACKEND = "compiled"


def simple_cycles_length(int n, list adjacency, int k):
    """All simple cycles of exactly k vertices; see _kernels_py for the
    canonical-form contract."""
    cdef int total = 0
    cdef int i, j, deg
    for i in range(n):
        total += len(adjacency[i])

    cdef int *indptr = <int *> malloc((n + 1) * sizeof(int))
    cdef int *indices = <int *> malloc((total if total > 0 else 1) * sizeof(int))
    cdef int *path = <int *> malloc((k if k > 0 else 1) * sizeof(int))
    cdef unsigned char *on_path = <unsigned char *> malloc((n if n > 0 else 1))
    cdef int *stack_pos = <int *> malloc(((k + 1) if k > 0 else 1) * sizeof(int))
    if indptr == NULL or indices == NULL or path == NULL or on_path == NULL or stack_pos == NULL:
        raise MemoryError()

    cycles = []
    cdef int start, depth, current, nxt, p
    cdef bint closes
    try:
        indptr[0] = 0
        for i in range(n):
            neigh = adjacency[i]
            deg = len(neigh)
            for j in range(deg):
                indices[indptr[i] + j] = neigh[j]
            indptr[i + 1] = indptr[i] + deg
        for i in range(n):
            on_path[i] = 0

        for start in range(n):
            path[0] = start
            on_path[start] = 1
            depth = 1
            # stack_pos[d] = next neighbor index to try at depth d
            stack_pos[1] = indptr[start]
            while depth >= 1:
                current = path[depth - 1]
                if depth == k:
                    closes = False
                    for p in range(indptr[current], indptr[current + 1]):
                        if indices[p] == start:
                            closes = True
                            break
                    if closes and path[1] < path[k - 1]:
                        cycles.append(tuple([path[j] for j in range(k)]))
                    depth -= 1
                    if depth >= 1:
                        on_path[path[depth]] = 0
                    continue
                p = stack_pos[depth]
                if p >= indptr[current + 1]:
                    depth -= 1
                    if depth >= 1:
                        on_path[path[depth]] = 0
                    continue
                stack_pos[depth] = p + 1
                nxt = indices[p]
                if nxt <= start or on_path[nxt]:
                    continue
                path[depth] = nxt
                on_path[nxt] = 1
                depth += 1
                if depth < k:
                    stack_pos[depth] = indptr[nxt]
            on_path[start] = 0
    finally:
        free(indptr)
        free(indices)
        free(path)
        free(on_path)
        free(stack_pos)

    cycles.sort()
    return cycles


cdef inline double _orient(double ax, double ay, double bx, double by,
                           double cx, double cy) nogil:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


cdef inline bint _on_segment(double ax, double ay, double bx, double by,
                             double px, double py) nogil:
    return (min(ax, bx) <= px <= max(ax, bx)
            and min(ay, by) <= py <= max(ay, by))


cdef bint _segments_intersect(double ax, double ay, double bx, double by,
                              double cx, double cy, double dx, double dy) nogil:
    cdef double d1 = _orient(cx, cy, dx, dy, ax, ay)
    cdef double d2 = _orient(cx, cy, dx, dy, bx, by)
    cdef double d3 = _orient(ax, ay, bx, by, cx, cy)
    cdef double d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
       ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
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


def segments_intersect(double ax, double ay, double bx, double by,
                       double cx, double cy, double dx, double dy):
    """True if closed segments AB and CD share any point."""
    return _segments_intersect(ax, ay, bx, by, cx, cy, dx, dy)


def polygon_is_simple(xs, ys):
    """True if the closed polygon has no repeated vertices and no two
    non-adjacent sides touching or crossing."""
    cdef int k = len(xs)
    cdef int i, j, i2, j2
    if k < 3:
        return False
    cdef double *px = <double *> malloc(k * sizeof(double))
    cdef double *py = <double *> malloc(k * sizeof(double))
    if px == NULL or py == NULL:
        raise MemoryError()
    try:
        for i in range(k):
            px[i] = xs[i]
            py[i] = ys[i]
        for i in range(k):
            for j in range(i + 1, k):
                if px[i] == px[j] and py[i] == py[j]:
                    return False
        for i in range(k):
            i2 = (i + 1) % k
            for j in range(i + 1, k):
                j2 = (j + 1) % k
                if i == j or i2 == j or i == j2:
                    continue
                if _segments_intersect(px[i], py[i], px[i2], py[i2],
                                       px[j], py[j], px[j2], py[j2]):
                    return False
        return True
    finally:
        free(px)
        free(py)
