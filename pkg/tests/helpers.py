"""Reference implementations used to referee the package.

Deliberately built from different primitives than the package (math.dist,
fsum, plain double loops, no numpy) so that agreement is meaningful.
"""
import math


def closed_length_points(points, order):
    k = len(order)
    return math.fsum(
        math.dist(points[order[i]], points[order[(i + 1) % k]]) for i in range(k)
    )


def closed_length_matrix(matrix, order):
    k = len(order)
    return math.fsum(matrix[order[i]][order[(i + 1) % k]] for i in range(k))


def closed_length(inst, order):
    if inst.points is not None:
        return closed_length_points(inst.points, order)
    return closed_length_matrix(inst.distance_matrix().tolist(), order)


def ref_delta(dist, order, edge_pos, point):
    k = len(order)
    a, b = order[edge_pos], order[(edge_pos + 1) % k]
    return dist(point, a) + dist(point, b) - dist(a, b)


def _tie(a, b, rel=1e-9, abs_=1e-12):
    return abs(a - b) <= max(abs_, rel * max(abs(a), abs(b)))


def ref_candidates(dist, order, rem, minimize=True, rel=1e-9, abs_=1e-12):
    """The documented selection, as a plain double loop.

    Score each outside point by its extremal edge (min disturbance when
    minimizing, max otherwise); keep every (edge_pos, point) within tolerance
    of the extremal score across points.
    """
    k = len(order)
    edge_count = 1 if k == 2 else k
    scored = {}
    for p in rem:
        vals = [(ref_delta(dist, order, e, p), e) for e in range(edge_count)]
        inner = min(v for v, _ in vals) if minimize else max(v for v, _ in vals)
        scored[p] = (inner, vals)
    outer_vals = [inner for inner, _ in scored.values()]
    outer = max(outer_vals) if minimize else min(outer_vals)
    out = set()
    for p, (inner, vals) in scored.items():
        if _tie(inner, outer, rel, abs_):
            for v, e in vals:
                if _tie(v, inner, rel, abs_):
                    out.add((e, p))
    return out


def canon(order):
    """Direction- and rotation-free identity of a cycle."""
    seqs = [list(order), list(order)[::-1]]
    best = None
    for seq in seqs:
        for s in range(len(seq)):
            rot = tuple(seq[s:] + seq[:s])
            if best is None or rot < best:
                best = rot
    return best


def shapely_crossing_pairs(points, order):
    """Non-adjacent intersecting edge pairs per shapely, closed segments."""
    from shapely.geometry import LineString

    n = len(order)
    segs = [
        LineString([points[order[i]], points[order[(i + 1) % n]]]) for i in range(n)
    ]
    out = set()
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if segs[i].intersects(segs[j]):
                out.add((i, j))
    return out
