"""Tour construction by recurrent extremal insertion, for min- and max-length
objectives.

The route starts from an extremal pair (farthest for MIN_TOUR, nearest for
MAX_TOUR) plus the extremal-perimeter third point, then grows one point per
step.  For MIN_TOUR each outside point is scored by its cheapest edge (the
minimum disturbance

    delta(edge (a, b), p) = d(p, a) + d(p, b) - d(a, b)

over current edge positions) and the step commits a point whose cheapest
insertion is most expensive, at that edge; MAX_TOUR flips both directions.
Every step's tie set is exposed, and branching modes decide what happens on
ties: PURE takes the lexicographically smallest (edge_pos, point), FULL
explores every branch breadth-first, PRUNED keeps only branches whose
intermediate length ties the extreme (longest for MIN_TOUR, shortest for
MAX_TOUR).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .instance import Instance

__all__ = [
    "Objective",
    "Branching",
    "SolverConfig",
    "Tour",
    "Candidate",
    "BranchNode",
    "SolveResult",
    "BranchCapExceeded",
    "init_pair",
    "init_third",
    "insertion_delta",
    "select_candidates",
    "pure_tie_break",
    "insert",
    "solve",
]


class Objective(enum.Enum):
    MIN_TOUR = "min"
    MAX_TOUR = "max"


class Branching(enum.Enum):
    PURE = "pure"
    FULL = "full"
    PRUNED = "pruned"


@dataclass(frozen=True)
class SolverConfig:
    objective: Objective = Objective.MIN_TOUR
    branching: Branching = Branching.PURE
    tie_rel_tol: float = 1e-9
    tie_abs_tol: float = 1e-12
    branch_cap: int = 10_000
    count_deltas: bool = True

    def __post_init__(self):
        if self.tie_rel_tol < 0 or self.tie_abs_tol < 0:
            raise ValueError("tie tolerances must be non-negative")
        if self.branch_cap < 1:
            raise ValueError("branch_cap must be at least 1")


class Tour:
    """A closed partial route; ``order`` wraps around.

    A size-2 route is the doubled single edge: its length counts that edge
    twice and it exposes exactly one insertable edge position.
    """

    __slots__ = ("order", "length", "member_mask")

    def __init__(self, order, length, member_mask):
        self.order = list(order)
        self.length = float(length)
        self.member_mask = member_mask

    @classmethod
    def from_order(cls, inst: Instance, order: Sequence[int]) -> "Tour":
        k, n = len(order), inst.n
        o = np.asarray(order, dtype=np.intp)
        if k < 2:
            raise ValueError("a tour needs at least 2 points")
        if o.size and (o.min() < 0 or o.max() >= n):
            raise ValueError("order contains out-of-range point ids")
        mask = np.zeros(n, dtype=bool)
        mask[o] = True
        if int(mask.sum()) != k:
            raise ValueError("order contains duplicate point ids")
        d = inst.distance_matrix()
        length = float(d[o, np.roll(o, -1)].sum())
        return cls(o.tolist(), length, mask)

    @property
    def size(self) -> int:
        return len(self.order)

    @property
    def edge_count(self) -> int:
        return 1 if len(self.order) == 2 else len(self.order)

    def __repr__(self):
        return f"Tour(order={self.order}, length={self.length!r})"


@dataclass(frozen=True)
class Candidate:
    """One admissible insertion: ``point`` goes after position ``edge_pos``."""

    edge_pos: int
    point: int
    delta: float


@dataclass
class BranchNode:
    """A live branch of the tie tree.

    ``spawned_from`` records the tie set the parent branched on: () when the
    parent step was unique, otherwise the tied choices — (i, j) point pairs at
    the opening stage, ``(0, point)`` at the third-point stage, and
    ``(edge_pos, point)`` afterwards.
    """

    tour: Tour
    depth: int
    spawned_from: tuple = ()
    _rem: Optional[np.ndarray] = field(default=None, repr=False)
    _m: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class SolveResult:
    best_tour: Tour
    delta_evals: int
    branch_events: int
    max_live_branches: int
    pruned_branches: int
    dedup_merges: int
    truncated: bool = False
    all_leaves: Optional[list] = None


class BranchCapExceeded(RuntimeError):
    """FULL-mode frontier hit ``branch_cap``; carries the truncated result."""

    def __init__(self, result: SolveResult):
        super().__init__(
            f"branch cap hit; best leaf found has length {result.best_tour.length!r}"
        )
        self.result = result


def _tie_mask(values: np.ndarray, target: float, rel: float, abs_: float) -> np.ndarray:
    """|v - target| <= max(abs_tol, rel_tol * max(|v|, |target|)), elementwise."""
    scale = np.maximum(np.abs(values), abs(target))
    return np.abs(values - target) <= np.maximum(abs_, rel * scale)


def init_pair(
    inst: Instance,
    objective: Objective = Objective.MIN_TOUR,
    *,
    tie_rel_tol: float = 1e-9,
    tie_abs_tol: float = 1e-12,
) -> list:
    """Opening pair(s): farthest for MIN_TOUR, nearest for MAX_TOUR.

    Returns every (i, j), i < j, tying the extreme within tolerance, sorted.
    """
    n = inst.n
    if n < 2:
        raise ValueError("init_pair needs n >= 2")
    d = inst.distance_matrix()
    iu, ju = np.triu_indices(n, k=1)
    vals = d[iu, ju]
    target = float(vals.max() if objective is Objective.MIN_TOUR else vals.min())
    tied = _tie_mask(vals, target, tie_rel_tol, tie_abs_tol)
    return sorted(zip(iu[tied].tolist(), ju[tied].tolist()))


def init_third(
    inst: Instance,
    pair: Sequence[int],
    objective: Objective = Objective.MIN_TOUR,
    *,
    tie_rel_tol: float = 1e-9,
    tie_abs_tol: float = 1e-12,
) -> list:
    """Third point(s) by extremal triangle perimeter over the opening pair.

    MIN_TOUR maximizes the perimeter, MAX_TOUR minimizes it.  Returns all tied
    point ids, ascending.
    """
    n = inst.n
    i, j = int(pair[0]), int(pair[1])
    if n < 3:
        raise ValueError("init_third needs n >= 3")
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"bad pair ({i}, {j})")
    d = inst.distance_matrix()
    rem = np.setdiff1d(np.arange(n), [i, j])
    per = d[i, rem] + d[j, rem] + d[i, j]
    target = float(per.max() if objective is Objective.MIN_TOUR else per.min())
    tied = _tie_mask(per, target, tie_rel_tol, tie_abs_tol)
    return [int(p) for p in rem[tied]]


def insertion_delta(inst: Instance, tour: Tour, edge_pos: int, point: int) -> float:
    """Disturbance of inserting ``point`` into the edge at ``edge_pos``."""
    k = tour.size
    if not (0 <= edge_pos < tour.edge_count):
        raise ValueError(f"edge_pos {edge_pos} out of range for a size-{k} tour")
    if not (0 <= point < inst.n):
        raise ValueError(f"point id {point} out of range")
    if tour.member_mask[point]:
        raise ValueError(f"point {point} is already on the tour")
    a = tour.order[edge_pos]
    b = tour.order[(edge_pos + 1) % k]
    return inst.distance(point, a) + inst.distance(point, b) - inst.distance(a, b)


def _delta_matrix(m: np.ndarray, d: np.ndarray, oa: np.ndarray) -> np.ndarray:
    """Disturbances for all (edge position, outside point) pairs.

    ``m`` holds d[order, rem]; rows follow the tour order.  Result is
    edge_count x len(rem).
    """
    if len(oa) == 2:
        return (m[0] + m[1] - d[oa[0], oa[1]])[None, :]
    el = d[oa, np.roll(oa, -1)]
    t = np.empty_like(m)
    np.add(m[:-1], m[1:], out=t[:-1])
    np.add(m[-1], m[0], out=t[-1])
    t -= el[:, None]
    return t


def _extract(t, rem, objective, rel, abs_):
    """Tied (Candidate, rem column) pairs for one step, sorted by (edge, point)."""
    if objective is Objective.MIN_TOUR:
        inner = t.min(axis=0)
        outer = float(inner.max())
    else:
        inner = t.max(axis=0)
        outer = float(inner.min())
    picks = []
    for c in np.flatnonzero(_tie_mask(inner, outer, rel, abs_)):
        col = t[:, c]
        for e in np.flatnonzero(_tie_mask(col, float(inner[c]), rel, abs_)):
            picks.append((Candidate(int(e), int(rem[c]), float(col[e])), int(c)))
    picks.sort(key=lambda pc: (pc[0].edge_pos, pc[0].point))
    return picks


def select_candidates(
    inst: Instance,
    tour: Tour,
    remaining: Optional[Sequence[int]] = None,
    objective: Objective = Objective.MIN_TOUR,
    *,
    tie_rel_tol: float = 1e-9,
    tie_abs_tol: float = 1e-12,
) -> list:
    """All insertions achieving this step's extremal disturbance.

    Scores every outside point by its extremal edge (min disturbance for
    MIN_TOUR, max for MAX_TOUR) and returns each (edge_pos, point) pair tying
    the extreme of those scores within tolerance, sorted by (edge_pos, point).
    ``remaining`` defaults to all points off the tour and must not overlap it.
    """
    n = inst.n
    if remaining is None:
        rem = np.flatnonzero(~tour.member_mask)
    else:
        rem = np.asarray(sorted(int(p) for p in remaining), dtype=np.intp)
        if rem.size and (rem[0] < 0 or rem[-1] >= n):
            raise ValueError("remaining contains out-of-range point ids")
        if np.unique(rem).size != rem.size:
            raise ValueError("remaining contains duplicates")
        if tour.member_mask[rem].any():
            raise ValueError("remaining overlaps the tour")
    if rem.size == 0:
        raise ValueError("no points left to insert")
    d = inst.distance_matrix()
    oa = np.asarray(tour.order, dtype=np.intp)
    t = _delta_matrix(d[np.ix_(oa, rem)], d, oa)
    return [cand for cand, _ in _extract(t, rem, objective, tie_rel_tol, tie_abs_tol)]


def pure_tie_break(candidates: Sequence[Candidate]) -> Candidate:
    """Deterministic pick: lexicographically smallest (edge_pos, point)."""
    if not candidates:
        raise ValueError("empty candidate list")
    return min(candidates, key=lambda c: (c.edge_pos, c.point))


def insert(tour: Tour, candidate: Candidate, inst: Optional[Instance] = None) -> Tour:
    """New tour with the candidate applied; the length updates by delta.

    Rejects stale candidates: out-of-range edge positions, points already on
    the tour, and (when ``inst`` is given) deltas that no longer match the
    edge they name.
    """
    e, p = candidate.edge_pos, candidate.point
    if not (0 <= e < tour.edge_count):
        raise ValueError(f"stale candidate: edge_pos {e} out of range")
    if not (0 <= p < len(tour.member_mask)):
        raise ValueError(f"stale candidate: point id {p} out of range")
    if tour.member_mask[p]:
        raise ValueError(f"stale candidate: point {p} already on the tour")
    if inst is not None:
        ref = insertion_delta(inst, tour, e, p)
        if abs(ref - candidate.delta) > max(1e-12, 1e-9 * abs(ref)):
            raise ValueError("stale candidate: delta does not match this tour")
    mask = tour.member_mask.copy()
    mask[p] = True
    order = tour.order[: e + 1] + [p] + tour.order[e + 1 :]
    return Tour(order, tour.length + candidate.delta, mask)


# --------------------------------------------------------------------------
# engine


def _canonical(order):
    """Cycle identity: lexicographically smallest rotation over both directions."""
    best = None
    for seq in (order, order[::-1]):
        for s in range(len(seq)):
            rot = tuple(seq[s:] + seq[:s])
            if best is None or rot < best:
                best = rot
    return best


def _dedup(nodes):
    seen = {}
    for node in nodes:
        key = _canonical(node.tour.order)
        if key not in seen:
            seen[key] = node
    return list(seen.values()), len(nodes) - len(seen)


def _prune(nodes, objective, rel, abs_):
    lengths = np.array([node.tour.length for node in nodes])
    target = float(lengths.max() if objective is Objective.MIN_TOUR else lengths.min())
    keep = _tie_mask(lengths, target, rel, abs_)
    kept = [node for node, k in zip(nodes, keep) if k]
    return kept, len(nodes) - len(kept)


def _child(node, cand, col, m, d, keep_m):
    tour = node.tour
    mask = tour.member_mask.copy()
    mask[cand.point] = True
    order = tour.order[: cand.edge_pos + 1] + [cand.point] + tour.order[cand.edge_pos + 1 :]
    t2 = Tour(order, tour.length + cand.delta, mask)
    rem2 = np.delete(node._rem, col)
    m2 = None
    if keep_m:
        m2 = np.insert(np.delete(m, col, axis=1), cand.edge_pos + 1, d[cand.point][rem2], axis=0)
    return t2, rem2, m2


def _best_leaf(leaves, objective):
    if objective is Objective.MIN_TOUR:
        target = min(t.length for t in leaves)
    else:
        target = max(t.length for t in leaves)
    return min((t for t in leaves if t.length == target), key=lambda t: t.order)


def solve(inst: Instance, config: Optional[SolverConfig] = None) -> SolveResult:
    """Construct a tour per the configured objective and branching mode.

    ``delta_evals`` counts one unit per (edge, point) disturbance evaluated,
    summed over all explored branches; the third-point stage is charged
    2*(n-2), one per directed edge of the two-point route, and the opening
    pair scan is not charged.  On a tie-free run this totals
    (n^3 - n)/6 - (n - 1).  ``branch_events`` counts steps whose tie set had
    more than one member, in every mode.  FULL raises BranchCapExceeded (with
    the truncated result attached) if the frontier ever exceeds
    ``branch_cap``; PRUNED trims silently and sets ``truncated``.
    """
    if config is None:
        config = SolverConfig()
    n = inst.n
    if n < 2:
        raise ValueError("solve needs n >= 2")
    d = inst.distance_matrix()
    objective, rel, abs_ = config.objective, config.tie_rel_tol, config.tie_abs_tol
    pure = config.branching is Branching.PURE
    pruned = config.branching is Branching.PRUNED
    full = config.branching is Branching.FULL

    delta_evals = 0
    branch_events = 0
    pruned_branches = 0
    dedup_merges = 0
    truncated = False

    pairs = init_pair(inst, objective, tie_rel_tol=rel, tie_abs_tol=abs_)
    if len(pairs) > 1:
        branch_events += 1
    spawned = tuple(pairs) if len(pairs) > 1 else ()
    if pure:
        pairs = pairs[:1]
    frontier = []
    all_ids = np.arange(n, dtype=np.intp)
    for i, j in pairs:
        mask = np.zeros(n, dtype=bool)
        mask[[i, j]] = True
        tour = Tour([i, j], 2.0 * float(d[i, j]), mask)
        frontier.append(
            BranchNode(tour, 2, spawned, _rem=np.setdiff1d(all_ids, [i, j]), _m=None)
        )
    max_live = len(frontier)

    if n > 2:
        # third point: extremal perimeter over the opening pair
        nxt = []
        for node in frontier:
            i, j = node.tour.order
            thirds = init_third(inst, (i, j), objective, tie_rel_tol=rel, tie_abs_tol=abs_)
            if config.count_deltas:
                delta_evals += 2 * (n - 2)
            if len(thirds) > 1:
                branch_events += 1
            spawned = tuple((0, p) for p in thirds) if len(thirds) > 1 else ()
            if pure:
                thirds = thirds[:1]
            for p in thirds:
                cand = Candidate(0, p, float(d[p, i] + d[p, j] - d[i, j]))
                col = int(np.searchsorted(node._rem, p))
                t2, rem2, _ = _child(node, cand, col, None, d, keep_m=False)
                nxt.append(BranchNode(t2, 3, spawned, _rem=rem2, _m=None))
        frontier = nxt
        if not pure:
            frontier, merged = _dedup(frontier)
            dedup_merges += merged
            if pruned:
                frontier, dropped = _prune(frontier, objective, rel, abs_)
                pruned_branches += dropped
            if len(frontier) > config.branch_cap:
                frontier = frontier[: config.branch_cap]
                truncated = True
        max_live = max(max_live, len(frontier))

        keep_m = pure  # single-path runs keep the gather matrix warm
        for depth in range(3, n):
            nxt = []
            for node in frontier:
                oa = np.asarray(node.tour.order, dtype=np.intp)
                m = node._m if node._m is not None else d[np.ix_(oa, node._rem)]
                t = _delta_matrix(m, d, oa)
                if config.count_deltas:
                    delta_evals += t.size
                picks = _extract(t, node._rem, objective, rel, abs_)
                if len(picks) > 1:
                    branch_events += 1
                spawned = (
                    tuple((c.edge_pos, c.point) for c, _ in picks) if len(picks) > 1 else ()
                )
                if pure:
                    picks = picks[:1]
                for cand, col in picks:
                    t2, rem2, m2 = _child(node, cand, col, m, d, keep_m)
                    nxt.append(BranchNode(t2, depth + 1, spawned, _rem=rem2, _m=m2))
            if not pure:
                nxt, merged = _dedup(nxt)
                dedup_merges += merged
                if pruned:
                    nxt, dropped = _prune(nxt, objective, rel, abs_)
                    pruned_branches += dropped
                if len(nxt) > config.branch_cap:
                    nxt = nxt[: config.branch_cap]
                    truncated = True
            frontier = nxt
            max_live = max(max_live, len(frontier))

    leaves = [node.tour for node in frontier]
    result = SolveResult(
        best_tour=_best_leaf(leaves, objective),
        delta_evals=delta_evals,
        branch_events=branch_events,
        max_live_branches=max_live,
        pruned_branches=pruned_branches,
        dedup_merges=dedup_merges,
        truncated=truncated,
        all_leaves=leaves if full else None,
    )
    if full and truncated:
        raise BranchCapExceeded(result)
    return result
