"""Exact small-instance solvers and checks built on them.

``brute_force`` and ``held_karp`` are independent of the construction solver
and of each other; they exist to referee it.  ``cut_step`` removes the point
whose removal shortens a closed route the least... precisely: it removes the
point that leaves the *shortest* remaining closed route, which is the reverse
of the insertion step.  ``check_lemma`` asks whether cutting one point from an
optimal route leaves an optimal route for the remaining points;
``check_monotonicity`` tracks how the length disturbance evolves while cutting
an optimal route all the way down to two points.  Both report, they do not
assume.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .instance import Instance, GeneratorConfig, generate, derive_seed
from .solver import (
    Branching,
    BranchCapExceeded,
    Objective,
    SolverConfig,
    Tour,
    solve,
)

__all__ = [
    "ExactResult",
    "brute_force",
    "held_karp",
    "cut_step",
    "LemmaReport",
    "check_lemma",
    "MonotonicityReport",
    "check_monotonicity",
    "HarnessRow",
    "HarnessSummary",
    "exactness_harness",
]

_BRUTE_MAX = 10
_HK_MAX = 18


@dataclass(frozen=True)
class ExactResult:
    best_length: float
    best_order: tuple
    method: str
    explored: int


def brute_force(inst: Instance, objective: Objective = Objective.MIN_TOUR) -> ExactResult:
    """Enumerate all (n-1)!/2 distinct cycles; ties resolve to the first found.

    Cycles are anchored at point 0 and each direction is visited once
    (order[1] < order[-1]).
    """
    n = inst.n
    if not (3 <= n <= _BRUTE_MAX):
        raise ValueError(f"brute_force supports 3 <= n <= {_BRUTE_MAX}, got {n}")
    d = inst.distance_matrix().tolist()
    minimize = objective is Objective.MIN_TOUR
    best = None
    best_perm = None
    explored = 0
    for perm in itertools.permutations(range(1, n)):
        if perm[0] > perm[-1]:
            continue
        explored += 1
        row = d[0]
        length = row[perm[0]] + row[perm[-1]]
        prev = perm[0]
        for q in perm[1:]:
            length += d[prev][q]
            prev = q
        if best is None or (length < best if minimize else length > best):
            best = length
            best_perm = perm
    return ExactResult(float(best), (0, *best_perm), "permutation", explored)


def held_karp(inst: Instance, objective: Objective = Objective.MIN_TOUR) -> ExactResult:
    """Exact dynamic program over subsets, O(2^n n^2) time, O(2^n n) memory.

    MAX_TOUR runs the same program on negated distances.  ``explored`` counts
    edge relaxations.  The returned order starts at 0 with the
    lexicographically smaller direction.
    """
    n = inst.n
    if not (3 <= n <= _HK_MAX):
        raise ValueError(f"held_karp supports 3 <= n <= {_HK_MAX}, got {n}")
    sign = 1.0 if objective is Objective.MIN_TOUR else -1.0
    d = (sign * inst.distance_matrix()).tolist()
    m = n - 1  # cities 1..n-1 live on bits 0..m-1; city 0 is the anchor
    size = 1 << m
    inf = math.inf
    w = [[d[i + 1][j + 1] for j in range(m)] for i in range(m)]
    w0 = [d[0][j + 1] for j in range(m)]
    dp = [[inf] * m for _ in range(size)]
    parent = [bytearray([255]) * m for _ in range(size)]
    for last in range(m):
        dp[1 << last][last] = w0[last]
    explored = 0
    full = size - 1
    for mask in range(1, size):
        row = dp[mask]
        rem0 = ~mask & full
        bits = mask
        while bits:
            lb = bits & -bits
            bits ^= lb
            last = lb.bit_length() - 1
            base = row[last]
            if base == inf:
                continue
            wl = w[last]
            rem = rem0
            while rem:
                nb = rem & -rem
                rem ^= nb
                nxt = nb.bit_length() - 1
                explored += 1
                cand = base + wl[nxt]
                nrow = dp[mask | nb]
                if cand < nrow[nxt]:
                    nrow[nxt] = cand
                    parent[mask | nb][nxt] = last
    best_cost = inf
    best_last = -1
    closing = w0
    row = dp[full]
    for last in range(m):
        cand = row[last] + closing[last]
        if cand < best_cost:
            best_cost = cand
            best_last = last
    seq = []
    mask, last = full, best_last
    while last != 255:
        seq.append(last + 1)
        prev = parent[mask][last]
        mask ^= 1 << last
        last = prev
    order = [0] + seq[::-1]
    if order[1] > order[-1]:
        order = [0] + order[:0:-1]
    return ExactResult(float(sign * best_cost), tuple(order), "held_karp", explored)


def cut_step(inst: Instance, order: Sequence[int]):
    """Remove the point whose removal leaves the shortest closed route.

    The saving of removing p between neighbours a, b is
    d(p,a) + d(p,b) - d(a,b) — the insertion disturbance read backwards — so
    the cut maximizes that saving.  Ties go to the smallest point id.  Returns
    (new_order, removed_point); cyclic order of the rest is preserved.
    """
    k = len(order)
    if k < 3:
        raise ValueError("cut_step needs a route of size >= 3")
    o = np.asarray(order, dtype=np.intp)
    d = inst.distance_matrix()
    prv = np.roll(o, 1)
    nxt = np.roll(o, -1)
    saving = d[o, prv] + d[o, nxt] - d[prv, nxt]
    tied = np.flatnonzero(saving == saving.max())
    pos = int(tied[np.argmin(o[tied])])
    removed = int(o[pos])
    return [int(p) for i, p in enumerate(o) if i != pos], removed


def _sub_instance(inst: Instance, keep: Sequence[int]) -> Instance:
    pts = inst.points
    if pts is not None:
        return Instance.from_points([pts[p] for p in keep], name=f"{inst.name}-sub")
    d = inst.distance_matrix()
    return Instance.from_matrix(d[np.ix_(keep, keep)], name=f"{inst.name}-sub")


@dataclass
class LemmaReport:
    """Is the once-cut optimal route itself optimal for the remaining points?"""

    n: int
    optimal_length: float
    optimal_order: tuple
    removed_point: int
    cut_order: tuple
    cut_length: float
    sub_optimal_length: float
    sub_optimal_order: tuple  # in original point ids
    rel_gap: float
    holds: bool

    def to_dict(self):
        return {
            "n": self.n,
            "optimal_length": self.optimal_length,
            "optimal_order": list(self.optimal_order),
            "removed_point": self.removed_point,
            "cut_order": list(self.cut_order),
            "cut_length": self.cut_length,
            "sub_optimal_length": self.sub_optimal_length,
            "sub_optimal_order": list(self.sub_optimal_order),
            "rel_gap": self.rel_gap,
            "holds": self.holds,
        }


def check_lemma(inst: Instance, *, rel_tol: float = 1e-9) -> LemmaReport:
    """Cut one point off an exact optimum and compare against the exact
    optimum of the remaining points.

    ``rel_gap`` is (cut - sub_optimum) / sub_optimum; it can never be
    meaningfully negative (the cut route is itself a route over the remaining
    points), and ``holds`` is true when it is zero within ``rel_tol``.
    """
    n = inst.n
    if not (4 <= n <= _HK_MAX):
        raise ValueError(f"check_lemma supports 4 <= n <= {_HK_MAX}, got {n}")
    exact = held_karp(inst, Objective.MIN_TOUR)
    cut_order, removed = cut_step(inst, exact.best_order)
    cut_length = Tour.from_order(inst, cut_order).length
    keep = [p for p in range(n) if p != removed]
    sub = _sub_instance(inst, keep)
    sub_exact = (
        held_karp(sub, Objective.MIN_TOUR)
        if len(keep) >= 3
        else ExactResult(2.0 * sub.distance(0, 1), (0, 1), "pair", 1)
    )
    scale = max(abs(sub_exact.best_length), 1e-30)
    gap = (cut_length - sub_exact.best_length) / scale
    return LemmaReport(
        n=n,
        optimal_length=exact.best_length,
        optimal_order=exact.best_order,
        removed_point=removed,
        cut_order=tuple(cut_order),
        cut_length=cut_length,
        sub_optimal_length=sub_exact.best_length,
        sub_optimal_order=tuple(keep[q] for q in sub_exact.best_order),
        rel_gap=gap,
        holds=abs(gap) <= rel_tol,
    )


@dataclass
class MonotonicityReport:
    """Disturbance profile while cutting an optimal route down to a pair.

    ``lengths`` runs from the full optimal route down to the two-point route;
    ``disturbances[t]`` is |lengths[t+1] - lengths[t]|.  The claim under test
    is that disturbances never shrink as the route shrinks; ``violations``
    counts adjacent pairs where they do (beyond tolerance).
    """

    n: int
    lengths: list
    disturbances: list
    violations: int
    holds: bool

    def to_dict(self):
        return {
            "n": self.n,
            "lengths": self.lengths,
            "disturbances": self.disturbances,
            "violations": self.violations,
            "holds": self.holds,
        }


def check_monotonicity(
    inst: Instance, *, rel_tol: float = 1e-9, abs_tol: float = 1e-12
) -> MonotonicityReport:
    n = inst.n
    if not (4 <= n <= _HK_MAX):
        raise ValueError(f"check_monotonicity supports 4 <= n <= {_HK_MAX}, got {n}")
    order = list(held_karp(inst, Objective.MIN_TOUR).best_order)
    lengths = [Tour.from_order(inst, order).length]
    while len(order) > 2:
        order, _ = cut_step(inst, order)
        lengths.append(Tour.from_order(inst, order).length)
    dist = [abs(b - a) for a, b in zip(lengths, lengths[1:])]
    violations = 0
    for a, b in zip(dist, dist[1:]):
        if a > b + max(abs_tol, rel_tol * max(abs(a), abs(b))):
            violations += 1
    return MonotonicityReport(
        n=n, lengths=lengths, disturbances=dist, violations=violations,
        holds=violations == 0,
    )


@dataclass
class HarnessRow:
    index: int
    n: int
    seed: int
    mode: str
    length: float
    optimal_length: float
    rel_gap: float
    matched: bool
    truncated: bool
    order: Optional[list] = None
    optimal_order: Optional[list] = None

    def to_dict(self):
        out = {
            "index": self.index,
            "n": self.n,
            "seed": self.seed,
            "mode": self.mode,
            "length": self.length,
            "optimal_length": self.optimal_length,
            "rel_gap": self.rel_gap,
            "matched": self.matched,
            "truncated": self.truncated,
        }
        if self.order is not None:
            out["order"] = self.order
            out["optimal_order"] = self.optimal_order
        return out


@dataclass
class ModeStats:
    mode: str
    instances: int = 0
    matched: int = 0
    truncated: int = 0
    max_gap: float = 0.0
    min_gap: float = 0.0
    gap_sum: float = 0.0
    full_best_mismatches: int = 0

    @property
    def match_rate(self) -> float:
        return self.matched / self.instances if self.instances else 0.0

    @property
    def mean_gap(self) -> float:
        return self.gap_sum / self.instances if self.instances else 0.0


@dataclass
class HarnessSummary:
    count: int
    n_min: int
    n_max: int
    objective: str
    master_seed: int
    grid: tuple
    match_tol: float
    stats: dict = field(default_factory=dict)  # mode -> ModeStats
    mismatches: list = field(default_factory=list)  # HarnessRow

    def to_dict(self):
        return {
            "count": self.count,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "objective": self.objective,
            "master_seed": self.master_seed,
            "grid": list(self.grid),
            "match_tol": self.match_tol,
            "modes": {
                m: {
                    "instances": s.instances,
                    "matched": s.matched,
                    "match_rate": s.match_rate,
                    "truncated": s.truncated,
                    "max_gap": s.max_gap,
                    "min_gap": s.min_gap,
                    "mean_gap": s.mean_gap,
                    "full_best_mismatches": s.full_best_mismatches,
                }
                for m, s in sorted(self.stats.items())
            },
            "mismatches": [r.to_dict() for r in self.mismatches],
        }

    def to_text(self):
        lines = [
            f"exactness harness: {self.count} instances, n in [{self.n_min}, {self.n_max}], "
            f"objective={self.objective}, grid={self.grid[0]}x{self.grid[1]}, "
            f"seed={self.master_seed}",
            f"{'mode':8} {'instances':>9} {'matched':>8} {'rate':>7} "
            f"{'mean_gap':>10} {'max_gap':>10} {'truncated':>9}",
        ]
        for m, s in sorted(self.stats.items()):
            lines.append(
                f"{m:8} {s.instances:9d} {s.matched:8d} {s.match_rate:7.4f} "
                f"{s.mean_gap:10.3e} {s.max_gap:10.3e} {s.truncated:9d}"
            )
        lines.append(f"mismatches: {len(self.mismatches)}")
        return "\n".join(lines)


def exactness_harness(
    count: int,
    n_min: int = 5,
    n_max: int = 9,
    *,
    objective: Objective = Objective.MIN_TOUR,
    modes: Sequence[Branching] = (Branching.PURE, Branching.FULL, Branching.PRUNED),
    master_seed: int = 0,
    grid: tuple = (10, 10),
    branch_cap: int = 10_000,
    match_tol: float = 1e-9,
) -> HarnessSummary:
    """Race every branching mode against the exact optimum on seeded grid
    instances (a small grid keeps distance ties frequent, which is the point).

    Instance i has n = n_min + i mod (n_max - n_min + 1) and seed
    derive_seed(master_seed, i).  A mode "matches" when its length is within
    ``match_tol`` relative of the optimum; mismatch rows carry both orders.
    FULL runs that hit the branch cap contribute their truncated best.
    ``min_gap`` going below -match_tol would mean the construction beat an
    exact solver — that is the referee check callers should assert on.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if not (3 <= n_min <= n_max <= _HK_MAX):
        raise ValueError(f"need 3 <= n_min <= n_max <= {_HK_MAX}")
    span = n_max - n_min + 1
    summary = HarnessSummary(
        count=count,
        n_min=n_min,
        n_max=n_max,
        objective=objective.value,
        master_seed=master_seed,
        grid=tuple(grid),
        match_tol=match_tol,
        stats={m.value: ModeStats(mode=m.value) for m in modes},
    )
    sign = 1.0 if objective is Objective.MIN_TOUR else -1.0
    for i in range(count):
        n = n_min + i % span
        seed = derive_seed(master_seed, i)
        inst = generate(GeneratorConfig(n=n, grid_w=grid[0], grid_h=grid[1], seed=seed))
        exact = held_karp(inst, objective)
        for mode in modes:
            cfg = SolverConfig(objective=objective, branching=mode, branch_cap=branch_cap)
            truncated = False
            try:
                res = solve(inst, cfg)
            except BranchCapExceeded as e:
                res = e.result
                truncated = True
            if mode is Branching.FULL and res.all_leaves is not None:
                ext = min if objective is Objective.MIN_TOUR else max
                if ext(t.length for t in res.all_leaves) != res.best_tour.length:
                    summary.stats[mode.value].full_best_mismatches += 1
            gap = sign * (res.best_tour.length - exact.best_length) / abs(exact.best_length)
            matched = abs(res.best_tour.length - exact.best_length) <= match_tol * abs(
                exact.best_length
            )
            st = summary.stats[mode.value]
            st.instances += 1
            st.matched += matched
            st.truncated += truncated
            st.gap_sum += gap
            st.max_gap = max(st.max_gap, gap)
            st.min_gap = min(st.min_gap, gap)
            if not matched:
                summary.mismatches.append(
                    HarnessRow(
                        index=i,
                        n=n,
                        seed=seed,
                        mode=mode.value,
                        length=res.best_tour.length,
                        optimal_length=exact.best_length,
                        rel_gap=gap,
                        matched=False,
                        truncated=truncated,
                        order=list(res.best_tour.order),
                        optimal_order=list(exact.best_order),
                    )
                )
    return summary
