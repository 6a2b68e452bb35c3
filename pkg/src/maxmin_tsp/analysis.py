"""Route diagnostics and benchmark harnesses: self-intersection detection,
loop-rate experiments, and work/time scaling fits.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .instance import GeneratorConfig, Instance, derive_seed, generate
from .solver import Objective, SolverConfig, solve

__all__ = [
    "segments_intersect",
    "CrossingReport",
    "detect_crossings",
    "closed_form_evals",
    "fit_power_law",
    "LoopRateReport",
    "loop_rate_experiment",
    "ScalingReport",
    "scaling_fit",
    "REFERENCE_TIMINGS_S",
    "REFERENCE_LOOP_RATES",
    "REFERENCE_COMPLEXITY_EXPONENT",
]

# Previously reported measurements for this construction, kept so benchmark
# output can show a side-by-side comparison.  Timings are (n, seconds) on the
# original hardware; loop rates are the fraction of runs whose tour
# self-intersects; the exponent is the published work-growth estimate.
REFERENCE_TIMINGS_S = ((500, 4.0), (1000, 38.0), (2000, 431.0))
REFERENCE_LOOP_RATES = {500: 0.0, 1000: 0.5, 2000: 0.8}
REFERENCE_COMPLEXITY_EXPONENT = 3.322


def closed_form_evals(n: int) -> int:
    """Tie-free disturbance-evaluation count: sum of k*(n-k) for k=2..n-1."""
    return (n**3 - n) // 6 - (n - 1)


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_intersect(p1, p2, p3, p4) -> bool:
    """Closed-segment intersection: proper crossings, endpoint touches, and
    collinear overlaps all count."""
    ax, ay = p1
    bx, by = p2
    cx, cy = p3
    dx, dy = p4
    d1 = _orient(cx, cy, dx, dy, ax, ay)
    d2 = _orient(cx, cy, dx, dy, bx, by)
    d3 = _orient(ax, ay, bx, by, cx, cy)
    d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True

    def on(seg_ax, seg_ay, seg_bx, seg_by, px, py):
        return (
            min(seg_ax, seg_bx) <= px <= max(seg_ax, seg_bx)
            and min(seg_ay, seg_by) <= py <= max(seg_ay, seg_by)
        )

    if d1 == 0 and on(cx, cy, dx, dy, ax, ay):
        return True
    if d2 == 0 and on(cx, cy, dx, dy, bx, by):
        return True
    if d3 == 0 and on(ax, ay, bx, by, cx, cy):
        return True
    if d4 == 0 and on(ax, ay, bx, by, dx, dy):
        return True
    return False


@dataclass
class CrossingReport:
    """Self-intersections of a closed route; pairs are edge positions (i, j),
    i < j, with adjacent edges excluded."""

    n: int
    pairs: list
    count: int
    has_loops: bool

    def to_dict(self):
        return {
            "n": self.n,
            "pairs": [list(p) for p in self.pairs],
            "count": self.count,
            "has_loops": self.has_loops,
        }


def detect_crossings(inst: Instance, order: Sequence[int]) -> CrossingReport:
    """All pairs of non-adjacent tour edges that intersect.

    Edge i runs from order[i] to order[i+1 mod n].  Vectorized over edge
    pairs in blocks; on an all-integer grid the orientation tests are exact.
    """
    pts = inst.points
    if pts is None:
        raise ValueError("crossing detection needs point coordinates")
    n = inst.n
    o = np.asarray(order, dtype=np.intp)
    if o.shape != (n,) or not np.array_equal(np.sort(o), np.arange(n)):
        raise ValueError("order is not a permutation of 0..n-1")
    if n < 4:
        return CrossingReport(n, [], 0, False)
    a = np.asarray(pts, dtype=float)[o]
    b = np.roll(a, -1, axis=0)
    pairs = []
    block = max(1, 500_000 // n)
    js = np.arange(n)
    for s in range(0, n, block):
        e = min(s + block, n)
        rows = np.arange(s, e)
        pa = a[rows][:, None, :]
        qa = b[rows][:, None, :]
        pb = a[None, :, :]
        qb = b[None, :, :]
        rb = qb - pb
        ra = qa - pa
        d1 = rb[..., 0] * (pa - pb)[..., 1] - rb[..., 1] * (pa - pb)[..., 0]
        d2 = rb[..., 0] * (qa - pb)[..., 1] - rb[..., 1] * (qa - pb)[..., 0]
        d3 = ra[..., 0] * (pb - pa)[..., 1] - ra[..., 1] * (pb - pa)[..., 0]
        d4 = ra[..., 0] * (qb - pa)[..., 1] - ra[..., 1] * (qb - pa)[..., 0]
        proper = (
            (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0)))
            & (((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0)))
        )

        def boxed(p, q, x):
            return (
                (np.minimum(p[..., 0], q[..., 0]) <= x[..., 0])
                & (x[..., 0] <= np.maximum(p[..., 0], q[..., 0]))
                & (np.minimum(p[..., 1], q[..., 1]) <= x[..., 1])
                & (x[..., 1] <= np.maximum(p[..., 1], q[..., 1]))
            )

        touch = (
            ((d1 == 0) & boxed(pb, qb, pa))
            | ((d2 == 0) & boxed(pb, qb, qa))
            | ((d3 == 0) & boxed(pa, qa, pb))
            | ((d4 == 0) & boxed(pa, qa, qb))
        )
        hit = proper | touch
        valid = js[None, :] > rows[:, None] + 1
        if s == 0:
            valid = valid.copy()
            valid[0, n - 1] = False  # wraparound edge is adjacent to edge 0
        hit &= valid
        for bi, bj in zip(*np.nonzero(hit)):
            pairs.append((int(rows[bi]), int(bj)))
    pairs.sort()
    return CrossingReport(n, pairs, len(pairs), bool(pairs))


def fit_power_law(xs: Sequence[float], ys: Sequence[float]):
    """Least-squares exponent and prefactor of y = c * x^p in log-log space."""
    if len(xs) < 2 or len(xs) != len(ys):
        raise ValueError("need at least two (x, y) pairs")
    if min(xs) <= 0 or min(ys) <= 0:
        raise ValueError("power-law fit needs positive values")
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    p, logc = np.polyfit(lx, ly, 1)
    return float(p), float(np.exp(logc))


@dataclass
class LoopRateReport:
    sizes: list
    reps: int
    master_seed: int
    grid: tuple
    rows: list = field(default_factory=list)
    # rows: dicts with n, runs, loop_runs, rate, mean_crossings, mean_length

    def rate(self, n: int) -> float:
        for row in self.rows:
            if row["n"] == n:
                return row["rate"]
        raise KeyError(n)

    def to_dict(self):
        return {
            "sizes": self.sizes,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "grid": list(self.grid),
            "reference_rates": {str(k): v for k, v in REFERENCE_LOOP_RATES.items()},
            "rows": self.rows,
        }

    def to_text(self):
        lines = [
            f"loop rates: reps={self.reps}, grid={self.grid[0]}x{self.grid[1]}, "
            f"seed={self.master_seed}",
            f"{'n':>6} {'runs':>5} {'loops':>6} {'rate':>6} {'mean_crossings':>14} {'reference':>9}",
        ]
        for row in self.rows:
            ref = REFERENCE_LOOP_RATES.get(row["n"])
            lines.append(
                f"{row['n']:>6} {row['runs']:>5} {row['loop_runs']:>6} {row['rate']:>6.2f} "
                f"{row['mean_crossings']:>14.2f} {ref if ref is not None else '-':>9}"
            )
        return "\n".join(lines)


def loop_rate_experiment(
    sizes: Sequence[int],
    reps: int,
    *,
    master_seed: int = 0,
    grid: tuple = (1000, 1000),
    config: Optional[SolverConfig] = None,
) -> LoopRateReport:
    """Fraction of solved instances whose tour self-intersects, per size.

    Run (n, r) uses seed derive_seed(master_seed, n, r), so results do not
    depend on which other sizes are in the batch.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    cfg = config or SolverConfig()
    report = LoopRateReport(
        sizes=sorted(int(n) for n in sizes), reps=reps, master_seed=master_seed,
        grid=tuple(grid),
    )
    for n in report.sizes:
        loop_runs = 0
        crossings = []
        lengths = []
        for r in range(reps):
            inst = generate(
                GeneratorConfig(
                    n=n, grid_w=grid[0], grid_h=grid[1],
                    seed=derive_seed(master_seed, n, r),
                )
            )
            res = solve(inst, cfg)
            cr = detect_crossings(inst, res.best_tour.order)
            loop_runs += cr.has_loops
            crossings.append(cr.count)
            lengths.append(res.best_tour.length)
        report.rows.append(
            {
                "n": n,
                "runs": reps,
                "loop_runs": loop_runs,
                "rate": loop_runs / reps,
                "mean_crossings": float(np.mean(crossings)),
                "mean_length": float(np.mean(lengths)),
            }
        )
    return report


@dataclass
class ScalingReport:
    sizes: list
    reps: int
    master_seed: int
    grid: tuple
    rows: list = field(default_factory=list)
    evals_exponent: float = 0.0
    time_exponent: float = 0.0
    reference_exponent: float = REFERENCE_COMPLEXITY_EXPONENT
    reference_fit_exponent: float = 0.0

    def to_dict(self):
        return {
            "sizes": self.sizes,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "grid": list(self.grid),
            "rows": self.rows,
            "evals_exponent": self.evals_exponent,
            "time_exponent": self.time_exponent,
            "reference_exponent": self.reference_exponent,
            "reference_fit_exponent": self.reference_fit_exponent,
            "reference_timings_s": [list(t) for t in REFERENCE_TIMINGS_S],
        }

    def to_text(self):
        lines = [
            f"scaling: reps={self.reps}, grid={self.grid[0]}x{self.grid[1]}, "
            f"seed={self.master_seed}",
            f"{'n':>6} {'delta_evals':>12} {'closed_form':>12} {'mean_s':>9}",
        ]
        for row in self.rows:
            lines.append(
                f"{row['n']:>6} {row['delta_evals']:>12} {row['closed_form']:>12} "
                f"{row['mean_s']:>9.3f}"
            )
        lines.append(
            f"fitted exponents: evals {self.evals_exponent:.3f}, time {self.time_exponent:.3f}; "
            f"reference timings fit {self.reference_fit_exponent:.3f} "
            f"(reported exponent {self.reference_exponent})"
        )
        return "\n".join(lines)


def scaling_fit(
    sizes: Sequence[int],
    reps: int = 3,
    *,
    master_seed: int = 0,
    grid: tuple = (1000, 1000),
    config: Optional[SolverConfig] = None,
) -> ScalingReport:
    """Measure disturbance evaluations and wall time across sizes and fit
    power laws to both.  Needs at least three sizes for a meaningful fit."""
    sizes = sorted(int(n) for n in sizes)
    if len(sizes) < 3:
        raise ValueError("scaling_fit needs at least three sizes")
    if reps < 1:
        raise ValueError("reps must be positive")
    cfg = config or SolverConfig()
    report = ScalingReport(
        sizes=sizes, reps=reps, master_seed=master_seed, grid=tuple(grid)
    )
    for n in sizes:
        times = []
        evals = set()
        lengths = []
        for r in range(reps):
            inst = generate(
                GeneratorConfig(
                    n=n, grid_w=grid[0], grid_h=grid[1],
                    seed=derive_seed(master_seed, n, r),
                )
            )
            t0 = time.perf_counter()
            res = solve(inst, cfg)
            times.append(time.perf_counter() - t0)
            evals.add(res.delta_evals)
            lengths.append(res.best_tour.length)
        report.rows.append(
            {
                "n": n,
                "delta_evals": max(evals),
                "delta_evals_constant": len(evals) == 1,
                "closed_form": closed_form_evals(n),
                "mean_s": float(np.mean(times)),
                "mean_length": float(np.mean(lengths)),
            }
        )
    try:
        report.evals_exponent, _ = fit_power_law(
            sizes, [r["delta_evals"] for r in report.rows]
        )
    except ValueError:  # counting disabled
        report.evals_exponent = float("nan")
    report.time_exponent, _ = fit_power_law(sizes, [r["mean_s"] for r in report.rows])
    report.reference_fit_exponent, _ = fit_power_law(
        [t[0] for t in REFERENCE_TIMINGS_S], [t[1] for t in REFERENCE_TIMINGS_S]
    )
    return report
