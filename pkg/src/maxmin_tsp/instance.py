"""Problem instances: 2D point sets, explicit distance matrices, generation, file I/O.

An instance is either backed by coordinates (Euclidean distances, computed on
demand) or by an explicit symmetric matrix.  Point and city ids are zero-based
positions; all routes elsewhere in the package are lists of these ids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

__all__ = [
    "InstanceFormatError",
    "PointSet",
    "DistanceMatrix",
    "Instance",
    "GeneratorConfig",
    "generate",
    "derive_seed",
    "read_instance",
    "write_instance",
]

# Writers emit 12 significant digits; values representable at that precision
# round-trip exactly.
_FMT = "{:.12g}"


class InstanceFormatError(ValueError):
    """An instance file is malformed or violates the matrix invariants."""


class PointSet:
    """Ordered 2D points; a point's id is its index in the list."""

    __slots__ = ("points",)

    def __init__(self, points: Iterable[Sequence[float]]):
        pts = []
        for i, xy in enumerate(points):
            x, y = float(xy[0]), float(xy[1])
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"non-finite coordinate at point {i}: ({x}, {y})")
            pts.append((x, y))
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int):
        return self.points[i]

    def __iter__(self):
        return iter(self.points)


class DistanceMatrix:
    """Symmetric non-negative matrix with a zero diagonal.

    The triangle inequality is *not* required; matrix instances may be
    non-metric.
    """

    __slots__ = ("d",)

    def __init__(self, d):
        arr = np.array(d, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InstanceFormatError("distance matrix must be square")
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            i, j = bad[0]
            raise InstanceFormatError(f"non-finite distance at ({i}, {j})")
        bad = np.argwhere(arr < 0)
        if bad.size:
            i, j = bad[0]
            raise InstanceFormatError(f"negative distance at ({i}, {j})")
        diag = np.flatnonzero(np.diagonal(arr))
        if diag.size:
            i = diag[0]
            raise InstanceFormatError(f"nonzero diagonal at ({i}, {i})")
        if not np.array_equal(arr, arr.T):
            bad = np.argwhere(arr != arr.T)
            i, j = bad[0]
            raise InstanceFormatError(f"asymmetric matrix: d[{i}][{j}] != d[{j}][{i}]")
        arr.setflags(write=False)
        self.d = arr

    @property
    def n(self) -> int:
        return self.d.shape[0]


class Instance:
    """A symmetric TSP instance; immutable after construction."""

    __slots__ = ("source", "name", "_matrix")

    def __init__(self, source: Union[PointSet, DistanceMatrix], name: str = ""):
        if not isinstance(source, (PointSet, DistanceMatrix)):
            raise TypeError("source must be a PointSet or a DistanceMatrix")
        self.source = source
        self.name = name
        self._matrix = source.d if isinstance(source, DistanceMatrix) else None

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]], name: str = "") -> "Instance":
        return cls(PointSet(points), name)

    @classmethod
    def from_matrix(cls, matrix, name: str = "") -> "Instance":
        return cls(DistanceMatrix(matrix), name)

    @property
    def n(self) -> int:
        if isinstance(self.source, PointSet):
            return len(self.source)
        return self.source.n

    @property
    def points(self) -> Optional[list]:
        """Coordinates, or None for matrix-backed instances."""
        if isinstance(self.source, PointSet):
            return self.source.points
        return None

    def distance(self, i: int, j: int) -> float:
        """Single distance, computed on demand for point-backed instances."""
        n = self.n
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"point id out of range: ({i}, {j}) with n={n}")
        pts = self.points
        if pts is not None:
            return math.dist(pts[i], pts[j])
        return float(self._matrix[i, j])

    def distance_matrix(self) -> np.ndarray:
        """Full matrix as a read-only float array; cached after first call.

        For point-backed instances the matrix path and ``distance`` may differ
        in the last ulp (different hypot implementations); they agree to 1e-12
        relative.
        """
        if self._matrix is None:
            a = np.asarray(self.source.points, dtype=float)
            dx = a[:, 0][:, None] - a[:, 0][None, :]
            dy = a[:, 1][:, None] - a[:, 1][None, :]
            m = np.hypot(dx, dy)
            m.setflags(write=False)
            self._matrix = m
        return self._matrix

    def tour_length(self, order: Sequence[int]) -> float:
        """Length of the closed route visiting ``order``; needs all n points.

        For n = 2 the closed route traverses the single edge twice.
        """
        n = self.n
        o = np.asarray(order, dtype=np.intp)
        if n < 2:
            raise ValueError("tour length needs at least 2 points")
        if o.shape != (n,) or not np.array_equal(np.sort(o), np.arange(n)):
            raise ValueError("order is not a permutation of 0..n-1")
        d = self.distance_matrix()
        return float(d[o, np.roll(o, -1)].sum())


@dataclass(frozen=True)
class GeneratorConfig:
    """Seeded uniform generation on an integer grid (or a continuous box)."""

    n: int
    grid_w: int = 1000
    grid_h: int = 1000
    seed: int = 0
    allow_duplicates: bool = False
    continuous: bool = False


def derive_seed(master_seed: int, *key: int) -> int:
    """Stable per-run seed derived from a master seed and an index key.

    Splitting is defined as folding the first two 32-bit words of
    ``numpy.random.SeedSequence([master_seed, *key])`` into one 64-bit value,
    so derived streams are independent of each other and of the master stream.
    """
    ss = np.random.SeedSequence([int(master_seed), *[int(k) for k in key]])
    a, b = (int(w) for w in ss.generate_state(2))
    return (a << 32) | b


def generate(cfg: GeneratorConfig) -> Instance:
    """Uniform points from a PCG64 stream; pure function of the config.

    Grid mode draws integer coordinates in [0, w) x [0, h); without
    ``allow_duplicates`` cells are distinct (n must not exceed w*h).  Dense
    requests (n*2 > w*h) are served from a full-grid permutation, sparse ones
    by per-point rejection; both are deterministic in the seed.
    """
    n, w, h = cfg.n, cfg.grid_w, cfg.grid_h
    if n < 2:
        raise ValueError("n must be at least 2")
    if w < 1 or h < 1:
        raise ValueError("grid dimensions must be positive")
    if cfg.seed < 0:
        raise ValueError("seed must be non-negative")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    kind = "uniform" if cfg.continuous else "grid"
    name = f"{kind}{w}x{h}-n{n}-s{cfg.seed}"
    if cfg.continuous:
        xs = rng.random(n) * w
        ys = rng.random(n) * h
        return Instance.from_points(np.column_stack([xs, ys]), name)
    capacity = w * h
    if cfg.allow_duplicates:
        xs = rng.integers(0, w, size=n)
        ys = rng.integers(0, h, size=n)
        return Instance.from_points(np.column_stack([xs, ys]).astype(float), name)
    if n > capacity:
        raise ValueError(f"n={n} exceeds grid capacity {w}x{h}={capacity} without duplicates")
    if 2 * n > capacity:
        codes = rng.permutation(capacity)[:n]
    else:
        seen = set()
        codes = []
        while len(codes) < n:
            c = int(rng.integers(0, capacity))
            if c not in seen:
                seen.add(c)
                codes.append(c)
        codes = np.asarray(codes)
    pts = np.column_stack([codes % w, codes // w]).astype(float)
    return Instance.from_points(pts, name)


# ---------------------------------------------------------------------------
# File formats.
#
# Native point format:   first line n, then n lines "x y".
# Native matrix format:  first line n, then n rows of n entries.
# Also read: TSPLIB-style EUC_2D coordinate files.
#
# A 2-line body with 2 tokens per line is ambiguous; it is taken as a matrix
# only when it has a zero diagonal and equal off-diagonal entries, otherwise
# as points.


def _parse_floats(tokens, path, lineno):
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise InstanceFormatError(
            f"malformed instance file {path}: non-numeric value on line {lineno}"
        ) from None


def _read_native(lines, path) -> Instance:
    try:
        n = int(lines[0][1][0])
    except (ValueError, IndexError):
        raise InstanceFormatError(
            f"malformed instance file {path}: expected point count on first line"
        ) from None
    if len(lines[0][1]) != 1:
        raise InstanceFormatError(f"malformed instance file {path}: first line must be the count")
    if n < 2:
        raise InstanceFormatError(f"malformed instance file {path}: count must be >= 2")
    body = lines[1:]
    if len(body) != n:
        raise InstanceFormatError(
            f"malformed instance file {path}: expected {n} data lines, found {len(body)}"
        )
    rows = [_parse_floats(toks, path, ln) for ln, toks in body]
    widths = {len(r) for r in rows}
    if widths == {n} and n != 2:
        return Instance.from_matrix(rows, name=Path(path).stem)
    if widths == {2}:
        if n == 2:
            a, b = rows
            if a[0] == 0.0 and b[1] == 0.0 and a[1] == b[0]:
                return Instance.from_matrix(rows, name=Path(path).stem)
        return Instance.from_points(rows, name=Path(path).stem)
    raise InstanceFormatError(
        f"malformed instance file {path}: rows have {sorted(widths)} values, expected 2 or {n}"
    )


def _read_tsplib(lines, path) -> Instance:
    name = Path(path).stem
    dim = None
    ewt = None
    coords = {}
    it = iter(lines)
    for lineno, toks in it:
        joined = " ".join(toks)
        key, _, val = joined.partition(":")
        key = key.strip().upper()
        val = val.strip()
        if key == "NAME":
            name = val or name
        elif key == "DIMENSION":
            try:
                dim = int(val)
            except ValueError:
                raise InstanceFormatError(
                    f"malformed instance file {path}: bad DIMENSION on line {lineno}"
                ) from None
        elif key == "EDGE_WEIGHT_TYPE":
            ewt = val.upper()
        elif key == "NODE_COORD_SECTION":
            break
        # NAME/TYPE/COMMENT and anything else before the section is skipped
    else:
        raise InstanceFormatError(f"malformed instance file {path}: NODE_COORD_SECTION missing")
    if ewt is None or ewt != "EUC_2D":
        raise InstanceFormatError(f"unsupported EDGE_WEIGHT_TYPE in {path}: {ewt or 'missing'}")
    if dim is None:
        raise InstanceFormatError(f"malformed instance file {path}: DIMENSION missing")
    for lineno, toks in it:
        if toks[0].upper() == "EOF":
            break
        if len(toks) != 3:
            raise InstanceFormatError(
                f"malformed instance file {path}: bad coordinate line {lineno}"
            )
        vals = _parse_floats(toks, path, lineno)
        coords[int(vals[0])] = (vals[1], vals[2])
    if sorted(coords) != list(range(1, dim + 1)):
        raise InstanceFormatError(
            f"malformed instance file {path}: need node ids 1..{dim}, got {len(coords)} lines"
        )
    return Instance.from_points([coords[i] for i in range(1, dim + 1)], name=name)


def read_instance(path) -> Instance:
    """Read a point, matrix, or EUC_2D coordinate file."""
    text = Path(path).read_text()
    lines = [
        (i + 1, ln.split())
        for i, ln in enumerate(text.splitlines())
        if ln.strip()
    ]
    if not lines:
        raise InstanceFormatError(f"malformed instance file {path}: empty")
    first = lines[0][1][0]
    if first[0].isalpha():
        return _read_tsplib(lines, path)
    return _read_native(lines, path)


def write_instance(inst: Instance, path) -> None:
    """Write the native format matching the instance's backing (points/matrix)."""
    pts = inst.points
    out = [str(inst.n)]
    if pts is not None:
        out += [f"{_FMT.format(x)} {_FMT.format(y)}" for x, y in pts]
    else:
        d = inst.distance_matrix()
        out += [" ".join(_FMT.format(v) for v in row) for row in d]
    Path(path).write_text("\n".join(out) + "\n")
