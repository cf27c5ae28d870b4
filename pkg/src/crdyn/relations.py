"""Relation backends: finite relations on points and segment relations on [0, 1].

Two closed-relation representations share one vocabulary of operations
(membership, fibers, inversion, projections, walk machinery):

* :class:`FiniteRelation` -- a nonempty set of ordered pairs over
  ``{0, ..., n-1}``; everything about it is decided exactly.
* :class:`SegmentRelation` -- a finite union of (possibly degenerate) line
  segments inside the unit square; fibers and images are computed exactly
  on the piecewise-linear geometry, while point membership carries a
  distance tolerance for floating-point robustness.

Both are immutable values; all operations are pure functions, so sharing
relations across threads needs no coordination.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CapExceededError, ConstraintError, DeadEndError, RelationFormatError
from .intervals import IntervalSet

DEFAULT_TOLERANCE = 1e-9

#: Default cap on the number of walks materialised by :func:`mahavier_paths`.
PATH_ENUMERATION_CAP = 1_000_000

POLICIES = ("first", "random", "greedy")


# ---------------------------------------------------------------------------
# finite backend
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteRelation:
    """A nonempty edge set over the discrete carrier {0, ..., size-1}."""

    size: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ConstraintError("size must be a positive integer")
        if not self.edges:
            raise ConstraintError("a relation must have at least one pair")
        for x, y in self.edges:
            if not (0 <= x < self.size and 0 <= y < self.size):
                raise ConstraintError(f"pair ({x}, {y}) out of range for size {self.size}")

    @classmethod
    def from_edges(cls, size: int, edges: Iterable[Sequence[int]]) -> "FiniteRelation":
        return cls(size, frozenset((int(x), int(y)) for x, y in edges))

    def _check_point(self, x: int) -> int:
        if not (isinstance(x, (int, np.integer)) and 0 <= x < self.size):
            raise ConstraintError(f"point {x!r} outside {{0, ..., {self.size - 1}}}")
        return int(x)

    def contains(self, x: int, y: int) -> bool:
        return (self._check_point(x), self._check_point(y)) in self.edges

    def successors(self, x: int) -> frozenset[int]:
        x = self._check_point(x)
        return frozenset(b for a, b in self.edges if a == x)

    def predecessors(self, y: int) -> frozenset[int]:
        y = self._check_point(y)
        return frozenset(a for a, b in self.edges if b == y)

    def inverse(self) -> "FiniteRelation":
        return FiniteRelation(self.size, frozenset((b, a) for a, b in self.edges))

    def projections(self) -> tuple[frozenset[int], frozenset[int]]:
        return (frozenset(a for a, _ in self.edges), frozenset(b for _, b in self.edges))

    def succ_masks(self) -> np.ndarray:
        cached = self.__dict__.get("_succ")
        if cached is None:
            cached = _succ_masks(self.size, self.edges, swap=False)
            object.__setattr__(self, "_succ", cached)
        return cached

    def pred_masks(self) -> np.ndarray:
        cached = self.__dict__.get("_pred")
        if cached is None:
            cached = _succ_masks(self.size, self.edges, swap=True)
            object.__setattr__(self, "_pred", cached)
        return cached

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def is_functional(self) -> bool:
        """Every point has exactly one successor (the graph of a self-map)."""
        return all(len(self.successors(x)) == 1 for x in range(self.size))


def _succ_masks(size: int, edges, swap: bool) -> np.ndarray:
    masks = np.zeros(size, dtype=np.int64)
    for x, y in edges:
        if swap:
            x, y = y, x
        masks[x] |= np.int64(1) << np.int64(y)
    masks.setflags(write=False)
    return masks


# ---------------------------------------------------------------------------
# segment backend
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """A closed line segment in the unit square; degenerate segments are points."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for c in (self.x1, self.y1, self.x2, self.y2):
            if not (0.0 <= c <= 1.0) or not math.isfinite(c):
                raise ConstraintError(f"segment coordinate {c!r} outside [0, 1]")

    @property
    def xmin(self) -> float:
        return min(self.x1, self.x2)

    @property
    def xmax(self) -> float:
        return max(self.x1, self.x2)

    @property
    def ymin(self) -> float:
        return min(self.y1, self.y2)

    @property
    def ymax(self) -> float:
        return max(self.y1, self.y2)

    @property
    def is_vertical(self) -> bool:
        return self.x1 == self.x2

    @property
    def is_point(self) -> bool:
        return self.x1 == self.x2 and self.y1 == self.y2

    def swapped(self) -> "Segment":
        return Segment(self.y1, self.x1, self.y2, self.x2)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def dist_to(self, x: float, y: float) -> float:
        """Euclidean distance from (x, y) to the segment."""
        dx, dy = self.x2 - self.x1, self.y2 - self.y1
        px, py = x - self.x1, y - self.y1
        denom = dx * dx + dy * dy
        if denom == 0.0:
            return math.hypot(px, py)
        t = max(0.0, min(1.0, (px * dx + py * dy) / denom))
        return math.hypot(px - t * dx, py - t * dy)

    def fiber_at(self, x: float) -> tuple[float, float] | None:
        """The y-values attained at abscissa ``x``, as a closed interval.

        Exact overlap semantics: a vertical segment contributes its whole
        y-extent when ``x`` equals its abscissa, any other segment the single
        crossing value when ``x`` lies in its x-extent.
        """
        if not (self.xmin <= x <= self.xmax):
            return None
        if self.is_vertical:
            return (self.ymin, self.ymax)
        t = (x - self.x1) / (self.x2 - self.x1)
        y = self.y1 + t * (self.y2 - self.y1)
        y = min(1.0, max(0.0, y))
        return (y, y)

    def fiber_over(self, a: float, b: float) -> tuple[float, float] | None:
        """y-values attained over the abscissa window [a, b]."""
        lo, hi = max(a, self.xmin), min(b, self.xmax)
        if lo > hi:
            return None
        if self.is_vertical:
            return (self.ymin, self.ymax)
        f1 = self.fiber_at(lo)
        f2 = self.fiber_at(hi)
        assert f1 is not None and f2 is not None
        ya, yb = f1[0], f2[0]
        return (min(ya, yb), max(ya, yb))


@dataclass(frozen=True)
class SegmentRelation:
    """A closed relation on [0, 1] given as a finite union of segments."""

    segments: tuple[Segment, ...]
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self) -> None:
        if not self.segments:
            raise ConstraintError("a relation must have at least one segment")
        if self.tolerance < 0:
            raise ConstraintError("tolerance must be nonnegative")

    @classmethod
    def from_tuples(cls, tuples: Iterable[Sequence[float]],
                    tolerance: float = DEFAULT_TOLERANCE) -> "SegmentRelation":
        return cls(tuple(Segment(*map(float, t)) for t in tuples), tolerance)

    @staticmethod
    def _check_point(x: float) -> float:
        x = float(x)
        if not (0.0 <= x <= 1.0) or not math.isfinite(x):
            raise ConstraintError(f"point {x!r} outside [0, 1]")
        return x

    def contains(self, x: float, y: float) -> bool:
        x, y = self._check_point(x), self._check_point(y)
        x1, y1, dx, dy, norm2, _, _ = _segment_arrays(self)
        px, py = x - x1, y - y1
        t = np.clip(np.divide(px * dx + py * dy, norm2,
                              out=np.zeros_like(norm2), where=norm2 > 0), 0.0, 1.0)
        d2 = (px - t * dx) ** 2 + (py - t * dy) ** 2
        return bool(d2.min() <= self.tolerance ** 2)

    def fiber_pieces(self, x: float) -> list[tuple[float, float]]:
        """Per-segment fiber intervals at ``x`` (unmerged, for sampling)."""
        x = self._check_point(x)
        _, _, _, _, _, xmin, xmax = _segment_arrays(self)
        out = []
        for i in np.nonzero((xmin <= x) & (x <= xmax))[0]:
            f = self.segments[i].fiber_at(x)
            if f is not None:
                out.append(f)
        return out

    def successors(self, x: float) -> IntervalSet:
        return IntervalSet(self.fiber_pieces(x))

    def predecessors(self, y: float) -> IntervalSet:
        return self.inverse().successors(y)

    def inverse(self) -> "SegmentRelation":
        return SegmentRelation(tuple(s.swapped() for s in self.segments), self.tolerance)

    def projections(self) -> tuple[IntervalSet, IntervalSet]:
        p1 = IntervalSet((s.xmin, s.xmax) for s in self.segments)
        p2 = IntervalSet((s.ymin, s.ymax) for s in self.segments)
        return p1, p2

    def image(self, a: IntervalSet) -> IntervalSet:
        """Union of all fibers over the set ``a`` (exact on the geometry)."""
        _, _, _, _, _, xmin, xmax = _segment_arrays(self)
        pieces = []
        for lo, hi in a.intervals:
            for i in np.nonzero((xmin <= hi) & (lo <= xmax))[0]:
                f = self.segments[i].fiber_over(lo, hi)
                if f is not None:
                    pieces.append(f)
        return IntervalSet(pieces)


def _segment_arrays(rel: SegmentRelation) -> tuple[np.ndarray, ...]:
    """Column views of the segment list for vectorised membership and fibers."""
    cached = rel.__dict__.get("_arrays")
    if cached is not None:
        return cached
    arr = np.array([s.as_tuple() for s in rel.segments], dtype=float)
    x1, y1, x2, y2 = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    dx, dy = x2 - x1, y2 - y1
    norm2 = dx * dx + dy * dy
    out = (x1, y1, dx, dy, norm2, np.minimum(x1, x2), np.maximum(x1, x2))
    for a in out:
        a.setflags(write=False)
    object.__setattr__(rel, "_arrays", out)
    return out


Relation = FiniteRelation | SegmentRelation


# ---------------------------------------------------------------------------
# orbit prefixes and walk machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrbitPrefix:
    """A finite walk (x1, ..., xm): every consecutive pair lies in the relation.

    Infinite orbits are never materialised; a prefix plus an extension policy
    is the computable handle on them.  ``truncated`` marks a prefix that hit
    a dead end before its requested length.
    """

    points: tuple
    backend: str
    truncated: bool = False

    def __post_init__(self) -> None:
        if self.backend not in ("finite", "segment"):
            raise ConstraintError(f"unknown backend {self.backend!r}")
        if not self.points:
            raise ConstraintError("an orbit prefix needs at least one point")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def last(self):
        return self.points[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def validate(self, rel: Relation) -> bool:
        """Consecutive membership: exact on finite, within tolerance on segments."""
        return all(rel.contains(a, b) for a, b in zip(self.points, self.points[1:]))


def make_prefix(rel: Relation, points: Sequence) -> OrbitPrefix:
    backend = "finite" if isinstance(rel, FiniteRelation) else "segment"
    prefix = OrbitPrefix(tuple(points), backend)
    if not prefix.validate(rel):
        raise ConstraintError("orbit prefix has a consecutive pair outside the relation")
    return prefix


def walk_counts(rel: FiniteRelation, m: int) -> int:
    """Number of walks with m edges, via adjacency-matrix powers (exact ints)."""
    if m < 1:
        raise ConstraintError("walk length must be >= 1")
    n = rel.size
    adj = [[0] * n for _ in range(n)]
    for x, y in rel.edges:
        adj[x][y] = 1
    # counts[v] = number of length-k walks starting at v
    counts = [1] * n
    for _ in range(m):
        counts = [sum(adj[v][w] * counts[w] for w in range(n)) for v in range(n)]
    return sum(counts)


def mahavier_paths(rel: FiniteRelation, m: int,
                   cap: int = PATH_ENUMERATION_CAP) -> list[tuple[int, ...]]:
    """All (x1, ..., x_{m+1}) with every consecutive pair an edge, in lex order.

    Raises :class:`CapExceededError` when the walk count (estimated first via
    matrix powers) exceeds ``cap``; callers should sample instead.
    """
    if m < 1:
        raise ConstraintError("m must be a positive integer")
    total = walk_counts(rel, m)
    if total > cap:
        raise CapExceededError(f"{total} walks exceed the enumeration cap {cap}")
    succ = [sorted(rel.successors(x)) for x in range(rel.size)]
    out: list[tuple[int, ...]] = []
    path = [0] * (m + 1)

    def go(v: int, depth: int) -> None:
        path[depth] = v
        if depth == m:
            out.append(tuple(path))
            return
        for w in succ[v]:
            go(w, depth + 1)

    for v in range(rel.size):
        go(v, 0)
    return out


# ---------------------------------------------------------------------------
# one-step orbit extension
# ---------------------------------------------------------------------------

def _greedy_candidates(fiber: IntervalSet, visited: np.ndarray) -> np.ndarray:
    cands = []
    for a, b in fiber.intervals:
        cands.append(a)
        if b > a:
            cands.append(b)
            i0 = np.searchsorted(visited, a, side="left")
            i1 = np.searchsorted(visited, b, side="right")
            inside = visited[i0:i1]
            if inside.size >= 2:
                cands.extend(((inside[1:] + inside[:-1]) / 2.0).tolist())
    return np.unique(np.asarray(cands, dtype=float))


def _dist_to_sorted(points: np.ndarray, visited: np.ndarray) -> np.ndarray:
    if visited.size == 0:
        return np.full(points.shape, np.inf)
    idx = np.searchsorted(visited, points)
    left = np.where(idx > 0, np.abs(points - visited[np.maximum(idx - 1, 0)]), np.inf)
    right = np.where(idx < visited.size,
                     np.abs(visited[np.minimum(idx, visited.size - 1)] - points), np.inf)
    return np.minimum(left, right)


def greedy_segment_choice(fiber: IntervalSet, visited: np.ndarray,
                          last_seen: dict[float, int]) -> float:
    """Successor maximising the distance to the visited set.

    Candidates are fiber endpoints plus midpoints of visited gaps inside each
    fiber interval (where the piecewise-linear distance peaks).  When every
    candidate is already visited, the least recently visited one is taken so
    the walk keeps interleaving instead of idling; ties break to the smaller
    value for determinism.
    """
    cands = _greedy_candidates(fiber, visited)
    dists = _dist_to_sorted(cands, visited)
    best = float(np.max(dists))
    if best > 1e-12:
        return float(cands[np.argmax(dists == best)])
    # all candidates sit on visited points: rotate by age
    ages = []
    for c in cands:
        i = np.searchsorted(visited, c)
        near = []
        if i > 0:
            near.append(visited[i - 1])
        if i < visited.size:
            near.append(visited[i])
        nearest = min(near, key=lambda v: abs(v - c))
        ages.append(last_seen.get(float(nearest), -1))
    k = int(np.argmin(np.asarray(ages)))
    return float(cands[k])


def _extend_finite(rel: FiniteRelation, prefix: OrbitPrefix, policy: str, rng) -> int:
    succ = sorted(rel.successors(prefix.last))
    if not succ:
        raise DeadEndError(f"no successor at {prefix.last}: orbit not extendable")
    if policy == "first":
        return succ[0]
    if policy == "random":
        rng = rng or np.random.default_rng(0)
        return int(succ[rng.integers(len(succ))])
    visited = set(prefix.points)
    fresh = [w for w in succ if w not in visited]
    if fresh:
        return fresh[0]
    last_seen: dict[int, int] = {}
    for i, p in enumerate(prefix.points):
        last_seen[p] = i
    return min(succ, key=lambda w: (last_seen.get(w, -1), w))


def _extend_segment(rel: SegmentRelation, prefix: OrbitPrefix, policy: str, rng) -> float:
    x = prefix.last
    pieces = rel.fiber_pieces(x)
    if not pieces:
        raise DeadEndError(f"no successor at {x}: orbit not extendable")
    if policy == "first":
        return IntervalSet(pieces).min()
    if policy == "random":
        rng = rng or np.random.default_rng(0)
        a, b = pieces[rng.integers(len(pieces))]
        return float(a if a == b else rng.uniform(a, b))
    visited = np.unique(np.asarray(prefix.points, dtype=float))
    last_seen: dict[float, int] = {}
    for i, p in enumerate(prefix.points):
        last_seen[float(p)] = i
    return greedy_segment_choice(IntervalSet(pieces), visited, last_seen)


def extend_orbit(rel: Relation, prefix: OrbitPrefix, policy: str = "first",
                 rng=None) -> OrbitPrefix:
    """Append one successor chosen by ``policy`` in {first, random, greedy}.

    Raises :class:`DeadEndError` when the last point has no successor.
    """
    if policy not in POLICIES:
        raise ConstraintError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if isinstance(rel, FiniteRelation):
        nxt = _extend_finite(rel, prefix, policy, rng)
    else:
        nxt = _extend_segment(rel, prefix, policy, rng)
    return OrbitPrefix(prefix.points + (nxt,), prefix.backend, prefix.truncated)


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def relation_to_dict(rel: Relation) -> dict:
    if isinstance(rel, FiniteRelation):
        return {"type": "finite", "n": rel.size,
                "edges": [list(e) for e in rel.sorted_edges()]}
    return {"type": "segments", "tolerance": rel.tolerance,
            "segments": [list(s.as_tuple()) for s in rel.segments]}


def relation_from_dict(data: dict) -> Relation:
    if not isinstance(data, dict) or "type" not in data:
        raise RelationFormatError("relation file must be an object with a 'type' field")
    kind = data["type"]
    try:
        if kind == "finite":
            return FiniteRelation.from_edges(int(data["n"]), data["edges"])
        if kind == "segments":
            return SegmentRelation.from_tuples(
                data["segments"], float(data.get("tolerance", DEFAULT_TOLERANCE)))
    except (KeyError, TypeError, ValueError) as exc:
        raise RelationFormatError(f"malformed relation file: {exc}") from exc
    raise RelationFormatError(f"unknown relation type {kind!r}")


def load_relation(path: str) -> Relation:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RelationFormatError(f"cannot read relation file {path}: {exc}") from exc
    return relation_from_dict(data)


def dump_relation(rel: Relation, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(relation_to_dict(rel), fh, sort_keys=True)
        fh.write("\n")
