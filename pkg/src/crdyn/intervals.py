"""Finite unions of closed subintervals of [0, 1].

An :class:`IntervalSet` is the numeric stand-in for a closed subset of the
unit interval: a sorted tuple of pairwise disjoint closed intervals
``[a, b]`` with ``0 <= a <= b <= 1``.  Degenerate intervals (``a == b``)
encode single points.  Intervals whose gap is below ``MERGE_TOL`` are fused
on construction, so equality of two sets is meaningful at that resolution.

All operations are pure; instances are immutable.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConstraintError

#: Resolution below which adjacent intervals are merged into one.
MERGE_TOL = 1e-12


class IntervalSet:
    """An immutable finite union of disjoint closed intervals in [0, 1]."""

    __slots__ = ("_ivs",)

    def __init__(self, pairs: Iterable[Sequence[float]] = (), *, merge_tol: float = MERGE_TOL):
        cleaned = []
        for a, b in pairs:
            a = float(a)
            b = float(b)
            if not (0.0 <= a <= b <= 1.0):
                raise ConstraintError(f"invalid interval [{a}, {b}]: need 0 <= a <= b <= 1")
            cleaned.append((a, b))
        cleaned.sort()
        merged: list[list[float]] = []
        for a, b in cleaned:
            if merged and a - merged[-1][1] <= merge_tol:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        self._ivs: tuple[tuple[float, float], ...] = tuple((a, b) for a, b in merged)

    @classmethod
    def from_points(cls, points: Iterable[float]) -> "IntervalSet":
        return cls([(p, p) for p in points])

    @classmethod
    def full(cls) -> "IntervalSet":
        return cls([(0.0, 1.0)])

    @property
    def intervals(self) -> tuple[tuple[float, float], ...]:
        return self._ivs

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(self._ivs)

    def __len__(self) -> int:
        return len(self._ivs)

    def __bool__(self) -> bool:
        return bool(self._ivs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IntervalSet) and self._ivs == other._ivs

    def __hash__(self) -> int:
        return hash(self._ivs)

    def __repr__(self) -> str:
        return f"IntervalSet({list(self._ivs)!r})"

    @property
    def is_empty(self) -> bool:
        return not self._ivs

    def min(self) -> float:
        if not self._ivs:
            raise ConstraintError("empty interval set has no minimum")
        return self._ivs[0][0]

    def max(self) -> float:
        if not self._ivs:
            raise ConstraintError("empty interval set has no maximum")
        return self._ivs[-1][1]

    def measure(self) -> float:
        return sum(b - a for a, b in self._ivs)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(a - tol <= x <= b + tol for a, b in self._ivs)

    def distance_to(self, x: float) -> float:
        """Distance from the point ``x`` to the set (0 when inside)."""
        if not self._ivs:
            return float("inf")
        best = float("inf")
        for a, b in self._ivs:
            if a <= x <= b:
                return 0.0
            best = min(best, abs(x - a), abs(x - b))
        return best

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self._ivs + other._ivs)

    __or__ = union

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for a, b in self._ivs:
            for c, d in other._ivs:
                lo, hi = max(a, c), min(b, d)
                if lo <= hi:
                    out.append((lo, hi))
        return IntervalSet(out)

    def fatten(self, eps: float) -> "IntervalSet":
        """Closed ``eps``-neighbourhood within [0, 1]."""
        if eps < 0:
            raise ConstraintError("fatten radius must be nonnegative")
        return IntervalSet([(max(0.0, a - eps), min(1.0, b + eps)) for a, b in self._ivs])

    def excess_over(self, other: "IntervalSet") -> float:
        """One-sided Hausdorff distance: sup over self of the distance to ``other``.

        Returns 0 for an empty self and +inf when self is nonempty but
        ``other`` is empty.
        """
        if not self._ivs:
            return 0.0
        if not other._ivs:
            return float("inf")
        # Distance to `other` is piecewise linear; over a piece [a, b] the
        # maximum sits at a, b, or at a midpoint of a gap of `other`.
        worst = 0.0
        gaps = []
        prev = None
        for c, d in other._ivs:
            if prev is not None:
                gaps.append((prev, c))
            prev = d
        for a, b in self._ivs:
            worst = max(worst, other.distance_to(a), other.distance_to(b))
            for g1, g2 in gaps:
                mid = (g1 + g2) / 2.0
                if a <= mid <= b:
                    worst = max(worst, (g2 - g1) / 2.0)
        return worst

    def hausdorff(self, other: "IntervalSet") -> float:
        return max(self.excess_over(other), other.excess_over(self))

    def subset_of(self, other: "IntervalSet", tol: float = 0.0) -> bool:
        return self.excess_over(other) <= tol

    def max_gap(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Largest stretch of [lo, hi] not covered, counting the boundaries."""
        if not self._ivs:
            return hi - lo
        gap = self._ivs[0][0] - lo
        for (_, b1), (a2, _) in zip(self._ivs, self._ivs[1:]):
            gap = max(gap, a2 - b1)
        gap = max(gap, hi - self._ivs[-1][1])
        return max(gap, 0.0)

    def sample(self, pitch: float) -> np.ndarray:
        """Grid of points covering the set at the given pitch.

        Every interval contributes both endpoints plus interior points
        spaced at most ``pitch`` apart; degenerate intervals contribute
        their single point.
        """
        if pitch <= 0:
            raise ConstraintError("sample pitch must be positive")
        pts: list[np.ndarray] = []
        for a, b in self._ivs:
            if b == a:
                pts.append(np.array([a]))
            else:
                k = max(1, int(np.ceil((b - a) / pitch)))
                pts.append(np.linspace(a, b, k + 1))
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def to_json(self) -> list[list[float]]:
        return [[a, b] for a, b in self._ivs]


EMPTY = IntervalSet()
