"""Numeric engine for segment relations on [0, 1].

Orbit simulation under pluggable successor policies, density diagnostics,
inner/outer invariant-closure iteration, and tail estimates of forward and
backward limit sets.  Everything here is a resolution-bounded diagnostic:
results certify nothing beyond the stated sample counts, grid pitches, and
tolerances, and reports must say so.

The two closure modes are deliberately distinct and never conflated. The
inner closure iterates exact images from the start set and is the hull of
finitely reachable points; the outer closure fattens by ``epsilon`` before
each image and over-approximates the smallest closed strongly-invariant
superset.  There are relations where the two genuinely separate (a ramp
accumulating on a point whose fiber floods the whole space), which is why
both exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError
from .intervals import MERGE_TOL, IntervalSet
from .relations import (FiniteRelation, OrbitPrefix, Relation, SegmentRelation,
                        greedy_segment_choice)

DEFAULT_DENSITY_EPS = 1e-2
DEFAULT_ORBIT_STEPS = 10_000
DEFAULT_GRID_PITCH = 1e-4
GEOMETRIC_WITNESS_DEPTH = 60


# ---------------------------------------------------------------------------
# density diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityDiagnostic:
    """Gap statistics of a finite sample of [0, 1], boundaries included."""

    sample_count: int
    max_gap: float

    def dense_at(self, eps: float) -> bool:
        return self.max_gap < eps


def density(points) -> DensityDiagnostic:
    """max-gap diagnostic: the largest gap between consecutive sorted points,
    counting the distances to 0 and 1 as gaps."""
    pts = np.sort(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ConstraintError("density needs a nonempty sample")
    if pts[0] < 0.0 or pts[-1] > 1.0:
        raise ConstraintError("sample points must lie in [0, 1]")
    gaps = np.diff(np.concatenate(([0.0], pts, [1.0])))
    return DensityDiagnostic(sample_count=int(pts.size), max_gap=float(gaps.max()))


# ---------------------------------------------------------------------------
# orbit simulation
# ---------------------------------------------------------------------------

def _simulate_segment(rel: SegmentRelation, x0: float, steps: int,
                      policy: str, rng) -> OrbitPrefix:
    x0 = SegmentRelation._check_point(x0)
    points = [x0]
    truncated = False
    visited = np.array([x0], dtype=float)
    last_seen = {x0: 0}
    for k in range(steps):
        pieces = rel.fiber_pieces(points[-1])
        if not pieces:
            truncated = True
            break
        if policy == "first":
            nxt = IntervalSet(pieces).min()
        elif policy == "random":
            a, b = pieces[int(rng.integers(len(pieces)))]
            nxt = float(a) if a == b else float(rng.uniform(a, b))
        else:
            nxt = greedy_segment_choice(IntervalSet(pieces), visited, last_seen)
        points.append(nxt)
        if policy == "greedy":
            i = int(np.searchsorted(visited, nxt))
            if i == visited.size or visited[i] != nxt:
                visited = np.insert(visited, i, nxt)
            last_seen[nxt] = k + 1
    return OrbitPrefix(tuple(points), "segment", truncated)


def _simulate_finite(rel: FiniteRelation, x0: int, steps: int,
                     policy: str, rng) -> OrbitPrefix:
    succ = [sorted(rel.successors(x)) for x in range(rel.size)]
    if not 0 <= int(x0) < rel.size:
        raise ConstraintError(f"start point {x0} out of range")
    points = [int(x0)]
    truncated = False
    seen = {points[0]}
    last_seen = {points[0]: 0}
    for k in range(steps):
        options = succ[points[-1]]
        if not options:
            truncated = True
            break
        if policy == "first":
            nxt = options[0]
        elif policy == "random":
            nxt = options[int(rng.integers(len(options)))]
        else:
            fresh = [w for w in options if w not in seen]
            nxt = fresh[0] if fresh else min(options, key=lambda w: (last_seen[w], w))
        points.append(nxt)
        seen.add(nxt)
        last_seen[nxt] = k + 1
    return OrbitPrefix(tuple(points), "finite", truncated)


def simulate_orbit(rel: Relation, x0, steps: int, policy: str = "first",
                   seed: int = 0) -> OrbitPrefix:
    """Forward orbit prefix of length <= steps + 1.

    Deterministic given (policy, seed); truncated early only at a dead end.
    The greedy policy steers each step toward the biggest hole in the set of
    points visited so far, which is how a single walk is made to sweep the
    whole space when the relation allows interleaving.
    """
    if steps < 1:
        raise ConstraintError("steps must be >= 1")
    if policy not in ("first", "random", "greedy"):
        raise ConstraintError(f"unknown policy {policy!r}")
    rng = np.random.default_rng(seed)
    if isinstance(rel, FiniteRelation):
        return _simulate_finite(rel, x0, steps, policy, rng)
    return _simulate_segment(rel, x0, steps, policy, rng)


def simulate_backward_orbit(rel: Relation, x0, steps: int, policy: str = "first",
                            seed: int = 0) -> OrbitPrefix:
    """Backward orbit prefix: the forward simulation on the inverse relation."""
    return simulate_orbit(rel.inverse(), x0, steps, policy, seed)


# ---------------------------------------------------------------------------
# limit-set tail estimates
# ---------------------------------------------------------------------------

def omega_estimate(orbit: OrbitPrefix, burn_in: float = 0.5) -> np.ndarray:
    """Tail of the orbit after discarding the first ``burn_in`` fraction.

    The tail sample is the numeric proxy for the forward limit set of the
    walk; feed it to :func:`density`.
    """
    if not 0.0 <= burn_in < 1.0:
        raise ConstraintError("burn_in must lie in [0, 1)")
    pts = orbit.as_array()
    start = int(len(pts) * burn_in)
    tail = pts[start:]
    if tail.size == 0:
        raise ConstraintError("orbit too short for the requested burn-in")
    return tail


def alpha_estimate(backward_orbit: OrbitPrefix, burn_in: float = 0.5) -> np.ndarray:
    """Tail estimate of the backward limit set; expects a backward orbit."""
    return omega_estimate(backward_orbit, burn_in)


# ---------------------------------------------------------------------------
# invariant closure iteration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosureResult:
    set: IntervalSet
    iterations: int
    converged: bool
    mode: str
    epsilon: float

    def to_json(self) -> dict:
        return {"intervals": self.set.to_json(), "mode": self.mode,
                "epsilon": self.epsilon, "iterations": self.iterations,
                "converged": self.converged}


def invariant_closure(rel: SegmentRelation, s0: IntervalSet, mode: str,
                      epsilon: float = 0.0, max_iter: int = 200) -> ClosureResult:
    """Iterate S <- S u image(fatten(S, epsilon)) until stable.

    ``inner`` mode (epsilon forced to 0) grows the exact reachable hull and
    never fattens; ``outer`` mode fattens by epsilon before each image and
    converges onto an epsilon-resolution superset of the smallest closed
    strongly-invariant set containing S0.  Stability means the new set
    stays within ``MERGE_TOL`` of the previous one; hitting ``max_iter``
    first is reported via ``converged=False``, not an error.
    """
    if mode not in ("inner", "outer"):
        raise ConstraintError(f"closure mode must be 'inner' or 'outer', got {mode!r}")
    if mode == "inner" and epsilon != 0.0:
        raise ConstraintError("inner closure requires epsilon = 0")
    if epsilon < 0:
        raise ConstraintError("epsilon must be nonnegative")
    if s0.is_empty:
        raise ConstraintError("closure start set must be nonempty")
    current = s0
    converged = False
    iterations = 0
    for _ in range(max_iter):
        base = current.fatten(epsilon) if epsilon > 0 else current
        grown = current.union(rel.image(base))
        iterations += 1
        if grown.excess_over(current) <= MERGE_TOL:
            current = grown
            converged = True
            break
        current = grown
    return ClosureResult(set=current, iterations=iterations, converged=converged,
                         mode=mode, epsilon=epsilon)


# ---------------------------------------------------------------------------
# invariance checks for explicit candidate sets
# ---------------------------------------------------------------------------

def _segment_abscissa_for(rel: SegmentRelation, piece: tuple[float, float],
                          y: float) -> float:
    lo, hi = piece
    for s in rel.segments:
        f = s.fiber_over(lo, hi)
        if f is None or not (f[0] <= y <= f[1]):
            continue
        if s.is_vertical:
            return s.x1
        if s.y2 == s.y1:
            return max(lo, s.xmin)
        t = (y - s.y1) / (s.y2 - s.y1)
        x = s.x1 + t * (s.x2 - s.x1)
        return min(max(x, max(lo, s.xmin)), min(hi, s.xmax))
    return lo


def check_invariant_candidate(rel: SegmentRelation, a: IntervalSet, kind: str,
                              grid_pitch: float = DEFAULT_GRID_PITCH):
    """Numeric invariance check of an explicit closed set.

    Strong kinds compare the exact image against the tolerance-fattened
    candidate; weak kinds sample the candidate at ``grid_pitch`` and demand a
    successor inside it for every sampled point with a successor at all.
    Returns ``(True, None)`` or ``(False, violation)`` where the violation is
    a pair (x, y) for strong kinds and the failing point x for weak kinds.
    """
    if kind not in ("forward-1", "forward-inf", "backward-1", "backward-inf"):
        raise ConstraintError(f"unknown invariance kind {kind!r}")
    if a.is_empty:
        raise ConstraintError("candidate set must be nonempty")
    direction, strength = kind.split("-")
    r = rel if direction == "forward" else rel.inverse()
    target = a.fatten(rel.tolerance)
    if strength == "inf":
        for piece in a.intervals:
            img = r.image(IntervalSet([piece]))
            for lo, hi in img.intervals:
                for y in (lo, hi, (lo + hi) / 2.0):
                    if not target.contains(y):
                        return False, (_segment_abscissa_for(r, piece, y), y)
                gaps = [(g1, g2) for (_, g1), (g2, _) in
                        zip(target.intervals, target.intervals[1:])]
                for g1, g2 in gaps:
                    mid = (g1 + g2) / 2.0
                    if lo <= mid <= hi:
                        return False, (_segment_abscissa_for(r, piece, mid), mid)
        return True, None
    for x in a.sample(grid_pitch):
        fiber = r.successors(float(x))
        if fiber.is_empty:
            continue  # not in the domain projection: vacuous
        if fiber.intersect(target).is_empty:
            return False, float(x)
    return True, None


# ---------------------------------------------------------------------------
# witness search over a candidate library
# ---------------------------------------------------------------------------

_KIND_TO_INVARIANCE = {"1": "forward-1", "inf": "forward-inf",
                       "1back": "backward-1", "infback": "backward-inf"}


def geometric_set(ascending: bool = True,
                  depth: int = GEOMETRIC_WITNESS_DEPTH) -> IntervalSet:
    """{0} u {1 - 2^-k} u {1}, or its mirror image."""
    pts = [0.0, 1.0] + [1.0 - 0.5 ** k for k in range(1, depth + 1)]
    if not ascending:
        pts = [1.0 - p for p in pts]
    return IntervalSet.from_points(pts)


def witness_candidates(rel: SegmentRelation, grid: int = 100):
    """Candidate proper closed subsets, cheapest and most pointed first."""
    for k in range(1, grid):
        yield (f"point {k}/{grid}", IntervalSet.from_points([k / grid]))
    yield ("geometric scale toward 1", geometric_set(True))
    yield ("geometric scale toward 0", geometric_set(False))
    for name, pairs in (("left half", [(0.0, 0.5)]), ("right half", [(0.5, 1.0)]),
                        ("middle half", [(0.25, 0.75)]),
                        ("first and third quarters", [(0.0, 0.25), (0.5, 0.75)])):
        yield (name, IntervalSet(pairs))
    p1, p2 = rel.projections()
    yield ("domain projection", p1)
    yield ("range projection", p2)


def search_segment_witness(rel: SegmentRelation, kind: str, grid: int = 100,
                           grid_pitch: float = DEFAULT_GRID_PITCH):
    """A proper nonempty invariant candidate falsifying ``kind``-minimality.

    Subset kinds scan the candidate library; the every-orbit kinds look for
    a dead end or a fixed point (a constant orbit is a non-dense orbit).
    Returns ``(description, witness-dict)`` or None when the library is
    exhausted; for the some-orbit and union kinds non-density of all orbits
    is not certifiable numerically, so the search reports exhaustion.
    """
    if kind in _KIND_TO_INVARIANCE:
        inv_kind = _KIND_TO_INVARIANCE[kind]
        for name, candidate in witness_candidates(rel, grid):
            if candidate.is_empty or candidate.max_gap() == 0.0:
                continue  # empty or covers everything: not a proper witness
            ok, _ = check_invariant_candidate(rel, candidate, inv_kind, grid_pitch)
            if ok:
                return name, {"type": "subset", "intervals": candidate.to_json()}
        return None
    if kind in ("1plus", "1omega", "1minus", "1alpha"):
        backward = kind in ("1minus", "1alpha")
        r = rel.inverse() if backward else rel
        direction = "backward" if backward else "forward"
        for k in range(0, grid + 1):
            x = k / grid
            if r.successors(x).is_empty:
                return (f"dead end at {x}",
                        {"type": "dead_end", "point": x, "direction": direction})
        for k in range(0, grid + 1):
            x = k / grid
            if rel.contains(x, x):
                return (f"fixed point at {x}",
                        {"type": "constant_orbit", "point": x, "direction": direction})
        return None
    return None


# ---------------------------------------------------------------------------
# whole-relation diagnostic (the segment-backend "classification")
# ---------------------------------------------------------------------------

def segment_diagnostic(rel: SegmentRelation, steps: int = 2000, seed: int = 0,
                       epsilon: float = DEFAULT_DENSITY_EPS, grid: int = 100,
                       starts: int = 10) -> dict:
    """Resolution-bounded minimality diagnostic for a segment relation.

    Never a certificate: "refuted" facts rest on an exact finite witness,
    "plausible" facts only on sampled orbits and closures at the stated
    resolution.
    """
    rng = np.random.default_rng(seed)
    p1, p2 = rel.projections()
    sample_starts = [float(x) for x in rng.uniform(0.0, 1.0, size=starts)]
    out: dict = {
        "backend": "segments",
        "label": "resolution-bounded diagnostic",
        "epsilon": epsilon, "steps": steps, "seed": seed,
        "p1": p1.to_json(), "p2": p2.to_json(),
        "p1_full": p1.max_gap() == 0.0, "p2_full": p2.max_gap() == 0.0,
        "kinds": {},
    }

    def put(kind: str, status: str, **extra) -> None:
        out["kinds"][kind] = {"status": status, **extra}

    # subset kinds: exact candidate witnesses refute; outer-closure flooding
    # from sampled starts is the positive signature
    for kind in ("1", "inf", "1back", "infback"):
        hit = search_segment_witness(rel, kind, grid)
        if hit is not None:
            put(kind, "refuted", witness=hit[1], witness_name=hit[0])
            continue
        r = rel if kind in ("1", "inf") else rel.inverse()
        floods = all(
            invariant_closure(r, IntervalSet.from_points([x]), "outer",
                              epsilon=1e-3, max_iter=120).set.max_gap() < epsilon
            for x in sample_starts)
        put(kind, "plausible" if floods else "undetermined",
            evidence="outer closure floods from sampled starts" if floods else None)

    # orbit kinds
    for prefix_kind, backward in (("plus", False), ("minus", True)):
        r = rel.inverse() if backward else rel
        one = f"1{prefix_kind}"
        hit = search_segment_witness(rel, one, grid)
        sim = [simulate_orbit(r, x, steps, "greedy", seed) for x in sample_starts]
        dense = [density(np.asarray(o.points)).dense_at(epsilon) and not o.truncated
                 for o in sim]
        if hit is not None:
            put(one, "refuted", witness=hit[1], witness_name=hit[0])
        else:
            first = [simulate_orbit(r, x, steps, "first", seed) for x in sample_starts]
            fdense = [density(np.asarray(o.points)).dense_at(epsilon)
                      and not o.truncated for o in first]
            put(one, "plausible" if all(dense) and all(fdense) else "undetermined")
        put(f"2{prefix_kind}", "plausible" if all(dense) else "undetermined",
            evidence={"greedy_dense_starts": int(sum(dense)), "starts": starts})
        inner = [invariant_closure(r, IntervalSet.from_points([x]), "inner",
                                   max_iter=120) for x in sample_starts]
        refuting = next((c for c in inner
                         if c.converged and c.set.max_gap() >= epsilon), None)
        if refuting is not None:
            put(f"3{prefix_kind}", "refuted",
                witness={"type": "reachable_hull", "intervals": refuting.set.to_json()})
        else:
            put(f"3{prefix_kind}",
                "plausible" if all(c.set.max_gap() < epsilon for c in inner)
                else "undetermined")

    # limit-set kinds mirror the orbit kinds at this resolution
    for src, dst in (("1plus", "1omega"), ("2plus", "2omega"),
                     ("1minus", "1alpha"), ("2minus", "2alpha")):
        out["kinds"][dst] = dict(out["kinds"][src])
    for prefix_kind, backward in (("omega", False), ("alpha", True)):
        r = rel.inverse() if backward else rel
        ok = all(
            density(omega_estimate(simulate_orbit(r, x, steps, "greedy", seed),
                                   0.5)).dense_at(epsilon)
            for x in sample_starts)
        put(f"3{prefix_kind}", "plausible" if ok else "undetermined",
            evidence={"tail_dense_starts": starts if ok else None})
    return out
