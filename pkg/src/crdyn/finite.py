"""Exact invariance and minimality analysis on finite relations.

Sixteen minimality kinds are decided: four subset kinds (weak/strong
invariance, forward and backward) and twelve orbit/limit kinds (every-orbit,
some-orbit, union-of-orbits; orbit closure or limit set; forward or
backward).  Every kind has two deciders:

* :func:`decide_minimal_oracle` -- the definition evaluated by exhaustion
  (subset enumeration, infinite-walk fixpoints, product-state searches),
  capped at small sizes;
* :func:`decide_minimal_fast` -- graph reformulations (strong connectivity;
  out-degrees plus no-cycle-avoiding-a-vertex) that run to n ~ 24.

The fast reformulations are the implementer's derivations and are only
trusted because the audit (`crdyn.audit`) checks them against the oracle on
every instance it enumerates or samples.

On a finite discrete carrier every subset is closed, closures are
identities, "dense" means "everything", and the limit set of a walk is the
set of vertices it visits infinitely often.  Backward kinds are the forward
kinds of the inverse relation throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import CapExceededError, ConstraintError
from .relations import FiniteRelation

#: Canonical kind order; these strings are also the wire names in reports.
KINDS = ("1", "inf", "1plus", "2plus", "3plus",
         "1back", "infback", "1minus", "2minus", "3minus",
         "1omega", "2omega", "3omega", "1alpha", "2alpha", "3alpha")

SUBSET_KINDS = ("1", "inf", "1back", "infback")
FORWARD_ORBIT_KINDS = ("1plus", "2plus", "3plus", "1omega", "2omega", "3omega")
BACKWARD_ORBIT_KINDS = ("1minus", "2minus", "3minus", "1alpha", "2alpha", "3alpha")

INVARIANCE_KINDS = ("forward-1", "forward-inf", "backward-1", "backward-inf")

ORACLE_SUBSET_CAP = 12
ORACLE_ORBIT_CAP = 8

# bit positions in the orbit-oracle bitfield, per direction
_ORBIT_BIT = {"1plus": 0, "2plus": 1, "3plus": 2, "1omega": 3, "2omega": 4, "3omega": 5,
              "1minus": 0, "2minus": 1, "3minus": 2, "1alpha": 3, "2alpha": 4, "3alpha": 5}

_BACKWARD = frozenset(("1back", "infback") + BACKWARD_ORBIT_KINDS)


def _check_kind(kind: str) -> str:
    if kind not in KINDS:
        raise ConstraintError(f"unknown minimality kind {kind!r}")
    return kind


def _masks_for(rel: FiniteRelation, kind: str) -> np.ndarray:
    return rel.pred_masks() if kind in _BACKWARD else rel.succ_masks()


def _subset_to_mask(rel: FiniteRelation, subset) -> int:
    mask = 0
    for x in subset:
        x = int(x)
        if not 0 <= x < rel.size:
            raise ConstraintError(f"subset point {x} out of range")
        mask |= 1 << x
    return mask


def _mask_to_points(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if (mask >> i) & 1]


# ---------------------------------------------------------------------------
# invariance
# ---------------------------------------------------------------------------

def is_invariant(rel: FiniteRelation, subset, kind: str) -> bool:
    """Literal invariance of a vertex subset (may be empty or everything)."""
    if kind not in INVARIANCE_KINDS:
        raise ConstraintError(f"unknown invariance kind {kind!r}")
    direction, strength = kind.split("-")
    masks = rel.succ_masks() if direction == "forward" else rel.pred_masks()
    a = _subset_to_mask(rel, subset)
    return bool(K.is_invariant_mask(masks, a, strength == "1"))


# ---------------------------------------------------------------------------
# deciders
# ---------------------------------------------------------------------------

def decide_minimal_oracle(rel: FiniteRelation, kind: str) -> bool:
    """The definition of ``kind``-minimality, evaluated by brute force."""
    _check_kind(kind)
    masks = _masks_for(rel, kind)
    if kind in SUBSET_KINDS:
        if rel.size > ORACLE_SUBSET_CAP:
            raise CapExceededError(
                f"subset oracle capped at n <= {ORACLE_SUBSET_CAP}, got {rel.size}")
        one = kind in ("1", "1back")
        return int(K.invariant_subset_scan(masks, one)) < 0
    if rel.size > ORACLE_ORBIT_CAP:
        raise CapExceededError(
            f"orbit oracle capped at n <= {ORACLE_ORBIT_CAP}, got {rel.size}")
    flags = int(K.orbit_oracle_flags(masks))
    return bool((flags >> _ORBIT_BIT[kind]) & 1)


def decide_minimal_fast(rel: FiniteRelation, kind: str) -> bool:
    """Polynomial decider for ``kind``-minimality (oracle-validated)."""
    _check_kind(kind)
    masks = _masks_for(rel, kind)
    if kind in ("1", "1plus", "1omega", "1back", "1minus", "1alpha"):
        return bool(K.one_family_minimal(masks))
    if kind in _BACKWARD:
        return bool(K.strongly_connected(rel.pred_masks(), rel.succ_masks()))
    return bool(K.strongly_connected(rel.succ_masks(), rel.pred_masks()))


def oracle_flag_vector(rel: FiniteRelation) -> dict[str, bool]:
    return {k: decide_minimal_oracle(rel, k) for k in KINDS}


def fast_flag_vector(rel: FiniteRelation) -> dict[str, bool]:
    return {k: decide_minimal_fast(rel, k) for k in KINDS}


# ---------------------------------------------------------------------------
# limit sets of explicit eventually periodic walks
# ---------------------------------------------------------------------------

def _check_walk(rel: FiniteRelation, preperiod, cycle, backward: bool) -> None:
    if not cycle:
        raise ConstraintError("walk cycle must be nonempty")
    seq = list(preperiod) + list(cycle)
    pairs = list(zip(seq, seq[1:])) + [(cycle[-1], cycle[0])]
    for a, b in pairs:
        inside = rel.contains(b, a) if backward else rel.contains(a, b)
        if not inside:
            raise ConstraintError(f"walk step ({a}, {b}) is not edge-consistent")


def omega_set(rel: FiniteRelation, preperiod, cycle) -> frozenset[int]:
    """Limit set of the eventually periodic forward walk: its cycle vertices."""
    _check_walk(rel, preperiod, cycle, backward=False)
    return frozenset(int(v) for v in cycle)


def alpha_set(rel: FiniteRelation, preperiod, cycle) -> frozenset[int]:
    """Limit set of an eventually periodic backward walk."""
    _check_walk(rel, preperiod, cycle, backward=True)
    return frozenset(int(v) for v in cycle)


# ---------------------------------------------------------------------------
# vertex-shift minimality
# ---------------------------------------------------------------------------

def is_shift_minimal(rel: FiniteRelation) -> bool:
    """Minimality of the shift on the infinite walks of the inverse relation.

    Requires full projections.  The walk space is supported on the vertices
    with infinite outgoing walks in the inverse graph; the shift is minimal
    exactly when that essential subgraph is one simple cycle through all its
    vertices and nothing of the graph lies outside it.
    """
    p1, p2 = rel.projections()
    if len(p1) != rel.size or len(p2) != rel.size:
        raise ConstraintError("shift minimality requires both projections onto everything")
    n = rel.size
    pred = rel.pred_masks()
    essential = int(K.inf_vertices(pred, (1 << n) - 1))
    if essential != (1 << n) - 1:
        return False
    # single simple cycle: out-degree one everywhere and one orbit of length n
    nxt = []
    for x in range(n):
        row = int(pred[x])
        if row & (row - 1) or row == 0:
            return False
        nxt.append(row.bit_length() - 1)
    seen = 0
    v = 0
    for _ in range(n):
        seen |= 1 << v
        v = nxt[v]
    return v == 0 and seen == (1 << n) - 1


# ---------------------------------------------------------------------------
# witnesses
# ---------------------------------------------------------------------------

def _find_cycle_within(succ: np.ndarray, allowed: int) -> list[int] | None:
    """A simple cycle inside the induced subgraph, or None (Python-side DFS)."""
    n = succ.shape[0]
    color = [0] * n
    stack: list[int] = []

    def visit(root: int) -> list[int] | None:
        frames = [(root, 0)]
        color[root] = 1
        stack.append(root)
        while frames:
            v, w = frames[-1]
            row = int(succ[v]) & allowed
            nxt = -1
            while w < n:
                if (row >> w) & 1:
                    nxt = w
                    break
                w += 1
            frames[-1] = (v, w + 1)
            if nxt < 0:
                color[v] = 2
                stack.pop()
                frames.pop()
                continue
            if color[nxt] == 1:
                i = stack.index(nxt)
                return stack[i:]
            if color[nxt] == 0:
                color[nxt] = 1
                stack.append(nxt)
                frames.append((nxt, 0))
        return None

    for root in range(n):
        if (allowed >> root) & 1 and color[root] == 0:
            cyc = visit(root)
            if cyc is not None:
                k = cyc.index(min(cyc))
                return cyc[k:] + cyc[:k]
    return None


def _subset_witness(rel: FiniteRelation, kind: str) -> dict:
    masks = _masks_for(rel, kind)
    one = kind in ("1", "1back")
    if rel.size <= ORACLE_SUBSET_CAP:
        mask = int(K.invariant_subset_scan(masks, one))
        if mask >= 0:
            return {"type": "subset", "points": _mask_to_points(mask)}
    # constructive fallbacks beyond the scan cap
    n = rel.size
    full = (1 << n) - 1
    if one:
        for x in range(n):
            if masks[x] == 0:
                return {"type": "subset", "points": [x]}
        cyc = next((c for v in range(n)
                    if (c := _find_cycle_within(masks, full & ~(1 << v))) is not None), None)
        if cyc is not None:
            return {"type": "subset", "points": sorted(cyc)}
    else:
        for x in range(n):
            closure = int(K.reach_closure(masks, 1 << x))
            if closure != full:
                return {"type": "subset", "points": _mask_to_points(closure)}
    raise ConstraintError(f"no witness exists: relation is {kind}-minimal")


def _orbit_witness(rel: FiniteRelation, kind: str) -> dict:
    masks = _masks_for(rel, kind)
    direction = "backward" if kind in _BACKWARD else "forward"
    n = rel.size
    full = (1 << n) - 1
    inf = int(K.inf_vertices(masks, full))
    if inf != full:
        x = _mask_to_points(full & ~inf)[0]
        return {"type": "dead_end", "point": x, "direction": direction}
    for v in range(n):
        cyc = _find_cycle_within(masks, full & ~(1 << v))
        if cyc is not None:
            return {"type": "cycle", "points": cyc, "direction": direction}
    raise ConstraintError(f"no witness exists: relation is {kind}-minimal")


def find_witness(rel: FiniteRelation, kind: str) -> dict:
    """A witness falsifying ``kind``-minimality (the kind must be false)."""
    _check_kind(kind)
    if kind in SUBSET_KINDS:
        return _subset_witness(rel, kind)
    return _orbit_witness(rel, kind)


# ---------------------------------------------------------------------------
# classification reports
# ---------------------------------------------------------------------------

@dataclass
class MinimalityReport:
    """All sixteen flags plus projection facts and falsifying witnesses."""

    flags: dict[str, bool]
    p1_full: bool
    p2_full: bool
    witnesses: dict[str, dict] = field(default_factory=dict)

    def flag_vector(self) -> tuple[bool, ...]:
        return tuple(self.flags[k] for k in KINDS)

    def to_json(self) -> dict:
        return {"flags": {k: self.flags[k] for k in KINDS},
                "p1_full": self.p1_full,
                "p2_full": self.p2_full,
                "witnesses": self.witnesses}


def classify(rel: FiniteRelation) -> MinimalityReport:
    """Classify with the fast deciders and attach a witness per false flag."""
    flags = fast_flag_vector(rel)
    p1, p2 = rel.projections()
    witnesses = {k: find_witness(rel, k) for k in KINDS if not flags[k]}
    return MinimalityReport(flags=flags, p1_full=len(p1) == rel.size,
                            p2_full=len(p2) == rel.size, witnesses=witnesses)
