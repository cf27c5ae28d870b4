"""Bitmask kernels for the finite backend.

Everything here works on ``succ``: an ``int64`` array where ``succ[x]`` is
the bitmask of successors of vertex ``x`` (so ``n = succ.shape[0] <= 24``
and every subset of vertices is one machine word).

These loops are the hot path of the theorem audit (tens of thousands of
instances, sixteen decision kinds each, both a brute-force oracle and a
fast decider per kind), so they are compiled with numba's ``@njit`` by
default.  Setting the environment variable ``CRDYN_NUMBA=0`` (or numba
being unavailable) selects the identical pure-Python path; see
``benchmarks/bench_kernels.py`` for the measured gap.

Two deliberately separate code routes live here:

* oracle machinery -- definition-level searches (subset enumeration,
  shrinking fixpoints for infinite-walk existence, product-state walks
  over (vertex, visited-set) pairs);
* fast machinery -- graph criteria (double-BFS strong connectivity,
  colour-DFS cycle detection) that the audit validates against the oracle
  before anything trusts them.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    flag = os.environ.get("CRDYN_NUMBA", "").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:  # pragma: no cover - numba is a declared dependency
        return False
    return True


NUMBA_ENABLED = _numba_requested()

if NUMBA_ENABLED:
    from numba import njit

    def _jit(fn):
        return njit(cache=True)(fn)
else:
    def _jit(fn):
        return fn


# ---------------------------------------------------------------------------
# shared reachability primitives
# ---------------------------------------------------------------------------

@_jit
def reach_closure(succ, start_mask):
    """Vertices reachable (in >= 0 steps) from any vertex of ``start_mask``."""
    n = succ.shape[0]
    cur = start_mask
    while True:
        nxt = cur
        for x in range(n):
            if (cur >> x) & 1:
                nxt |= succ[x]
        if nxt == cur:
            return cur
        cur = nxt


@_jit
def inf_vertices(succ, allowed):
    """Vertices of ``allowed`` from which an infinite walk stays in ``allowed``.

    Shrinking fixpoint: repeatedly drop vertices with no successor left in
    the surviving set.  After k rounds the survivors are exactly the starts
    of walks of length k, so the fixpoint is the infinite-walk set.
    """
    n = succ.shape[0]
    cur = allowed
    while True:
        nxt = 0
        for x in range(n):
            if (cur >> x) & 1 and (succ[x] & cur) != 0:
                nxt |= 1 << x
        if nxt == cur:
            return cur
        cur = nxt


# ---------------------------------------------------------------------------
# fast deciders (validated against the oracle by the audit)
# ---------------------------------------------------------------------------

@_jit
def strongly_connected(succ, pred):
    """Every vertex reaches and is reached by vertex 0."""
    n = succ.shape[0]
    full = (1 << n) - 1
    if reach_closure(succ, 1) != full:
        return False
    return reach_closure(pred, 1) == full


@_jit
def has_cycle_within(succ, allowed):
    """Colour DFS: does the subgraph induced on ``allowed`` contain a cycle?"""
    n = succ.shape[0]
    color = np.zeros(n, np.uint8)  # 0 fresh, 1 on stack, 2 finished
    stack_v = np.empty(n, np.int64)
    stack_w = np.empty(n, np.int64)
    for root in range(n):
        if (allowed >> root) & 1 == 0 or color[root] != 0:
            continue
        sp = 0
        stack_v[0] = root
        stack_w[0] = 0
        color[root] = 1
        while sp >= 0:
            v = stack_v[sp]
            w = stack_w[sp]
            row = succ[v] & allowed
            nxt = -1
            while w < n:
                if (row >> w) & 1:
                    nxt = w
                    break
                w += 1
            if nxt < 0:
                color[v] = 2
                sp -= 1
            else:
                stack_w[sp] = nxt + 1
                if color[nxt] == 1:
                    return True
                if color[nxt] == 0:
                    color[nxt] = 1
                    sp += 1
                    stack_v[sp] = nxt
                    stack_w[sp] = 0
    return False


@_jit
def one_family_minimal(succ):
    """Fast criterion shared by the 1 / 1-orbit / 1-limit kinds.

    Every vertex needs a successor, and no cycle may avoid any vertex
    (dropping one vertex must leave an acyclic subgraph).
    """
    n = succ.shape[0]
    full = (1 << n) - 1
    for x in range(n):
        if succ[x] == 0:
            return False
    for v in range(n):
        if has_cycle_within(succ, full & ~(1 << v)):
            return False
    return True


# ---------------------------------------------------------------------------
# definition-level oracle: subset kinds
# ---------------------------------------------------------------------------

@_jit
def is_invariant_mask(succ, a, one_kind):
    """Literal invariance test for the vertex set ``a``.

    ``one_kind`` selects the weak reading (every member with a successor
    keeps one inside ``a``); otherwise the strong reading (all successors
    of members stay inside ``a``).
    """
    n = succ.shape[0]
    full = (1 << n) - 1
    for x in range(n):
        if (a >> x) & 1:
            s = succ[x]
            if one_kind:
                if s != 0 and (s & a) == 0:
                    return False
            else:
                if (s & (full & ~a)) != 0:
                    return False
    return True


@_jit
def invariant_subset_scan(succ, one_kind):
    """Least proper nonempty invariant set as a bitmask, or -1 if none.

    Enumerates all 2^n - 2 candidates in ascending mask order, which is
    lexicographic order on characteristic vectors; the first hit is the
    canonical witness.
    """
    n = succ.shape[0]
    full = (1 << n) - 1
    for a in range(1, full):
        if is_invariant_mask(succ, a, one_kind):
            return a
    return -1


# ---------------------------------------------------------------------------
# definition-level oracle: orbit and limit-set kinds
# ---------------------------------------------------------------------------

@_jit
def covering_loop_exists(succ, s):
    """Is there a closed walk confined to ``s`` whose vertex set is all of ``s``?

    Product-state search over (vertex, visited-set) pairs starting from the
    lowest vertex of ``s``; a hit on (start, s) after at least one transition
    is exactly a covering loop.  Vertex sets of closed walks are the
    realisable limit sets of eventually periodic walks.
    """
    n = succ.shape[0]
    if s == 0:
        return False
    v0 = 0
    while (s >> v0) & 1 == 0:
        v0 += 1
    size = n << n
    seen = np.zeros(size, np.uint8)
    stack = np.empty(size, np.int64)
    start = (v0 << n) | (1 << v0)
    target = (v0 << n) | s
    seen[start] = 1
    stack[0] = start
    top = 1
    while top > 0:
        top -= 1
        st = stack[top]
        v = st >> n
        mask = st & ((1 << n) - 1)
        row = succ[v] & s
        for w in range(n):
            if (row >> w) & 1:
                st2 = (w << n) | (mask | (1 << w))
                if st2 == target:
                    return True
                if seen[st2] == 0:
                    seen[st2] = 1
                    stack[top] = st2
                    top += 1
    return False


@_jit
def orbit_oracle_flags(succ):
    """All six forward orbit/limit minimality kinds, decided from definitions.

    Returned bitfield: 1 = every-orbit-dense (with totality), 2 = some-orbit-
    dense from each point, 4 = union-of-orbits dense from each point,
    8/16/32 = the same three with "dense" replaced by "limit set is
    everything".  Quantification over infinite walks happens through
    (vertex, visited-set) product states and infinite-walk fixpoints.
    """
    n = succ.shape[0]
    full = (1 << n) - 1
    inf_full = inf_vertices(succ, full)
    all_inf = inf_full == full

    # A walk with a small orbit set is an infinite walk confined to a
    # proper vertex subset; scan all of them.
    ok_every_orbit = all_inf
    if ok_every_orbit:
        for s in range(1, full):
            if inf_vertices(succ, s) != 0:
                ok_every_orbit = False
                break

    # A walk with a small limit set eventually rides a closed walk covering
    # a proper subset; scan all candidate subsets.
    ok_every_limit = all_inf
    if ok_every_limit:
        for s in range(1, full):
            if covering_loop_exists(succ, s):
                ok_every_limit = False
                break

    # Union-of-limit-sets kind: y occurs in some limit set from x iff y is
    # reachable from x and sits on a closed walk.
    all_reach_full = True
    on_cycle_all = True
    for x in range(n):
        if reach_closure(succ, 1 << x) != full:
            all_reach_full = False
        if (reach_closure(succ, succ[x]) >> x) & 1 == 0:
            on_cycle_all = False
    ok_union_limit = all_reach_full and on_cycle_all

    ok_some_orbit = True
    ok_union_orbit = True
    ok_some_limit = True
    size = n << n
    seen = np.zeros(size, np.uint8)
    stack = np.empty(size, np.int64)
    for x in range(n):
        if not (ok_some_orbit or ok_union_orbit or ok_some_limit):
            break
        for i in range(size):
            seen[i] = 0
        start = (x << n) | (1 << x)
        seen[start] = 1
        stack[0] = start
        top = 1
        # a zero-step walk already realises the start state
        got_full = (1 << x) == full and (inf_full >> x) & 1 == 1
        cover = (1 << x) if (inf_full >> x) & 1 == 1 else 0
        back_full = False
        while top > 0:
            top -= 1
            st = stack[top]
            v = st >> n
            mask = st & full
            row = succ[v]
            for w in range(n):
                if (row >> w) & 1:
                    m2 = mask | (1 << w)
                    st2 = (w << n) | m2
                    if w == x and m2 == full:
                        back_full = True
                    if seen[st2] == 0:
                        seen[st2] = 1
                        stack[top] = st2
                        top += 1
                        if (inf_full >> w) & 1:
                            cover |= m2
                            if m2 == full:
                                got_full = True
        if not got_full:
            ok_some_orbit = False
        if cover != full:
            ok_union_orbit = False
        if not back_full:
            ok_some_limit = False

    flags = 0
    if ok_every_orbit:
        flags |= 1
    if ok_some_orbit:
        flags |= 2
    if ok_union_orbit:
        flags |= 4
    if ok_every_limit:
        flags |= 8
    if ok_some_limit:
        flags |= 16
    if ok_union_limit:
        flags |= 32
    return flags


def warmup() -> None:
    """Force compilation of every kernel on a tiny instance."""
    succ = np.array([2, 1], dtype=np.int64)
    pred = np.array([2, 1], dtype=np.int64)
    reach_closure(succ, 1)
    inf_vertices(succ, 3)
    strongly_connected(succ, pred)
    has_cycle_within(succ, 3)
    one_family_minimal(succ)
    is_invariant_mask(succ, 1, True)
    invariant_subset_scan(succ, False)
    covering_loop_exists(succ, 3)
    orbit_oracle_flags(succ)
