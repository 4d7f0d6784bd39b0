"""Degree-proportional sampling over active vertices.

`DegreeIndex` keeps per-vertex integer degrees in a Fenwick (binary
indexed) tree so that pushing a vertex, incrementing a degree,
deactivating a vertex and drawing a degree-proportional sample are all
O(log n).  Deactivated vertices keep their frozen degree for bookkeeping
but carry zero weight in the tree and can never be sampled again.

All weights are integers, so the total active degree is exact; sampling
is a pure function of (weights, u) via the inclusive-prefix rule: for
u in (0, 1] the result is the smallest vertex id whose inclusive prefix
sum of weights reaches u * total_weight.
"""

from __future__ import annotations

import numpy as np

from ._jit import njit


@njit(cache=True, nogil=True)
def _fw_add(tree, n, i, delta):
    """Add `delta` at 1-based position i."""
    j = i
    while j <= n:
        tree[j] += delta
        j += j & (-j)


@njit(cache=True, nogil=True)
def _fw_prefix(tree, i):
    """Inclusive prefix sum of positions 1..i."""
    s = 0
    j = i
    while j > 0:
        s += tree[j]
        j -= j & (-j)
    return s


@njit(cache=True, nogil=True)
def _fw_find(tree, n, top, target):
    """Smallest 1-based index whose inclusive prefix sum >= target.

    `top` is the largest power of two <= n.  Requires 0 < target <= total.
    The running `target` stays strictly positive (a float minus a strictly
    smaller integer <= 2**53 is exact), so a zero-weight position can never
    be returned.
    """
    idx = 0
    mask = top
    while mask != 0:
        nxt = idx + mask
        if nxt <= n and tree[nxt] < target:
            idx = nxt
            target -= tree[nxt]
        mask >>= 1
    return idx + 1


@njit(cache=True, nogil=True)
def _fw_build(tree, n):
    """Turn leaf values stored at tree[1..n] into Fenwick partial sums."""
    for i in range(1, n + 1):
        j = i + (i & (-i))
        if j <= n:
            tree[j] += tree[i]


@njit(cache=True, nogil=True)
def _fw_find_many(tree, n, top, targets, out):
    for i in range(targets.shape[0]):
        out[i] = _fw_find(tree, n, top, targets[i]) - 1


def _top_bit(n: int) -> int:
    return 1 << (n.bit_length() - 1) if n > 0 else 0


class DegreeIndex:
    """Fenwick-backed table of active-vertex degrees.

    Vertex ids are consecutive integers starting at 0, in push order.
    """

    def __init__(self, capacity: int = 16):
        capacity = max(int(capacity), 1)
        self._degree = np.zeros(capacity, dtype=np.int64)
        self._active = np.zeros(capacity, dtype=np.bool_)
        self._tree = np.zeros(capacity + 1, dtype=np.int64)
        self._cap = capacity
        self._top = _top_bit(capacity)
        self._n = 0
        self._total = 0

    # -- bookkeeping -----------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return self._n

    @property
    def num_active(self) -> int:
        return int(np.count_nonzero(self._active[: self._n]))

    @property
    def total_weight(self) -> int:
        """Sum of degrees over active vertices (exact integer)."""
        return self._total

    def degree(self, v: int) -> int:
        """Current degree if active, frozen degree if deactivated."""
        self._check_known(v)
        return int(self._degree[v])

    def is_active(self, v: int) -> bool:
        self._check_known(v)
        return bool(self._active[v])

    def degrees(self) -> np.ndarray:
        """Copy of per-vertex degrees (frozen values for inactive ids)."""
        return self._degree[: self._n].copy()

    def active_mask(self) -> np.ndarray:
        return self._active[: self._n].copy()

    def _check_known(self, v: int) -> None:
        if not 0 <= v < self._n:
            raise ValueError(f"unknown vertex id {v}")

    def _grow(self, need: int) -> None:
        cap = self._cap
        while cap < need:
            cap *= 2
        degree = np.zeros(cap, dtype=np.int64)
        active = np.zeros(cap, dtype=np.bool_)
        degree[: self._n] = self._degree[: self._n]
        active[: self._n] = self._active[: self._n]
        tree = np.zeros(cap + 1, dtype=np.int64)
        tree[1 : self._n + 1] = np.where(active[: self._n], degree[: self._n], 0)
        _fw_build(tree, cap)
        self._degree, self._active, self._tree = degree, active, tree
        self._cap = cap
        self._top = _top_bit(cap)

    # -- mutations -------------------------------------------------------

    def push_vertex(self, initial_degree: int) -> int:
        """Append an active vertex with the given degree; returns its id."""
        if initial_degree <= 0:
            raise ValueError("initial degree must be a positive integer")
        if self._n + 1 > self._cap:
            self._grow(self._n + 1)
        vid = self._n
        self._n += 1
        self._degree[vid] = initial_degree
        self._active[vid] = True
        _fw_add(self._tree, self._cap, vid + 1, initial_degree)
        self._total += initial_degree
        return vid

    def add_degree(self, v: int, delta: int) -> None:
        """Increase the degree of an active vertex.

        A vertex selected with multiplicity m into one hyperedge gets
        delta = m (or m unit increments; the result is identical).
        """
        self._check_known(v)
        if not self._active[v]:
            raise ValueError(f"inactive vertex mutation: vertex {v}")
        if delta <= 0:
            raise ValueError("degree increment must be a positive integer")
        self._degree[v] += delta
        _fw_add(self._tree, self._cap, v + 1, delta)
        self._total += delta

    def deactivate(self, v: int) -> int:
        """Remove a vertex from the sampling pool; returns its frozen degree."""
        self._check_known(v)
        if not self._active[v]:
            raise ValueError(f"inactive vertex mutation: vertex {v} already inactive")
        frozen = int(self._degree[v])
        self._active[v] = False
        _fw_add(self._tree, self._cap, v + 1, -frozen)
        self._total -= frozen
        return frozen

    # -- sampling --------------------------------------------------------

    def sample(self, u: float) -> int:
        """Vertex id whose inclusive prefix sum first reaches u * total_weight.

        `u` must lie in (0, 1]; repeated calls with independent uniforms give
        degree-proportional draws with repetition.
        """
        if self._total <= 0:
            raise ValueError("no active vertices")
        if not 0.0 < u <= 1.0:
            raise ValueError("u must lie in (0, 1]")
        return int(_fw_find(self._tree, self._cap, self._top, u * float(self._total))) - 1

    def sample_many(self, us: np.ndarray) -> np.ndarray:
        """Bulk variant of `sample`, identical to calling it per element."""
        if self._total <= 0:
            raise ValueError("no active vertices")
        us = np.asarray(us, dtype=np.float64)
        if us.size and not (0.0 < us.min() and us.max() <= 1.0):
            raise ValueError("u must lie in (0, 1]")
        out = np.empty(us.shape[0], dtype=np.int64)
        _fw_find_many(self._tree, self._cap, self._top, us * float(self._total), out)
        return out
