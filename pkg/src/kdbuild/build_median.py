"""Tree construction by repeated median selection.

A single merge sort (leading dimension 0) removes duplicates; after that
each level finds its median with a worst-case-linear median-of-medians
selection and recurses on the two halves with the super key advanced by
one dimension.  One index array and no per-level re-sorting: O(n) work per
level independent of k, O(n log n) overall.
"""

from __future__ import annotations

import time

import numpy as np

from . import _kernels as K
from .core import (
    BuildOutcome,
    ContractViolationError,
    KdTree,
    PointSet,
)
from .parallel import fork_join, split_budget
from .presort import MIN_SPLIT, _sort_span


def select_median(
    points: PointSet,
    indices: np.ndarray,
    leading: int,
    lo: int = 0,
    hi: int | None = None,
    stats: np.ndarray | None = None,
) -> int:
    """Move the median of indices[lo:hi] (by super key `leading`) into place.

    Selection is by medians of five-element groups, so the work — and the
    comparison count written into `stats` slot 1, if given — stays linear
    in the range length even on sorted, reversed or otherwise adversarial
    orders.  On return indices[pos] holds the median, everything before it
    compares below and everything after compares above; returns pos.

    The tuples referenced by the range must be distinct (run duplicate
    removal first) — with equal keys present the partition bounds are
    meaningless.
    """
    arr = np.asarray(indices)
    if arr.ndim != 1 or arr.dtype != np.int64:
        raise ContractViolationError("indices must be a 1-d int64 array")
    if hi is None:
        hi = len(arr)
    if not 0 <= lo < hi <= len(arr):
        raise ContractViolationError(f"range [{lo}, {hi}) invalid for {len(arr)} indices")
    if not 0 <= leading < points.k:
        raise ContractViolationError(f"leading dimension {leading} outside [0, {points.k})")
    if stats is None:
        stats = K.new_stats()
    pos = lo + (hi - lo - 1) // 2
    K.select_rank(points.coords, arr, lo, hi, pos, leading, stats)
    return pos


def _build_range(
    coords: np.ndarray,
    idx: np.ndarray,
    less: np.ndarray,
    greater: np.ndarray,
    lo: int,
    hi: int,
    lead: int,
    budget: int,
    sink: list[np.ndarray],
) -> int:
    """Build [lo, hi); splits the thread budget between the two halves."""
    m = hi - lo
    if budget <= 1 or m < MIN_SPLIT:
        stats = K.new_stats()
        root = K.build_median_range(coords, idx, less, greater, lo, hi, lead, stats)
        sink.append(stats)
        if root < -1:
            raise ContractViolationError(K.describe_build_code(root))
        return int(root)
    stats = K.new_stats()
    mid = lo + (m - 1) // 2
    K.select_rank(coords, idx, lo, hi, mid, lead, stats)
    sink.append(stats)
    med = int(idx[mid])
    k = coords.shape[1]
    nlead = (lead + 1) % k
    child_q, parent_q = split_budget(budget)
    lower: list[int] = [-1]
    upper: list[int] = [-1]

    def child_task() -> None:
        lower[0] = _build_range(coords, idx, less, greater, lo, mid, nlead, child_q, sink)

    def parent_task() -> None:
        upper[0] = _build_range(coords, idx, less, greater, mid + 1, hi, nlead, parent_q, sink)

    fork_join(child_task, parent_task)
    less[med] = lower[0]
    greater[med] = upper[0]
    return med


def build_median_staged(points: PointSet, threads: int = 1) -> BuildOutcome:
    """Full selection-based build with per-phase timings and counters."""
    if threads < 1:
        raise ContractViolationError(f"thread budget must be >= 1, got {threads}")
    coords = points.coords
    n = points.n
    sink: list[np.ndarray] = []
    idx = np.arange(n, dtype=np.int64)
    aux = np.empty(n, dtype=np.int64)
    t0 = time.perf_counter()
    _sort_span(coords, idx, aux, 0, n, 0, threads, sink)
    t1 = time.perf_counter()
    stats = K.new_stats()
    length = int(K.compact_runs(coords, idx, n, stats))
    sink.append(stats)
    t2 = time.perf_counter()
    less = np.full(n, -1, dtype=np.int64)
    greater = np.full(n, -1, dtype=np.int64)
    root = _build_range(coords, idx, less, greater, 0, length, 0, threads, sink)
    t3 = time.perf_counter()
    less.setflags(write=False)
    greater.setflags(write=False)
    tree = KdTree(k=points.k, root=root, less=less, greater=greater)
    copies = int(sum(int(s[K.STAT_COPIES]) for s in sink))
    compares = int(sum(int(s[K.STAT_COMPARES]) for s in sink))
    return BuildOutcome(
        tree=tree,
        sort_seconds=t1 - t0,
        dedup_seconds=t2 - t1,
        build_seconds=t3 - t2,
        removed=n - length,
        copies=copies,
        compares=compares,
    )


def build_median(points: PointSet, threads: int = 1) -> KdTree:
    """Balanced k-d tree over the distinct tuples of `points`.

    Produces exactly the same tree as the presort builder — node for node —
    just by a different route; duplicates are removed first (smallest index
    survives) and `threads` caps the fork/join budget.
    """
    return build_median_staged(points, threads).tree
