"""Tree construction by presorting: k sorts up front, no sorting after.

One index array per dimension is merge sorted by that dimension's super
key.  Each build level then reads its median straight out of the first
array and *partitions* the other arrays about it — an order-preserving
scan, not a sort — so every level below inherits presorted arrays.  The
arrays cycle one slot per level (array 0 retires to the back via a
temporary), keeping "array 0 is sorted by this level's super key" true the
whole way down.  Work per level is O((k+1) n), giving O(k n log n) overall.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core import (
    BuildOutcome,
    ContractViolationError,
    KdTree,
    PointSet,
)
from .parallel import fork_join, split_budget
from .presort import MIN_SPLIT, sorted_workspace_rows


@dataclass
class BuildWorkspace:
    """Presorted state shared by every level of one presort build.

    ``arrays`` is the (k, length-padded) table of index rows — row j sorted
    by the super key leading with dimension (level + j) mod k for whatever
    level currently owns the range — and ``temp`` the scratch row used to
    cycle row 0 to the back.  ``length`` is the surviving tuple count after
    duplicate removal (rows are only meaningful up to it) and ``threads``
    the fork/join budget the build may spend.
    """

    points: PointSet
    arrays: np.ndarray
    temp: np.ndarray
    threads: int
    length: int
    removed: int
    # instrumentation arrays collected by prepare(); summed after the build
    _stats_sink: list | None = None

    @classmethod
    def prepare(cls, points: PointSet, threads: int = 1) -> tuple["BuildWorkspace", float, float]:
        """Sort + dedup for `points`; returns (workspace, sort_s, dedup_s)."""
        if threads < 1:
            raise ContractViolationError(f"thread budget must be >= 1, got {threads}")
        sink: list[np.ndarray] = []
        arrays, sort_s, dedup_s, length = sorted_workspace_rows(points, threads, sink)
        ws = cls(
            points=points,
            arrays=arrays,
            temp=np.empty(points.n, dtype=np.int64),
            threads=threads,
            length=length,
            removed=points.n - length,
            _stats_sink=sink,
        )
        return ws, sort_s, dedup_s


def partition_about_median(
    points: PointSet,
    source: np.ndarray,
    dest: np.ndarray,
    pivot: int,
    leading: int,
) -> tuple[int, int]:
    """Split `source` about tuple `pivot` into `dest`, preserving order.

    `pivot` must be the median of `source` by the super key starting at
    `leading` and must occur in it exactly once.  Elements below the pivot
    fill dest[:mid] in source order, elements above fill dest[mid+1:], and
    dest[mid] is left untouched (the caller owns that slot).  Returns the
    (below, above) counts.  Any mismatch — pivot absent, seen twice, or not
    actually the median — raises ContractViolationError.
    """
    src = np.asarray(source)
    if src.ndim != 1 or dest.ndim != 1 or len(dest) != len(src):
        raise ContractViolationError("source and dest must be 1-d arrays of equal length")
    if src.dtype != np.int64 or dest.dtype != np.int64:
        raise ContractViolationError("index arrays must be int64")
    m = len(src)
    if m == 0:
        raise ContractViolationError("cannot partition an empty range")
    if not 0 <= leading < points.k:
        raise ContractViolationError(f"leading dimension {leading} outside [0, {points.k})")
    if not 0 <= pivot < points.n:
        raise ContractViolationError(f"pivot {pivot} outside [0, {points.n})")
    mid = (m - 1) // 2
    code = K.partition_about(
        points.coords, src, dest, 0, m, mid, pivot, leading, K.new_stats()
    )
    if code < 0:
        raise ContractViolationError(K.describe_build_code(code))
    return mid, m - 1 - mid


def cycle_workspace(ws: BuildWorkspace, lo: int, hi: int, depth: int) -> int:
    """Perform one level's split of [lo, hi) and cycle the arrays.

    The super key is chosen by depth mod k.  On return the median's tuple
    index is yielded and rows lo..hi of the workspace are partitioned one
    slot forward, ready for the two half-ranges one level down.
    """
    if not 0 <= lo < hi <= ws.length:
        raise ContractViolationError(
            f"range [{lo}, {hi}) outside the workspace's [0, {ws.length})"
        )
    if depth < 0:
        raise ContractViolationError("depth must be non-negative")
    lead = depth % ws.points.k
    med = K.split_level(ws.points.coords, ws.arrays, ws.temp, lo, hi, lead, K.new_stats())
    if med < 0:
        raise ContractViolationError(K.describe_build_code(med))
    return int(med)


def _build_range(
    ws: BuildWorkspace,
    less: np.ndarray,
    greater: np.ndarray,
    lo: int,
    hi: int,
    lead: int,
    budget: int,
    sink: list[np.ndarray],
) -> int:
    """Build [lo, hi); splits the thread budget between the two halves."""
    coords = ws.points.coords
    m = hi - lo
    if budget <= 1 or m < MIN_SPLIT:
        stats = K.new_stats()
        root = K.build_presort_range(coords, ws.arrays, ws.temp, less, greater, lo, hi, lead, stats)
        sink.append(stats)
        if root < -1:
            raise ContractViolationError(K.describe_build_code(root))
        return int(root)
    stats = K.new_stats()
    med = K.split_level(coords, ws.arrays, ws.temp, lo, hi, lead, stats)
    sink.append(stats)
    if med < 0:
        raise ContractViolationError(K.describe_build_code(med))
    mid = lo + (m - 1) // 2
    nlead = (lead + 1) % ws.points.k
    child_q, parent_q = split_budget(budget)
    lower: list[int] = [-1]
    upper: list[int] = [-1]

    def child_task() -> None:
        lower[0] = _build_range(ws, less, greater, lo, mid, nlead, child_q, sink)

    def parent_task() -> None:
        upper[0] = _build_range(ws, less, greater, mid + 1, hi, nlead, parent_q, sink)

    fork_join(child_task, parent_task)
    less[med] = lower[0]
    greater[med] = upper[0]
    return int(med)


def build_presort_staged(points: PointSet, threads: int = 1) -> BuildOutcome:
    """Full presort build with per-phase timings and instrumentation."""
    ws, sort_s, dedup_s = BuildWorkspace.prepare(points, threads)
    sink = ws._stats_sink if ws._stats_sink is not None else []
    n = points.n
    less = np.full(n, -1, dtype=np.int64)
    greater = np.full(n, -1, dtype=np.int64)
    t0 = time.perf_counter()
    root = _build_range(ws, less, greater, 0, ws.length, 0, threads, sink)
    build_s = time.perf_counter() - t0
    less.setflags(write=False)
    greater.setflags(write=False)
    tree = KdTree(k=points.k, root=root, less=less, greater=greater)
    copies = int(sum(int(s[K.STAT_COPIES]) for s in sink))
    compares = int(sum(int(s[K.STAT_COMPARES]) for s in sink))
    return BuildOutcome(
        tree=tree,
        sort_seconds=sort_s,
        dedup_seconds=dedup_s,
        build_seconds=build_s,
        removed=ws.removed,
        copies=copies,
        compares=compares,
    )


def build_presort(points: PointSet, threads: int = 1) -> KdTree:
    """Balanced k-d tree over the distinct tuples of `points`.

    Duplicates are removed as part of the build (smallest index survives).
    `threads` caps the fork/join budget; the result is identical for every
    budget.
    """
    return build_presort_staged(points, threads).tree
