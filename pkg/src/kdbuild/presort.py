"""Super-key merge sorting and duplicate removal over index arrays.

Both tree builders start the same way: one or more arrays of tuple indices
are merge sorted by a cyclic super key, after which identical tuples sit in
adjacent runs (ordered by index, so the run leader is the smallest index)
and can be dropped in a single pass.

Sorting accepts a thread budget.  With q > 1 a range is cut in half, the
lower half handed to a child thread with q // 2 of the budget, the upper
half sorted inline with the rest, and the halves merged after the join;
the compiled kernels release the GIL so the halves genuinely overlap.
"""

from __future__ import annotations

import time
from typing import Sequence

import numpy as np

from . import _kernels as K
from .core import ContractViolationError, PointSet
from .parallel import fork_join, split_budget

# Below this many elements a range is sorted inline even if budget remains:
# thread start/join overhead would outweigh the work.
MIN_SPLIT = 2048


def _sort_span(
    coords: np.ndarray,
    idx: np.ndarray,
    aux: np.ndarray,
    lo: int,
    hi: int,
    lead: int,
    budget: int,
    stats_sink: list[np.ndarray],
) -> None:
    """Sort idx[lo:hi] by super key `lead` using up to `budget` threads."""
    m = hi - lo
    if budget <= 1 or m < MIN_SPLIT:
        stats = K.new_stats()
        K.sort_range(coords, lead, idx, aux, lo, hi, stats)
        stats_sink.append(stats)
        return
    mid = lo + m // 2
    child_q, parent_q = split_budget(budget)
    fork_join(
        lambda: _sort_span(coords, idx, aux, lo, mid, lead, child_q, stats_sink),
        lambda: _sort_span(coords, idx, aux, mid, hi, lead, parent_q, stats_sink),
    )
    stats = K.new_stats()
    K.merge_adjacent(coords, lead, idx, aux, lo, mid, hi, stats)
    stats_sink.append(stats)


def merge_sort_indices(points: PointSet, leading: int, threads: int = 1) -> np.ndarray:
    """Indices 0..n-1 sorted by the super key starting at `leading`.

    The sort is stable over the identity start, so identical tuples come
    out adjacent in ascending index order.  `threads` is the fork/join
    budget; 1 means fully sequential.
    """
    if not 0 <= leading < points.k:
        raise ContractViolationError(
            f"leading dimension {leading} outside [0, {points.k})"
        )
    if threads < 1:
        raise ContractViolationError(f"thread budget must be >= 1, got {threads}")
    idx = np.arange(points.n, dtype=np.int64)
    aux = np.empty(points.n, dtype=np.int64)
    sink: list[np.ndarray] = []
    _sort_span(points.coords, idx, aux, 0, points.n, leading, threads, sink)
    return idx


def _dedup_rows(
    coords: np.ndarray,
    arrays: np.ndarray,
    d_lo: int,
    d_hi: int,
    length: int,
    budget: int,
    lengths: np.ndarray,
    stats_sink: list[np.ndarray],
) -> None:
    """Compact rows d_lo:d_hi of `arrays`, splitting the budget over rows."""
    if budget <= 1 or d_hi - d_lo <= 1:
        for d in range(d_lo, d_hi):
            stats = K.new_stats()
            lengths[d] = K.compact_runs(coords, arrays[d], length, stats)
            stats_sink.append(stats)
        return
    mid = (d_lo + d_hi) // 2
    child_q, parent_q = split_budget(budget)
    fork_join(
        lambda: _dedup_rows(coords, arrays, d_lo, mid, length, child_q, lengths, stats_sink),
        lambda: _dedup_rows(coords, arrays, mid, d_hi, length, parent_q, lengths, stats_sink),
    )


def remove_duplicates(
    points: PointSet, arrays: Sequence[np.ndarray]
) -> tuple[list[np.ndarray], int]:
    """Drop duplicate tuples from k parallel sorted index arrays.

    `arrays[d]` must be sorted by the super key leading with dimension d
    (stable: identical tuples in ascending index order) and all arrays must
    cover the same index set.  For each run of identical tuples only the
    smallest index survives, in every array, so the arrays remain parallel
    views of one surviving set.  Returns new trimmed arrays (inputs are not
    touched) and the number of indices removed.
    """
    coords = points.coords
    k = points.k
    if len(arrays) != k:
        raise ContractViolationError(
            f"need one index array per dimension ({k}), got {len(arrays)}"
        )
    length = len(arrays[0])
    own: list[np.ndarray] = []
    stats = K.new_stats()
    for d, arr in enumerate(arrays):
        a = np.asarray(arr)
        if a.ndim != 1 or len(a) != length:
            raise ContractViolationError(
                "index arrays must be 1-d and of equal length"
            )
        a = a.astype(np.int64, copy=True)
        if length and (a.min() < 0 or a.max() >= points.n):
            raise ContractViolationError(
                f"array for dimension {d} references tuples outside [0, {points.n})"
            )
        bad = K.check_sorted(coords, d, a, 0, length, stats)
        if bad != -1:
            raise ContractViolationError(
                f"array for dimension {d} is not in stable sorted order "
                f"at position {bad}"
            )
        own.append(a)
    survivors = -1
    out: list[np.ndarray] = []
    for d, a in enumerate(own):
        count = int(K.compact_runs(coords, a, length, stats))
        if survivors == -1:
            survivors = count
        elif count != survivors:
            raise ContractViolationError(
                "arrays disagree on the surviving tuple count; "
                "they do not cover the same index set"
            )
        out.append(a[:count])
    if survivors > 0:
        base = np.sort(out[0])
        for d in range(1, k):
            if not np.array_equal(base, np.sort(out[d])):
                raise ContractViolationError(
                    "arrays do not cover the same index set after removal"
                )
    return out, length - (survivors if survivors >= 0 else 0)


def sorted_workspace_rows(
    points: PointSet, threads: int, stats_sink: list[np.ndarray]
) -> tuple[np.ndarray, float, float, int]:
    """Sort one index row per dimension and strip duplicates, timed.

    Internal helper for the presort builder: returns (arrays, sort_seconds,
    dedup_seconds, surviving_length).  Rows are sorted one after another,
    each spending the whole thread budget on its own fork/join tree, and
    then compacted with the budget split across rows.
    """
    coords = points.coords
    n, k = points.n, points.k
    arrays = np.empty((k, n), dtype=np.int64)
    aux = np.empty(n, dtype=np.int64)
    t0 = time.perf_counter()
    for d in range(k):
        arrays[d] = np.arange(n, dtype=np.int64)
        _sort_span(coords, arrays[d], aux, 0, n, d, threads, stats_sink)
    t1 = time.perf_counter()
    lengths = np.empty(k, dtype=np.int64)
    _dedup_rows(coords, arrays, 0, k, n, threads, lengths, stats_sink)
    t2 = time.perf_counter()
    if len(set(int(v) for v in lengths)) != 1:
        raise ContractViolationError(
            "duplicate removal left the sorted rows with different lengths"
        )
    return arrays, t1 - t0, t2 - t1, int(lengths[0])
