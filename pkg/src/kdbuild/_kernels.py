"""Compiled kernels shared by the tree builders.

Everything here works on flat ``int64`` arrays so numba can compile it once
and release the GIL, which is what lets the thread-budgeted build paths get
real overlap.  The public modules wrap these with validation and friendlier
types; kernels signal contract breaches with negative return codes instead
of exceptions.

Instrumentation: every kernel threads a two-slot ``stats`` array through.
``stats[STAT_COPIES]`` counts element writes (merges, partitions, swaps
count two), ``stats[STAT_COMPARES]`` counts whole super-key comparisons.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STAT_COPIES = 0
STAT_COMPARES = 1

# Contract-breach codes returned by the build kernels.  Anything <= -100 is
# an error; -1 is reserved for "no node" (empty range / absent child).
ERR_LOWER_OVERFLOW = -101
ERR_UPPER_OVERFLOW = -102
ERR_PIVOT_MISSES = -103
ERR_EQUAL_KEYS = -104

# Violation codes recorded by the structural scan.
VIOL_DANGLING = 1
VIOL_REPEATED = 2
VIOL_ORDER = 3


def describe_build_code(code: int) -> str:
    """Human-readable text for a negative kernel return code."""
    if code == ERR_LOWER_OVERFLOW:
        return "partition produced more low-side elements than the median rank allows"
    if code == ERR_UPPER_OVERFLOW:
        return "partition produced more high-side elements than the range allows"
    if code == ERR_PIVOT_MISSES:
        return "partition did not meet the pivot exactly once (duplicates survived?)"
    if code == ERR_EQUAL_KEYS:
        return "two distinct tuples compared equal (duplicates survived?)"
    return f"unknown kernel failure code {code}"


@njit(cache=True, nogil=True)
def compare_keys(coords, a, b, lead, stats):
    """Compare tuples a and b by the cyclic super key starting at `lead`.

    Returns -1/0/1.  Ties on the leading coordinate fall through to the
    next dimension (wrapping), so distinct tuples never compare equal.
    """
    stats[STAT_COMPARES] += 1
    k = coords.shape[1]
    for j in range(k):
        d = lead + j
        if d >= k:
            d -= k
        va = coords[a, d]
        vb = coords[b, d]
        if va < vb:
            return -1
        if va > vb:
            return 1
    return 0


@njit(cache=True, nogil=True)
def _merge_runs(coords, lead, src, dst, lo, mid, hi, stats):
    # Stable two-run merge: on equal keys (identical tuples) the smaller
    # index wins, which keeps the overall order canonical.
    i = lo
    j = mid
    for w in range(lo, hi):
        take_right = False
        if i >= mid:
            take_right = True
        elif j < hi:
            c = compare_keys(coords, src[j], src[i], lead, stats)
            if c < 0 or (c == 0 and src[j] < src[i]):
                take_right = True
        if take_right:
            dst[w] = src[j]
            j += 1
        else:
            dst[w] = src[i]
            i += 1
        stats[STAT_COPIES] += 1


@njit(cache=True, nogil=True)
def sort_range(coords, lead, idx, aux, lo, hi, stats):
    """Bottom-up stable merge sort of idx[lo:hi] by super key `lead`."""
    m = hi - lo
    if m <= 1:
        return
    width = 1
    in_aux = False
    while width < m:
        if in_aux:
            src, dst = aux, idx
        else:
            src, dst = idx, aux
        r = lo
        while r < hi:
            mid = r + width
            if mid > hi:
                mid = hi
            end = r + 2 * width
            if end > hi:
                end = hi
            if mid < end:
                _merge_runs(coords, lead, src, dst, r, mid, end, stats)
            else:
                for w in range(r, end):
                    dst[w] = src[w]
                    stats[STAT_COPIES] += 1
            r = end
        in_aux = not in_aux
        width *= 2
    if in_aux:
        for w in range(lo, hi):
            idx[w] = aux[w]
            stats[STAT_COPIES] += 1


@njit(cache=True, nogil=True)
def merge_adjacent(coords, lead, idx, aux, lo, mid, hi, stats):
    """Merge the pre-sorted halves idx[lo:mid] and idx[mid:hi] in place."""
    _merge_runs(coords, lead, idx, aux, lo, mid, hi, stats)
    for w in range(lo, hi):
        idx[w] = aux[w]
        stats[STAT_COPIES] += 1


@njit(cache=True, nogil=True)
def check_sorted(coords, lead, idx, lo, hi, stats):
    """Return -1 if idx[lo:hi] ascends by (super key, index), else the
    position of the first element that breaks the order."""
    for i in range(lo + 1, hi):
        c = compare_keys(coords, idx[i - 1], idx[i], lead, stats)
        if c > 0 or (c == 0 and idx[i - 1] >= idx[i]):
            return i
    return -1


@njit(cache=True, nogil=True)
def compact_runs(coords, idx, length, stats):
    """Drop all but the first element of each run of identical tuples.

    idx[:length] must already be sorted (identical tuples adjacent, run
    leader = smallest index).  Survivors are packed into idx[:w]; returns w.
    """
    if length <= 0:
        return 0
    k = coords.shape[1]
    w = 1
    for i in range(1, length):
        stats[STAT_COMPARES] += 1
        same = True
        for d in range(k):
            if coords[idx[i], d] != coords[idx[i - 1], d]:
                same = False
                break
        if not same:
            if w != i:
                idx[w] = idx[i]
                stats[STAT_COPIES] += 1
            w += 1
    return w


@njit(cache=True, nogil=True)
def partition_about(coords, src, dst, lo, hi, mid, pivot, lead, stats):
    """Split src[lo:hi] about tuple `pivot` into dst, preserving order.

    Keys below the pivot land in dst[lo:mid] in their source order, keys
    above in dst[mid+1:hi]; dst[mid] is not touched.  Exactly one element
    (the pivot itself) must compare equal.  Returns 0 or an ERR_* code.
    """
    lower = lo
    upper = mid + 1
    hits = 0
    for i in range(lo, hi):
        e = src[i]
        c = compare_keys(coords, e, pivot, lead, stats)
        if c < 0:
            if lower >= mid:
                return ERR_LOWER_OVERFLOW
            dst[lower] = e
            lower += 1
            stats[STAT_COPIES] += 1
        elif c > 0:
            if upper >= hi:
                return ERR_UPPER_OVERFLOW
            dst[upper] = e
            upper += 1
            stats[STAT_COPIES] += 1
        else:
            hits += 1
            if hits > 1:
                return ERR_PIVOT_MISSES
    if hits != 1 or lower != mid or upper != hi:
        return ERR_PIVOT_MISSES
    return 0


@njit(cache=True, nogil=True)
def split_level(coords, arrays, temp, lo, hi, lead, stats):
    """One presort split of [lo, hi): returns the median's tuple index.

    arrays[0] is sorted by the level's super key, so its middle slot holds
    the median.  Every other array is partitioned about that median into
    the row above it, and a copy of arrays[0] (via temp) is partitioned
    into the last row; each row thereby stays sorted by the super key it
    will lead with one level further down.  Negative return = ERR_* code.
    """
    k = arrays.shape[0]
    mid = lo + (hi - lo - 1) // 2
    med = arrays[0, mid]
    if k == 1:
        return med
    for i in range(lo, hi):
        temp[i] = arrays[0, i]
        stats[STAT_COPIES] += 1
    for j in range(1, k):
        code = partition_about(coords, arrays[j], arrays[j - 1], lo, hi, mid, med, lead, stats)
        if code < 0:
            return code
    code = partition_about(coords, temp, arrays[k - 1], lo, hi, mid, med, lead, stats)
    if code < 0:
        return code
    return med


@njit(cache=True, nogil=True)
def build_presort_range(coords, arrays, temp, less, greater, lo, hi, lead, stats):
    """Sequential presort build over [lo, hi); returns the subtree root.

    Ranges of one to three elements are terminal and come straight off the
    sorted first row; larger ranges split about the median and recurse
    with the super key advanced by one dimension.
    """
    m = hi - lo
    if m <= 0:
        return -1
    if m == 1:
        return arrays[0, lo]
    if m == 2:
        a = arrays[0, lo]
        b = arrays[0, lo + 1]
        greater[a] = b
        return a
    if m == 3:
        b = arrays[0, lo + 1]
        less[b] = arrays[0, lo]
        greater[b] = arrays[0, lo + 2]
        return b
    med = split_level(coords, arrays, temp, lo, hi, lead, stats)
    if med < -1:
        return med
    k = coords.shape[1]
    nlead = lead + 1
    if nlead >= k:
        nlead = 0
    mid = lo + (m - 1) // 2
    lchild = build_presort_range(coords, arrays, temp, less, greater, lo, mid, nlead, stats)
    if lchild < -1:
        return lchild
    rchild = build_presort_range(coords, arrays, temp, less, greater, mid + 1, hi, nlead, stats)
    if rchild < -1:
        return rchild
    less[med] = lchild
    greater[med] = rchild
    return med


@njit(cache=True, nogil=True)
def insertion_sort_range(coords, idx, lo, hi, lead, stats):
    """Insertion sort of idx[lo:hi] by super key (used on tiny ranges)."""
    for i in range(lo + 1, hi):
        e = idx[i]
        j = i - 1
        while j >= lo:
            c = compare_keys(coords, e, idx[j], lead, stats)
            if c < 0:
                idx[j + 1] = idx[j]
                stats[STAT_COPIES] += 1
                j -= 1
            else:
                break
        idx[j + 1] = e
        stats[STAT_COPIES] += 1


@njit(cache=True, nogil=True)
def select_rank(coords, idx, lo, hi, target, lead, stats):
    """Median-of-medians selection: place the element of rank target-lo at
    idx[target] with smaller keys anywhere before it and larger anywhere
    after.  Worst-case linear; recursion only on the group-median range.
    """
    while True:
        m = hi - lo
        if m <= 1:
            return
        if m <= 5:
            insertion_sort_range(coords, idx, lo, hi, lead, stats)
            return
        # Sort groups of five, park each group median at the front.
        ngroups = 0
        g = lo
        while g < hi:
            e = g + 5
            if e > hi:
                e = hi
            insertion_sort_range(coords, idx, g, e, lead, stats)
            mpos = g + (e - g - 1) // 2
            dest = lo + ngroups
            t = idx[dest]
            idx[dest] = idx[mpos]
            idx[mpos] = t
            stats[STAT_COPIES] += 2
            ngroups += 1
            g = e
        pivot_pos = lo + (ngroups - 1) // 2
        select_rank(coords, idx, lo, lo + ngroups, pivot_pos, lead, stats)
        pivot = idx[pivot_pos]
        # Lomuto pass about the pivot, pivot parked at the end meanwhile.
        t = idx[pivot_pos]
        idx[pivot_pos] = idx[hi - 1]
        idx[hi - 1] = t
        stats[STAT_COPIES] += 2
        store = lo
        for i in range(lo, hi - 1):
            c = compare_keys(coords, idx[i], pivot, lead, stats)
            if c < 0:
                t = idx[store]
                idx[store] = idx[i]
                idx[i] = t
                stats[STAT_COPIES] += 2
                store += 1
        t = idx[store]
        idx[store] = idx[hi - 1]
        idx[hi - 1] = t
        stats[STAT_COPIES] += 2
        if store == target:
            return
        if target < store:
            hi = store
        else:
            lo = store + 1


@njit(cache=True, nogil=True)
def build_median_range(coords, idx, less, greater, lo, hi, lead, stats):
    """Sequential selection-based build over [lo, hi); returns the root.

    A pair is ordered first so the node is always the key-smaller element
    with the other as its greater child; a triple is sorted and rooted at
    its middle.  Larger ranges select the median in place and recurse.
    """
    m = hi - lo
    if m <= 0:
        return -1
    if m == 1:
        return idx[lo]
    if m == 2:
        a = idx[lo]
        b = idx[lo + 1]
        c = compare_keys(coords, a, b, lead, stats)
        if c == 0:
            return ERR_EQUAL_KEYS
        if c > 0:
            a, b = b, a
        greater[a] = b
        return a
    if m == 3:
        insertion_sort_range(coords, idx, lo, hi, lead, stats)
        b = idx[lo + 1]
        less[b] = idx[lo]
        greater[b] = idx[lo + 2]
        return b
    mid = lo + (m - 1) // 2
    select_rank(coords, idx, lo, hi, mid, lead, stats)
    med = idx[mid]
    k = coords.shape[1]
    nlead = lead + 1
    if nlead >= k:
        nlead = 0
    lchild = build_median_range(coords, idx, less, greater, lo, mid, nlead, stats)
    if lchild < -1:
        return lchild
    rchild = build_median_range(coords, idx, less, greater, mid + 1, hi, nlead, stats)
    if rchild < -1:
        return rchild
    less[med] = lchild
    greater[med] = rchild
    return med


@njit(cache=True, nogil=True)
def fill_coords(out, seed):
    """Deterministic coordinate stream for benchmarks.

    Mixes seed + (i+1) * golden-gamma through the splitmix64 finalizer and
    keeps the low 32 bits as a signed value, so every (n, k, seed) triple
    yields the same table on any platform.
    """
    n = out.shape[0]
    k = out.shape[1]
    s = np.uint64(seed)
    gamma = np.uint64(0x9E3779B97F4A7C15)
    m1 = np.uint64(0xBF58476D1CE4E5B9)
    m2 = np.uint64(0x94D049BB133111EB)
    mask32 = np.uint64(0xFFFFFFFF)
    i = np.uint64(0)
    one = np.uint64(1)
    for r in range(n):
        for d in range(k):
            i += one
            z = s + i * gamma
            z = (z ^ (z >> np.uint64(30))) * m1
            z = (z ^ (z >> np.uint64(27))) * m2
            z = z ^ (z >> np.uint64(31))
            v = np.int64(z & mask32)
            if v >= 2147483648:
                v -= 4294967296
            out[r, d] = v


@njit(cache=True, nogil=True)
def _note(viol, count, cap, subject, depth, code, extra):
    if count < cap:
        viol[count, 0] = subject
        viol[count, 1] = depth
        viol[count, 2] = code
        viol[count, 3] = extra
    return count + 1


@njit(cache=True, nogil=True)
def scan_tree(less, greater, root, parent, side, depth, viol):
    """Walk the child arrays from `root`, filling parent/side/depth.

    Records dangling references (child index outside [0, n)) and repeated
    references (a node reachable twice) into `viol` rows of
    (subject, depth, code, extra).  Returns (visited, max_depth, nviol).
    """
    n = less.shape[0]
    cap = viol.shape[0]
    nviol = 0
    if root < 0 or root >= n:
        nviol = _note(viol, nviol, cap, root, -1, VIOL_DANGLING, -1)
        return 0, -1, nviol
    stack = np.empty(n + 1, np.int64)
    seen = np.zeros(n, np.uint8)
    top = 0
    stack[top] = root
    top += 1
    seen[root] = 1
    parent[root] = -1
    side[root] = -1
    depth[root] = 0
    visited = 0
    maxd = 0
    while top > 0:
        top -= 1
        v = stack[top]
        visited += 1
        d = depth[v]
        if d > maxd:
            maxd = d
        for s in range(2):
            c = less[v] if s == 0 else greater[v]
            if c == -1:
                continue
            if c < 0 or c >= n:
                nviol = _note(viol, nviol, cap, v, d, VIOL_DANGLING, c)
                continue
            if seen[c] == 1:
                nviol = _note(viol, nviol, cap, v, d, VIOL_REPEATED, c)
                continue
            seen[c] = 1
            parent[c] = v
            side[c] = s
            depth[c] = d + 1
            stack[top] = c
            top += 1
    return visited, maxd, nviol


@njit(cache=True, nogil=True)
def check_order(coords, parent, side, depth, viol, start, stats):
    """Verify every visited node against each of its ancestors.

    A node on an ancestor's less side must compare below it by the super
    key of the ancestor's level, and symmetrically for the greater side.
    Appends VIOL_ORDER rows after the first `start` entries; returns the
    new total violation count.
    """
    n = parent.shape[0]
    k = coords.shape[1]
    cap = viol.shape[0]
    nviol = start
    for v in range(n):
        if depth[v] < 0:
            continue
        u = v
        while parent[u] != -1:
            p = parent[u]
            lead = depth[p] % k
            c = compare_keys(coords, v, p, lead, stats)
            want = -1 if side[u] == 0 else 1
            if c != want:
                nviol = _note(viol, nviol, cap, v, depth[v], VIOL_ORDER, p)
            u = p
    return nviol


@njit(cache=True, nogil=True)
def subtree_imbalance(less, greater, depth, order):
    """Max |size(less subtree) - size(greater subtree)| over visited nodes.

    `order` must list node indices deepest-first so child sizes are final
    before their parent is folded.
    """
    n = less.shape[0]
    size = np.zeros(n, np.int64)
    worst = 0
    for oi in range(order.shape[0]):
        v = order[oi]
        if depth[v] < 0:
            continue
        sl = 0
        sg = 0
        l = less[v]
        if l >= 0 and l < n:
            sl = size[l]
        g = greater[v]
        if g >= 0 and g < n:
            sg = size[g]
        size[v] = 1 + sl + sg
        d = sl - sg
        if d < 0:
            d = -d
        if d > worst:
            worst = d
    return worst


def new_stats() -> np.ndarray:
    """Fresh two-slot instrumentation array (copies, compares)."""
    return np.zeros(2, dtype=np.int64)


def warm(n: int = 64, k: int = 3) -> None:
    """Compile (or load from cache) every kernel on a toy input.

    Call once before timing anything; compilation is otherwise folded into
    the first measured run.
    """
    coords = np.empty((n, k), dtype=np.int64)
    fill_coords(coords, 12345)
    # Production hands every kernel a frozen coordinate table (and frozen
    # child arrays to the scan); warm with identical array types so the
    # first timed call doesn't trigger a second specialization compile.
    coords.setflags(write=False)
    stats = new_stats()
    arrays = np.empty((k, n), dtype=np.int64)
    for d in range(k):
        arrays[d] = np.arange(n, dtype=np.int64)
        aux = np.empty(n, dtype=np.int64)
        sort_range(coords, d, arrays[d], aux, 0, n, stats)
        check_sorted(coords, d, arrays[d], 0, n, stats)
    lengths = [compact_runs(coords, arrays[d], n, stats) for d in range(k)]
    length = lengths[0]
    temp = np.empty(n, dtype=np.int64)
    less = np.full(n, -1, dtype=np.int64)
    greater = np.full(n, -1, dtype=np.int64)
    root = build_presort_range(coords, arrays, temp, less, greater, 0, length, 0, stats)
    idx = np.arange(n, dtype=np.int64)
    aux = np.empty(n, dtype=np.int64)
    sort_range(coords, 0, idx, aux, 0, n, stats)
    merge_adjacent(coords, 0, idx, aux, 0, n // 2, n, stats)
    length2 = compact_runs(coords, idx, n, stats)
    less2 = np.full(n, -1, dtype=np.int64)
    greater2 = np.full(n, -1, dtype=np.int64)
    select_rank(coords, idx, 0, length2, (length2 - 1) // 2, 0, stats)
    sort_range(coords, 0, idx, aux, 0, length2, stats)
    root2 = build_median_range(coords, idx, less2, greater2, 0, length2, 0, stats)
    less.setflags(write=False)
    greater.setflags(write=False)
    parent = np.full(n, -1, dtype=np.int64)
    side = np.full(n, -1, dtype=np.int64)
    depth = np.full(n, -1, dtype=np.int64)
    viol = np.empty((16, 4), dtype=np.int64)
    visited, maxd, nv = scan_tree(less, greater, root, parent, side, depth, viol)
    nv = check_order(coords, parent, side, depth, viol, nv, stats)
    order = np.argsort(-depth).astype(np.int64)
    subtree_imbalance(less, greater, depth, order)
    if root2 < 0 or visited <= 0 or nv != 0:  # pragma: no cover - smoke only
        raise RuntimeError("kernel warm-up produced an inconsistent tree")
