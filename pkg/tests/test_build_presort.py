import math

import numpy as np
import pytest

from kdbuild import (
    BuildWorkspace,
    ContractViolationError,
    PointSet,
    build_naive,
    build_presort,
    build_presort_staged,
    cycle_workspace,
    depth_bound,
    example_point_set,
    generate_points,
    merge_sort_indices,
    partition_about_median,
    tree_stats,
    trees_equal,
)

# ---------------------------------------------------------------- sample data
# Every value below was worked out by hand for the 15-tuple sample set and is
# frozen here on purpose: the builders must keep reproducing it bit for bit.

XYZ_ORDER = [11, 13, 0, 10, 3, 1, 9, 5, 4, 7, 14, 6, 12, 2, 8]
YZX_ORDER = [13, 4, 5, 9, 0, 6, 1, 7, 10, 12, 14, 2, 11, 8, 3]
ZXY_ORDER = [9, 6, 10, 1, 7, 13, 0, 12, 14, 4, 5, 2, 11, 8, 3]

# yzx array partitioned about tuple 5 = (7, 2, 6) by the x:y:z super key;
# slot 7 (the median's) is left as whatever it was.
YZX_PARTITIONED_LOWER = [13, 9, 0, 1, 10, 11, 3]
YZX_PARTITIONED_UPPER = [4, 6, 7, 12, 14, 2, 8]

EXPECTED_ROOT = 5
EXPECTED_CHILDREN = {
    # node: (less, greater)
    5: (1, 12),
    1: (13, 11),
    12: (7, 2),
    13: (9, 0),
    11: (10, 3),
    7: (6, 4),
    2: (14, 8),
}


def test_sample_sort_orders():
    points = example_point_set()
    assert merge_sort_indices(points, 0).tolist() == XYZ_ORDER
    assert merge_sort_indices(points, 1).tolist() == YZX_ORDER
    assert merge_sort_indices(points, 2).tolist() == ZXY_ORDER


def test_sample_tree_structure():
    points = example_point_set()
    tree = build_presort(points)
    assert tree.root == EXPECTED_ROOT
    for node, (lo, hi) in EXPECTED_CHILDREN.items():
        assert int(tree.less[node]) == lo
        assert int(tree.greater[node]) == hi
    leaves = set(range(15)) - set(EXPECTED_CHILDREN)
    for leaf in leaves:
        assert int(tree.less[leaf]) == -1
        assert int(tree.greater[leaf]) == -1
    assert tree_stats(tree) == (15, 3)


class TestPartitionAboutMedian:
    def test_sample_partition(self):
        points = example_point_set()
        source = np.array(YZX_ORDER, dtype=np.int64)
        dest = np.full(15, -9, dtype=np.int64)
        below, above = partition_about_median(points, source, dest, pivot=5, leading=0)
        assert (below, above) == (7, 7)
        assert dest[:7].tolist() == YZX_PARTITIONED_LOWER
        assert dest[7] == -9  # median slot untouched
        assert dest[8:].tolist() == YZX_PARTITIONED_UPPER

    def test_source_order_preserved_within_halves(self):
        # lower/upper halves keep source order: that is the whole point
        points = PointSet([(i, -i) for i in range(9)])
        source = merge_sort_indices(points, 1)  # sorted by dim 1: [8, 7, ..., 0]
        assert source.tolist() == [8, 7, 6, 5, 4, 3, 2, 1, 0]
        dest = np.full(9, -1, dtype=np.int64)
        partition_about_median(points, source, dest, pivot=4, leading=1)
        assert dest.tolist() == [8, 7, 6, 5, -1, 3, 2, 1, 0]

    def test_pivot_not_the_median_rejected(self):
        points = example_point_set()
        source = np.array(YZX_ORDER, dtype=np.int64)
        dest = np.empty(15, dtype=np.int64)
        with pytest.raises(ContractViolationError):
            partition_about_median(points, source, dest, pivot=8, leading=0)

    def test_pivot_absent_rejected(self):
        points = PointSet([(1,), (2,), (3,)])
        source = np.array([0, 2], dtype=np.int64)
        dest = np.empty(2, dtype=np.int64)
        with pytest.raises(ContractViolationError):
            partition_about_median(points, source, dest, pivot=1, leading=0)

    def test_duplicate_pivot_rejected(self):
        # two distinct indices holding the identical tuple
        points = PointSet([(5,), (5,), (1,)])
        source = np.array([2, 0, 1], dtype=np.int64)
        dest = np.empty(3, dtype=np.int64)
        with pytest.raises(ContractViolationError):
            partition_about_median(points, source, dest, pivot=0, leading=0)

    def test_shape_and_dtype_validation(self):
        points = PointSet([(1,), (2,)])
        good = np.array([0, 1], dtype=np.int64)
        with pytest.raises(ContractViolationError):
            partition_about_median(points, good, np.empty(3, dtype=np.int64), 0, 0)
        with pytest.raises(ContractViolationError):
            partition_about_median(points, good.astype(np.int32), good.copy(), 0, 0)
        with pytest.raises(ContractViolationError):
            partition_about_median(points, good, good.copy(), pivot=0, leading=1)
        with pytest.raises(ContractViolationError):
            partition_about_median(points, good, good.copy(), pivot=7, leading=0)


class TestCycleWorkspace:
    def test_one_level_matches_manual_partitions(self):
        points = example_point_set()
        ws, _, _ = BuildWorkspace.prepare(points)
        rows_before = [ws.arrays[d].copy() for d in range(3)]
        med = cycle_workspace(ws, 0, 15, depth=0)
        assert med == EXPECTED_ROOT
        # row j takes over the partitioned content of old row j+1, and the
        # old row 0 lands (partitioned) in the last row
        for dst_row, src in ((0, rows_before[1]), (1, rows_before[2]), (2, rows_before[0])):
            dest = np.full(15, int(ws.arrays[dst_row][7]), dtype=np.int64)
            partition_about_median(points, src, dest, pivot=med, leading=0)
            assert np.array_equal(ws.arrays[dst_row], dest)

    def test_median_slot_is_lower_middle(self):
        points = PointSet([(i,) for i in range(6)])
        ws, _, _ = BuildWorkspace.prepare(points)
        assert cycle_workspace(ws, 0, 6, depth=0) == 2  # rank (6-1)//2

    def test_range_validation(self):
        ws, _, _ = BuildWorkspace.prepare(example_point_set())
        with pytest.raises(ContractViolationError):
            cycle_workspace(ws, 5, 5, depth=0)
        with pytest.raises(ContractViolationError):
            cycle_workspace(ws, 0, 16, depth=0)
        with pytest.raises(ContractViolationError):
            cycle_workspace(ws, 0, 15, depth=-1)


class TestBuildPresort:
    def test_matches_naive_reference(self):
        rng = np.random.default_rng(5150)
        for _ in range(50):
            n = int(rng.integers(1, 260))
            k = int(rng.integers(1, 6))
            spread = int(rng.choice([2, 6, 10**5]))
            points = PointSet(rng.integers(-spread, spread + 1, size=(n, k)))
            assert trees_equal(build_presort(points), build_naive(points))

    def test_deterministic(self):
        points = generate_points(2000, 3, seed=99)
        assert trees_equal(build_presort(points), build_presort(points))

    def test_thread_budgets_change_nothing(self):
        points = generate_points(9000, 3, seed=5)
        base = build_presort(points, threads=1)
        for q in (2, 3, 4, 8):
            assert trees_equal(base, build_presort(points, threads=q))

    def test_staged_outcome_bookkeeping(self):
        points = PointSet([(1, 1), (1, 1), (2, 2), (3, 3), (2, 2)])
        out = build_presort_staged(points)
        assert out.removed == 2
        assert out.sort_seconds >= 0 and out.dedup_seconds >= 0 and out.build_seconds >= 0
        assert out.total_seconds == pytest.approx(
            out.sort_seconds + out.dedup_seconds + out.build_seconds
        )
        assert out.copies > 0 and out.compares > 0
        assert tree_stats(out.tree) == (3, 1)

    def test_depth_is_the_balanced_bound(self):
        for n in (1, 2, 3, 4, 5, 15, 16, 17, 100, 1000):
            points = generate_points(n, 2, seed=n)
            count, depth = tree_stats(build_presort(points))
            assert count == n  # 32-bit coords: no collisions at these sizes
            assert depth == depth_bound(n)

    def test_all_duplicates_collapse_to_one_node(self):
        points = PointSet([(9, 9, 9)] * 11)
        out = build_presort_staged(points)
        assert out.removed == 10
        assert tree_stats(out.tree) == (1, 0)
        assert out.tree.root == 0  # smallest index survives

    def test_bad_thread_budget_rejected(self):
        with pytest.raises(ContractViolationError):
            build_presort(PointSet([(1,)]), threads=0)

    def test_copy_counts_stay_loglinear(self):
        # generous ceiling: C * (k+1) * n * ceil(log2 n) with C = 3; a
        # quadratic regression would blow through it at the larger sizes
        for n, k in ((1000, 3), (4096, 4), (10000, 2)):
            points = generate_points(n, k, seed=n + k)
            out = build_presort_staged(points)
            ceiling = 3 * (k + 1) * n * math.ceil(math.log2(n))
            assert out.copies <= ceiling, (n, k, out.copies, ceiling)
