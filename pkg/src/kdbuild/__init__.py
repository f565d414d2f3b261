"""Balanced k-d trees over integer tuples, two ways.

Two builders produce the identical tree for any input: ``build_presort``
sorts one index array per dimension up front and only partitions afterwards
(O(k n log n)), while ``build_median`` sorts once for duplicate removal and
then finds every split with worst-case-linear median-of-medians selection
(O(n log n) regardless of k).  ``verify`` proves the results structurally
sound and ``bench`` reproduces the scaling analyses (n log n growth,
thread-budget speedup models, dimension sweeps).
"""

from .bench import (
    ALGORITHMS,
    CSV_HEADER,
    DegenerateFitError,
    FitResult,
    InsufficientDataError,
    LineFit,
    MODEL_FITTERS,
    TimingSample,
    doubling_sizes,
    fit_amdahl,
    fit_contention,
    fit_nlogn,
    generate_points,
    load_points,
    read_samples,
    run_benchmark,
    save_points,
    sweep_dimensions,
    warm_up,
    write_samples,
)
from .build_median import build_median, build_median_staged, select_median
from .build_presort import (
    BuildWorkspace,
    build_presort,
    build_presort_staged,
    cycle_workspace,
    partition_about_median,
)
from .core import (
    BuildOutcome,
    ContractViolationError,
    EmptyInputError,
    KdNode,
    KdTree,
    Ordering,
    PointSet,
    compare_super_key,
    depth_bound,
    tree_stats,
    walk_inorder,
)
from .presort import merge_sort_indices, remove_duplicates
from .sampledata import EXAMPLE_TUPLES, example_point_set
from .verify import ValidityReport, Violation, build_naive, check_validity, trees_equal

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "CSV_HEADER",
    "BuildOutcome",
    "BuildWorkspace",
    "ContractViolationError",
    "DegenerateFitError",
    "EmptyInputError",
    "EXAMPLE_TUPLES",
    "FitResult",
    "InsufficientDataError",
    "KdNode",
    "KdTree",
    "LineFit",
    "MODEL_FITTERS",
    "Ordering",
    "PointSet",
    "TimingSample",
    "ValidityReport",
    "Violation",
    "build_median",
    "build_median_staged",
    "build_naive",
    "build_presort",
    "build_presort_staged",
    "check_validity",
    "compare_super_key",
    "cycle_workspace",
    "depth_bound",
    "doubling_sizes",
    "example_point_set",
    "fit_amdahl",
    "fit_contention",
    "fit_nlogn",
    "generate_points",
    "load_points",
    "merge_sort_indices",
    "partition_about_median",
    "read_samples",
    "remove_duplicates",
    "run_benchmark",
    "save_points",
    "select_median",
    "sweep_dimensions",
    "tree_stats",
    "trees_equal",
    "walk_inorder",
    "warm_up",
    "write_samples",
    "__version__",
]
