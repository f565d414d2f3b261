"""Structural verification of built trees, plus a naive reference builder.

``check_validity`` proves three things about a tree: every reachable node
sits on the correct side of *all* of its ancestors (by each ancestor's
super key, not just its parent's), the child arrays contain no dangling or
repeated references, and the shape numbers (node count, depth, per-node
subtree imbalance) are what a balanced build promises.

``build_naive`` is the cross-check: a deliberately simple builder that
shares no code with the real ones — numpy lexsort per level, nothing
incremental — so agreement between all three is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .core import ContractViolationError, KdTree, PointSet

_CODE_NAMES = {
    K.VIOL_DANGLING: "dangling",
    K.VIOL_REPEATED: "repeated",
    K.VIOL_ORDER: "ordering",
}


@dataclass(frozen=True)
class Violation:
    """One structural defect.

    For "dangling"/"repeated", `subject` is the parent whose child slot is
    bad and `other` the offending reference; for "ordering", `subject` is
    the misplaced node and `other` the ancestor it violates.
    """

    kind: str
    subject: int
    depth: int
    other: int

    def __str__(self) -> str:
        if self.kind == "ordering":
            return (
                f"node {self.subject} (depth {self.depth}) is on the wrong "
                f"side of ancestor {self.other}"
            )
        return (
            f"node {self.subject} (depth {self.depth}) has a {self.kind} "
            f"child reference {self.other}"
        )


@dataclass
class ValidityReport:
    """Outcome of check_validity.

    `valid` means zero violations were found and, when an expected node
    count was supplied, that the tree holds exactly that many nodes.
    `violations` holds at most the first `violation_count` defects (the
    scan caps how many it records); `max_imbalance` is the largest
    less/greater subtree size difference at any node, and `depth` counts
    edges on the longest root-to-leaf path (-1 for an empty tree).
    """

    valid: bool
    node_count: int
    depth: int
    max_imbalance: int
    violation_count: int
    violations: list[Violation] = field(default_factory=list)

    def summary(self) -> str:
        if self.valid:
            return (
                f"valid: {self.node_count} nodes, depth {self.depth}, "
                f"max imbalance {self.max_imbalance}"
            )
        head = "; ".join(str(v) for v in self.violations[:3])
        return f"INVALID ({self.violation_count} violations): {head}"


def check_validity(
    points: PointSet,
    tree: KdTree,
    expected_count: int | None = None,
    max_recorded: int = 16,
) -> ValidityReport:
    """Scan a tree bottom to top and report on its structure.

    Every reachable node is compared against each of its ancestors by the
    ancestor's level key, and the child arrays are checked for references
    that escape the point set or appear twice.  An empty tree (root -1) is
    vacuously valid with depth -1.  Shape mismatches between the tree and
    the point set are caller errors and raise, they are not reported as
    violations.
    """
    if tree.k != points.k:
        raise ContractViolationError(
            f"tree is {tree.k}-dimensional but the points are {points.k}-dimensional"
        )
    n = points.n
    if len(tree.less) != n or len(tree.greater) != n:
        raise ContractViolationError(
            "child arrays must have one slot per point "
            f"(need {n}, got {len(tree.less)}/{len(tree.greater)})"
        )
    if tree.root < 0:
        ok = expected_count in (None, 0)
        return ValidityReport(
            valid=ok, node_count=0, depth=-1, max_imbalance=0, violation_count=0
        )
    less = np.ascontiguousarray(tree.less, dtype=np.int64)
    greater = np.ascontiguousarray(tree.greater, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    side = np.full(n, -1, dtype=np.int64)
    depth = np.full(n, -1, dtype=np.int64)
    rows = np.zeros((max(max_recorded, 1), 4), dtype=np.int64)
    visited, max_depth, nviol = K.scan_tree(
        less, greater, tree.root, parent, side, depth, rows
    )
    nviol = int(
        K.check_order(points.coords, parent, side, depth, rows, nviol, K.new_stats())
    )
    order = np.argsort(-depth).astype(np.int64)
    imbalance = int(K.subtree_imbalance(less, greater, depth, order))
    recorded = min(nviol, len(rows))
    violations = [
        Violation(
            kind=_CODE_NAMES.get(int(code), f"code-{int(code)}"),
            subject=int(subject),
            depth=int(d),
            other=int(extra),
        )
        for subject, d, code, extra in rows[:recorded]
    ]
    count_ok = expected_count is None or int(visited) == expected_count
    return ValidityReport(
        valid=(nviol == 0 and count_ok),
        node_count=int(visited),
        depth=int(max_depth),
        max_imbalance=imbalance,
        violation_count=nviol,
        violations=violations,
    )


def trees_equal(a: KdTree, b: KdTree) -> bool:
    """True when the trees are identical node for node.

    The array form is canonical (unused slots are always -1), so equality
    is simply same dimensionality, same root, same child arrays.
    """
    return (
        a.k == b.k
        and a.root == b.root
        and len(a.less) == len(b.less)
        and bool(np.array_equal(a.less, b.less))
        and bool(np.array_equal(a.greater, b.greater))
    )


def build_naive(points: PointSet) -> KdTree:
    """Reference build: numpy lexsort at every level, no shared machinery.

    Horribly superlinear and proud of it — each level re-sorts its whole
    range — but short enough to trust by inspection.  Duplicates are
    dropped first (smallest index survives), medians are the lower-middle
    element of the cyclic super-key order, exactly like the real builders.
    """
    coords = points.coords
    n, k = points.n, points.k
    _, first = np.unique(coords, axis=0, return_index=True)
    ids = np.sort(first).astype(np.int64)
    less = np.full(n, -1, dtype=np.int64)
    greater = np.full(n, -1, dtype=np.int64)

    def rec(sub: np.ndarray, lead: int) -> int:
        if sub.size == 0:
            return -1
        cols = tuple(coords[sub, (lead + j) % k] for j in range(k))
        order = np.lexsort((sub,) + tuple(reversed(cols)))
        ranked = sub[order]
        mid = (ranked.size - 1) // 2
        node = int(ranked[mid])
        nlead = (lead + 1) % k
        less[node] = rec(ranked[:mid], nlead)
        greater[node] = rec(ranked[mid + 1 :], nlead)
        return node

    root = rec(ids, 0)
    less.setflags(write=False)
    greater.setflags(write=False)
    return KdTree(k=k, root=root, less=less, greater=greater)
