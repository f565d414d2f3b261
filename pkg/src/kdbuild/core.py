"""Shared types for balanced k-d tree construction over integer tuples.

The central ordering device is the *super key*: comparing two k-tuples by
coordinate p first, then (p+1) mod k, and so on through all k coordinates.
Distinct tuples therefore never compare equal, which is what lets the tree
store one node per unique tuple and place every other node strictly on one
side of it.  Trees are kept in flat arrays — a node is just a row index
into the point set, with ``less``/``greater`` child arrays — so builders
can hand ranges to compiled kernels and verification can scan without
chasing Python objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, Sequence

import numpy as np


class EmptyInputError(ValueError):
    """Raised when an operation needs at least one point and got none."""


class ContractViolationError(ValueError):
    """Raised when a caller breaks a documented precondition, or when an
    internal invariant check trips (which would mean a builder bug)."""


class Ordering(IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def compare_super_key(a: Sequence[int], b: Sequence[int], leading: int) -> Ordering:
    """Compare two k-tuples by the cyclic super key starting at `leading`.

    Coordinates are consulted in the order leading, leading+1, ... wrapping
    mod k; the first difference decides.  EQUAL is only possible for
    identical tuples.
    """
    k = len(a)
    if len(b) != k:
        raise ContractViolationError(
            f"cannot compare tuples of different dimension ({k} vs {len(b)})"
        )
    if k == 0:
        raise ContractViolationError("zero-dimensional tuples cannot be ordered")
    if not 0 <= leading < k:
        raise ContractViolationError(f"leading dimension {leading} outside [0, {k})")
    for j in range(k):
        d = (leading + j) % k
        va, vb = int(a[d]), int(b[d])
        if va < vb:
            return Ordering.LESS
        if va > vb:
            return Ordering.GREATER
    return Ordering.EQUAL


class PointSet:
    """An immutable (n, k) table of integer coordinates.

    Rows are the points; a row index doubles as the point's identity
    everywhere else in the package (index arrays, tree nodes).  The
    underlying array is copied in, converted to int64 and frozen.
    """

    __slots__ = ("_coords",)

    def __init__(self, coords) -> None:
        arr = np.array(coords, dtype=np.int64, copy=True)
        if arr.ndim != 2:
            raise ContractViolationError(
                f"point set needs a 2-d table of coordinates, got {arr.ndim}-d"
            )
        if arr.shape[0] == 0:
            raise EmptyInputError("point set needs at least one point")
        if arr.shape[1] == 0:
            raise ContractViolationError("points need at least one coordinate")
        arr.setflags(write=False)
        self._coords = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "PointSet":
        """Adopt an int64 array without copying (internal fast path)."""
        self = object.__new__(cls)
        arr.setflags(write=False)
        self._coords = arr
        return self

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def n(self) -> int:
        return self._coords.shape[0]

    @property
    def k(self) -> int:
        return self._coords.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self._coords[i])

    def __repr__(self) -> str:
        return f"PointSet(n={self.n}, k={self.k})"


@dataclass(eq=False)
class KdTree:
    """A balanced k-d tree in array form.

    ``less[i]`` / ``greater[i]`` give the child node of tuple i on each
    side (-1 for none); ``root`` is the top node's tuple index.  The arrays
    always span the full original point set, so indices removed as
    duplicates simply never appear.
    """

    k: int
    root: int
    less: np.ndarray
    greater: np.ndarray

    def node(self, i: int) -> "KdNode":
        if not 0 <= i < len(self.less):
            raise ContractViolationError(f"node index {i} outside [0, {len(self.less)})")
        return KdNode(self, i)

    @property
    def root_node(self) -> "KdNode | None":
        return self.node(self.root) if self.root >= 0 else None


@dataclass(frozen=True)
class KdNode:
    """A cursor over one tree node; purely a convenience view."""

    tree: KdTree
    index: int

    @property
    def less(self) -> "KdNode | None":
        c = int(self.tree.less[self.index])
        return KdNode(self.tree, c) if c >= 0 else None

    @property
    def greater(self) -> "KdNode | None":
        c = int(self.tree.greater[self.index])
        return KdNode(self.tree, c) if c >= 0 else None


def tree_stats(tree: KdTree) -> tuple[int, int]:
    """(node count, depth) by iterative traversal; an empty tree is (0, -1).

    Depth counts edges, so a lone root has depth 0.  Walks `less`/`greater`
    directly and tolerates nothing unusual — malformed trees belong to the
    verifier, and this helper raises on out-of-range references.
    """
    if tree.root < 0:
        return 0, -1
    n = len(tree.less)
    count = 0
    deepest = 0
    stack: list[tuple[int, int]] = [(tree.root, 0)]
    seen = np.zeros(n, dtype=bool)
    while stack:
        v, d = stack.pop()
        if not 0 <= v < n:
            raise ContractViolationError(f"tree references node {v} outside [0, {n})")
        if seen[v]:
            raise ContractViolationError(f"tree references node {v} twice")
        seen[v] = True
        count += 1
        deepest = max(deepest, d)
        for c in (int(tree.less[v]), int(tree.greater[v])):
            if c != -1:
                stack.append((c, d + 1))
    return count, deepest


def walk_inorder(tree: KdTree) -> Iterator[int]:
    """Yield tuple indices in symmetric (less, node, greater) order."""
    stack: list[tuple[int, bool]] = []
    v = tree.root
    while v >= 0 or stack:
        while v >= 0:
            stack.append((v, True))
            v = int(tree.less[v])
        v, _ = stack.pop()
        yield v
        v = int(tree.greater[v])


@dataclass
class BuildOutcome:
    """A built tree plus its phase timings and instrumentation.

    ``removed`` is the number of duplicate tuples dropped before building;
    ``copies``/``compares`` aggregate element writes and whole super-key
    comparisons across every phase (all worker threads included).
    """

    tree: KdTree
    sort_seconds: float
    dedup_seconds: float
    build_seconds: float
    removed: int
    copies: int = 0
    compares: int = 0

    @property
    def total_seconds(self) -> float:
        return self.sort_seconds + self.dedup_seconds + self.build_seconds


def depth_bound(n: int) -> int:
    """Depth every balanced build must respect: floor(log2(n)), edges."""
    if n <= 0:
        raise ContractViolationError("depth bound needs a positive node count")
    return int(math.floor(math.log2(n)))
