"""A small hand-checkable data set used by the demo and the test suite.

Fifteen 3-d tuples, chosen so that every interesting case shows up within
two levels of the build: ties on single coordinates that force the super
key to look deeper, a perfectly balanced 15-node result, and terminal
ranges of every small size on the way down.  The expected index orders and
the full expected tree are frozen in the test suite.
"""

from __future__ import annotations

from .core import PointSet

EXAMPLE_TUPLES: tuple[tuple[int, int, int], ...] = (
    (2, 3, 3),  # 0
    (5, 4, 2),  # 1
    (9, 6, 7),  # 2
    (4, 7, 9),  # 3
    (8, 1, 5),  # 4
    (7, 2, 6),  # 5   the root: median by x with ties broken on y, z
    (9, 4, 1),  # 6
    (8, 4, 2),  # 7
    (9, 7, 8),  # 8
    (6, 3, 1),  # 9
    (3, 5, 2),  # 10
    (1, 6, 8),  # 11
    (9, 5, 3),  # 12
    (2, 1, 3),  # 13
    (8, 6, 4),  # 14
)


def example_point_set() -> PointSet:
    """The 15-tuple sample as a PointSet."""
    return PointSet(EXAMPLE_TUPLES)
