"""Fork/join helpers for spending a thread budget on divided work.

The convention throughout the package: a task holding a budget of q threads
may hand q // 2 of them to a child thread for one half of the work, keep
q - q // 2 for its own half, and join before combining.  A budget of one
means "do everything on the current thread".
"""

from __future__ import annotations

import threading
from typing import Callable


def split_budget(q: int) -> tuple[int, int]:
    """(child share, parent share) of a thread budget q; child gets q // 2."""
    return q // 2, q - q // 2


def fork_join(child_task: Callable[[], None], parent_task: Callable[[], None]) -> None:
    """Run child_task on a new thread, parent_task inline, and join.

    The child's exception (if any) is re-raised here after the join, unless
    the parent also raised — the parent's error wins then.
    """
    failure: list[BaseException | None] = [None]

    def run_child() -> None:
        try:
            child_task()
        except BaseException as exc:  # noqa: BLE001 - ferried across the join
            failure[0] = exc

    worker = threading.Thread(target=run_child)
    worker.start()
    try:
        parent_task()
    finally:
        worker.join()
    if failure[0] is not None:
        raise failure[0]
