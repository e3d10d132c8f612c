"""
Process-pool helper.

Results are always returned in task order; workers <= 1 runs inline.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar

from floodbound.config.defaults import WORKERS_ENV_VAR


logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    """Parallelism degree from the environment (1 when unset or invalid)."""
    raw = os.environ.get(WORKERS_ENV_VAR, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn: Callable[[T], R], tasks: Sequence[T], workers: Optional[int] = None) -> List[R]:
    """
    Apply ``fn`` to every task, possibly in worker processes.

    ``fn`` must be a module-level function and tasks must be picklable.
    """
    n_workers = default_workers() if workers is None else int(workers)
    if n_workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]

    n_workers = min(n_workers, len(tasks))
    logger.info("running %d tasks on %d worker processes", len(tasks), n_workers)
    results: List[Optional[R]] = [None] * len(tasks)
    with ProcessPoolExecutor(max_workers=n_workers) as executor:
        futures = {executor.submit(fn, task): i for i, task in enumerate(tasks)}
        for future in as_completed(futures):
            results[futures[future]] = future.result()
    return results  # type: ignore[return-value]
