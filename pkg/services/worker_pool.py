# services/worker_pool.py
"""
Fixed worker pool behind the SP / WSP dimension tags.
- WSP: every task is submitted on its own; idle workers pick up whatever is queued
- SP: tasks are cut into one contiguous group per worker up front
- SR, a single worker, or a call made from inside a pool task: tasks run inline
Results always come back in task order.
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")

_local = threading.local()


def in_worker() -> bool:
    return getattr(_local, "active", False)


def _guarded(task: Callable[[], T]) -> Callable[[], T]:
    def run():
        _local.active = True
        try:
            return task()
        finally:
            _local.active = False
    return run


def _run_group(tasks: Sequence[Callable[[], T]]) -> List[T]:
    return [task() for task in tasks]


class WorkerPool:
    def __init__(self, threads: int = 1):
        self.threads = max(1, threads)
        self._executor = ThreadPoolExecutor(max_workers=self.threads) if self.threads > 1 else None

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(self, *exc):
        self.shutdown()

    def shutdown(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def _inline(self, count: int) -> bool:
        return self._executor is None or count <= 1 or in_worker()

    def run_dynamic(self, tasks: Sequence[Callable[[], T]]) -> List[T]:
        if self._inline(len(tasks)):
            return _run_group(tasks)
        futures = {self._executor.submit(_guarded(task)): i for i, task in enumerate(tasks)}
        results: List = [None] * len(tasks)
        for fut in as_completed(futures):
            results[futures[fut]] = fut.result()
        return results

    def run_static(self, tasks: Sequence[Callable[[], T]]) -> List[T]:
        if self._inline(len(tasks)):
            return _run_group(tasks)
        width = -(-len(tasks) // self.threads)
        groups = [tasks[i:i + width] for i in range(0, len(tasks), width)]
        futures = [self._executor.submit(_guarded(lambda g=g: _run_group(g))) for g in groups]
        results: List = []
        for fut in futures:
            results.extend(fut.result())
        return results

    def run(self, tag: str, tasks: Sequence[Callable[[], T]]) -> List[T]:
        """Dispatch on a parallel tag: SR | SP | WSP."""
        if tag == "WSP":
            return self.run_dynamic(tasks)
        if tag == "SP":
            return self.run_static(tasks)
        return _run_group(tasks)
