"""Fan-out of independent solves over a thread pool."""

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor

from jmgtlab.models.experiment import TaskRecord

logger = logging.getLogger(__name__)


class TaskRunner:
    """
    Run independent tasks with up to ``threads`` workers.

    Results come back in submission order; every task is logged into
    ``records`` with its wall-clock time. With one thread the tasks run
    inline, in order, which makes the run reproducible bit for bit.
    """

    def __init__(self, threads: int | None = None):
        self.threads = max(1, threads or os.cpu_count() or 1)
        self.records: list[TaskRecord] = []

    def _timed(self, fn, item, name):
        start = time.perf_counter()
        try:
            result = fn(item)
        except Exception as exc:
            elapsed = time.perf_counter() - start
            self.records.append(
                TaskRecord(name=name, status="failed", seconds=elapsed, error=str(exc))
            )
            raise
        self.records.append(TaskRecord(name=name, seconds=time.perf_counter() - start))
        logger.debug("task %s finished", name)
        return result

    def map(self, fn, items, names: list[str] | None = None) -> list:
        """
        Apply ``fn`` to every item.

        Raises:
            The first failure in submission order, after every task has ended
        """
        items = list(items)
        names = names or [f"{getattr(fn, '__name__', 'task')}[{i}]" for i in range(len(items))]
        if self.threads == 1 or len(items) <= 1:
            return [self._timed(fn, item, name) for item, name in zip(items, names)]

        with ThreadPoolExecutor(max_workers=min(self.threads, len(items))) as pool:
            futures = [pool.submit(self._timed, fn, item, name) for item, name in zip(items, names)]
        errors = [f.exception() for f in futures if f.exception() is not None]
        if errors:
            raise errors[0]
        return [f.result() for f in futures]
