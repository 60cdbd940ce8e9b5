import concurrent.futures
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Sequence

logger = logging.getLogger(__name__)


@dataclass
class SweepJob:
    name: str
    total_items: int
    completed_items: int = 0
    failed_items: int = 0
    status: str = 'pending'
    results: List[Any] = field(default_factory=list)
    errors: List[Dict[str, Any]] = field(default_factory=list)


class SweepRunner:
    """
    Runs a pure function over many items on a thread pool.

    Results come back in item order whatever the completion order, so any
    reduction over them is independent of the number of workers.
    """

    def __init__(self, max_workers: int = 4):
        if max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers

    def run(self, fn: Callable[[Any], Any], items: Sequence[Any], name: str = 'sweep') -> SweepJob:
        job = SweepJob(name=name, total_items=len(items), status='running')
        slots: List[Any] = [None] * len(items)

        if self.max_workers == 1 or len(items) <= 1:
            for index, item in enumerate(items):
                self._collect(job, slots, index, lambda item=item: fn(item))
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                future_to_index = {executor.submit(fn, item): i for i, item in enumerate(items)}
                for future in concurrent.futures.as_completed(future_to_index):
                    self._collect(job, slots, future_to_index[future], future.result)

        job.results = slots
        job.errors.sort(key=lambda e: e['index'])
        job.status = 'failed' if job.errors else 'completed'
        logger.debug("Sweep %s: %d ok, %d failed", name, job.completed_items, job.failed_items)
        return job

    @staticmethod
    def _collect(job: SweepJob, slots: List[Any], index: int, get_result: Callable[[], Any]):
        try:
            slots[index] = get_result()
            job.completed_items += 1
        except Exception as exc:
            job.errors.append({'index': index, 'error': exc})
            job.failed_items += 1

    def map(self, fn: Callable[[Any], Any], items: Sequence[Any], name: str = 'sweep') -> List[Any]:
        """Ordered results; re-raises the failure of the lowest-index item."""
        job = self.run(fn, items, name)
        if job.errors:
            raise job.errors[0]['error']
        return job.results
