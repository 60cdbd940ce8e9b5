import time

import pytest

from src.sweep_runner import SweepRunner


def slow_square(n):
    # later items finish first under a pool
    time.sleep(0.002 * (5 - n % 5))
    return n * n


def fails_on_odd(n):
    if n % 2:
        raise ValueError(f"odd {n}")
    return n


class TestSweepRunner:
    @pytest.mark.parametrize('workers', [1, 3, 8])
    def test_results_keep_item_order(self, workers):
        assert SweepRunner(max_workers=workers).map(slow_square, list(range(12))) == [n * n for n in range(12)]

    def test_run_collects_errors_sorted(self):
        job = SweepRunner(max_workers=4).run(fails_on_odd, list(range(6)), name='odd')
        assert job.status == 'failed'
        assert job.completed_items == 3
        assert job.failed_items == 3
        assert [e['index'] for e in job.errors] == [1, 3, 5]
        assert job.results[::2] == [0, 2, 4]

    def test_map_raises_lowest_index_failure(self):
        with pytest.raises(ValueError, match='odd 1'):
            SweepRunner(max_workers=4).map(fails_on_odd, list(range(6)))

    def test_empty_sweep(self):
        job = SweepRunner().run(slow_square, [])
        assert job.status == 'completed'
        assert job.results == []

    def test_needs_a_worker(self):
        with pytest.raises(ValueError):
            SweepRunner(max_workers=0)
