"""
Tests for the BatchProcessor class.
"""

import unittest

from src.processing.batch_processor import BatchProcessor
from src.utils.configuration import Configuration, default_value
from src.utils.exceptions import BudgetExceededError


def square(x):
    return x * x


def budget_on_odd(x):
    if x % 2:
        raise BudgetExceededError(f"item {x} over budget")
    return x


def always_fails(x):
    raise RuntimeError("hard failure")


def configured_budget(x):
    return default_value('general.budget')


class TestBatchProcessor(unittest.TestCase):
    """Tests for the BatchProcessor class."""

    def test_sequential_order(self):
        processor = BatchProcessor(n_jobs=1)
        self.assertEqual(processor.map_values(square, [3, 1, 2]), [9, 1, 4])
        self.assertEqual(processor.results['total_items'], 3)
        self.assertEqual(processor.results['failed_items'], 0)

    def test_parallel_matches_sequential(self):
        items = list(range(20))
        sequential = BatchProcessor(n_jobs=1).map_values(square, items)
        parallel = BatchProcessor(n_jobs=2).map_values(square, items)
        self.assertEqual(parallel, sequential)

    def test_soft_errors_are_recorded(self):
        processor = BatchProcessor(n_jobs=1, desc="Budgeted")
        outcomes = processor.map(budget_on_odd, [0, 1, 2, 3])
        self.assertEqual([o['status'] for o in outcomes], ['success', 'error', 'success', 'error'])
        self.assertEqual(outcomes[1]['error_type'], 'BudgetExceededError')
        self.assertEqual(processor.results['failed_items'], 2)
        self.assertEqual([f['index'] for f in processor.results['failures']], [1, 3])

    def test_fallback_values(self):
        processor = BatchProcessor(n_jobs=1)
        values = processor.map_values(budget_on_odd, [0, 1, 2], fallback=lambda outcome: -1)
        self.assertEqual(values, [0, -1, 2])
        self.assertEqual(processor.map_values(budget_on_odd, [1]), [None])

    def test_hard_errors_propagate(self):
        processor = BatchProcessor(n_jobs=1)
        with self.assertRaises(RuntimeError):
            processor.map(always_fails, [1])

    def test_no_soft_errors(self):
        processor = BatchProcessor(n_jobs=1, soft_errors=())
        with self.assertRaises(BudgetExceededError):
            processor.map(budget_on_odd, [1])

    def test_workers_see_active_configuration(self):
        config = Configuration(environ={})
        config.set_config_value('general.budget', 12345)
        with config.activated():
            sequential = BatchProcessor(n_jobs=1).map_values(configured_budget, [0, 1])
            parallel = BatchProcessor(n_jobs=2).map_values(configured_budget, [0, 1, 2])
        self.assertEqual(sequential, [12345, 12345])
        self.assertEqual(parallel, [12345, 12345, 12345])
        self.assertNotEqual(configured_budget(0), 12345)


if __name__ == "__main__":
    unittest.main()
