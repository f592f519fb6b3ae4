"""
BatchProcessor Module

This module maps a pure function over independent work items (energies,
perturbation trials, approximant levels) with joblib, tracks soft failures,
and returns results in input order so every reduction is schedule independent.
"""

import time
import logging

from joblib import Parallel, delayed

from src.utils.configuration import activate, active_config
from src.utils.exceptions import BudgetExceededError

try:
    from tqdm import tqdm
    HAS_TQDM = True
except ImportError:
    HAS_TQDM = False


def _run_item(fn, index, item, soft_errors, config=None):
    """
    Evaluate one work item, turning soft errors into a recorded value.

    Args:
        fn (callable): Pure function of one item
        index (int): Position of the item in the input list
        item: Work item
        soft_errors (tuple): Exception types recorded instead of raised
        config (dict, optional): Configuration activated around the call in worker processes.
            Defaults to None.

    Returns:
        dict: {'index', 'status', 'value'} or {'index', 'status', 'error', 'error_type'}
    """
    previous = activate(config) if config is not None else None
    try:
        return {'index': index, 'status': 'success', 'value': fn(item)}
    except soft_errors as e:
        return {'index': index, 'status': 'error', 'error': str(e), 'error_type': type(e).__name__}
    finally:
        if config is not None:
            activate(previous)


class BatchProcessor:
    """
    Runs independent work items sequentially or through joblib.
    """

    def __init__(self, n_jobs=1, verbose=False, soft_errors=(BudgetExceededError,), desc="Processing"):
        """
        Initialize with parallelism settings.

        Args:
            n_jobs (int, optional): Worker processes; 1 runs in-process. Defaults to 1.
            verbose (bool, optional): Show a progress bar when tqdm is available. Defaults to False.
            soft_errors (tuple, optional): Exception types recorded as per-item failures.
                Defaults to (BudgetExceededError,).
            desc (str, optional): Progress bar label. Defaults to "Processing".
        """
        self.n_jobs = max(1, int(n_jobs or 1))
        self.verbose = verbose
        self.soft_errors = tuple(soft_errors)
        self.desc = desc
        self.logger = logging.getLogger("BatchProcessor")

        # Results tracking
        self.results = {}

    def map(self, fn, items):
        """
        Apply fn to every item.

        Args:
            fn (callable): Pure function of one item (must pickle for n_jobs > 1)
            items (iterable): Work items

        Returns:
            list: Per-item result dicts in input order
        """
        items = list(items)
        start_time = time.time()

        if self.n_jobs == 1:
            iterator = enumerate(items)
            if self.verbose and HAS_TQDM:
                iterator = tqdm(iterator, total=len(items), desc=self.desc)
            outcomes = [_run_item(fn, i, item, self.soft_errors) for i, item in iterator]
        else:
            # Worker processes start from the built-in defaults
            config = active_config()
            outcomes = Parallel(n_jobs=self.n_jobs)(
                delayed(_run_item)(fn, i, item, self.soft_errors, config) for i, item in enumerate(items)
            )
        outcomes.sort(key=lambda outcome: outcome['index'])

        failures = [
            {'index': o['index'], 'error': o['error'], 'error_type': o['error_type']}
            for o in outcomes if o['status'] != 'success'
        ]
        for failure in failures:
            self.logger.warning(f"{self.desc}: item {failure['index']} failed softly: {failure['error']}")

        total_time = time.time() - start_time
        self.results = {
            'description': self.desc,
            'total_items': len(items),
            'successful_items': len(items) - len(failures),
            'failed_items': len(failures),
            'failures': failures,
            'total_time': total_time,
        }
        self.logger.debug(f"{self.desc}: {len(items)} items in {total_time:.2f} seconds")
        return outcomes

    def map_values(self, fn, items, fallback=None):
        """
        Like map, but return bare values; failed items yield fallback(result_dict).
        """
        values = []
        for outcome in self.map(fn, items):
            if outcome['status'] == 'success':
                values.append(outcome['value'])
            elif fallback is not None:
                values.append(fallback(outcome))
            else:
                values.append(None)
        return values
