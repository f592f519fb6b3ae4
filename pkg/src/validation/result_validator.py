"""
ResultValidator Module

This module validates laboratory results before they are emitted. It checks
exponent traces, interval sets, certificates and CSV tables for the
structural properties downstream plotting relies on.
"""

import json
import logging

import numpy as np

CERTIFICATE_FIELDS = {
    "uh": ("block_length", "radius", "margin", "cones", "min_log_expansion", "lower_bound"),
    "avalanche": ("L", "ell", "epsilon", "kappa", "lambda0", "validation_horizon", "band"),
}


class ResultValidator:
    """
    Validates laboratory results for consistency.
    """

    def __init__(self, verbose=False, tol=1e-9):
        """
        Initialize validator.

        Args:
            verbose (bool, optional): Whether to log every issue. Defaults to False.
            tol (float, optional): Tolerance for measure comparisons. Defaults to 1e-9.
        """
        self.verbose = verbose
        self.tol = tol
        self.logger = logging.getLogger("ResultValidator")

        # Validation results
        self.validation_results = {}

    def _record(self, name, results):
        self.validation_results[name] = results
        if not results['success'] and self.verbose:
            self.logger.warning(f"Validation of {name} failed: {results['details'].get('error')}")
        return results

    def validate_trace(self, values, name="trace"):
        """
        Check that an exponent trace is finite and nonnegative.

        Args:
            values (array-like): Finite-scale exponents
            name (str, optional): Label for the report. Defaults to "trace".

        Returns:
            dict: Validation results with success flag and details
        """
        results = {'result_type': 'trace', 'success': False, 'details': {}}
        values = np.asarray(values, dtype=float)
        results['details']['length'] = int(values.size)
        if not np.isfinite(values).all():
            results['details']['error'] = "Trace contains non-finite values"
        elif values.size and values.min() < -self.tol:
            results['details']['error'] = f"Trace has negative exponent {values.min():.3e}"
        else:
            results['success'] = True
        return self._record(name, results)

    def validate_intervals(self, intervals, measure=None, name="intervals"):
        """
        Check that intervals are sorted, disjoint, and that a reported measure is their length sum.

        Args:
            intervals (list of tuple): (lo, hi) pairs
            measure (float, optional): Reported Lebesgue measure. Defaults to None.
            name (str, optional): Label for the report. Defaults to "intervals".

        Returns:
            dict: Validation results with success flag and details
        """
        results = {'result_type': 'intervals', 'success': False, 'details': {}}
        arr = np.asarray(intervals, dtype=float).reshape(-1, 2)
        results['details']['count'] = int(arr.shape[0])
        if not np.isfinite(arr).all():
            results['details']['error'] = "Interval endpoints are not finite"
        elif np.any(arr[:, 1] < arr[:, 0]):
            results['details']['error'] = "Interval with hi < lo"
        elif arr.shape[0] > 1 and np.any(arr[1:, 0] < arr[:-1, 1]):
            results['details']['error'] = "Intervals overlap or are unsorted"
        else:
            total = float((arr[:, 1] - arr[:, 0]).sum())
            results['details']['length_sum'] = total
            if measure is not None and abs(measure - total) > self.tol * max(1.0, total):
                results['details']['error'] = f"Measure {measure} differs from length sum {total}"
            else:
                results['success'] = True
        return self._record(name, results)

    def validate_certificate(self, document, kind="uh", name="certificate"):
        """
        Check that a serialized certificate carries every replay parameter.

        Args:
            document (dict): Serialized certificate
            kind (str, optional): 'uh' or 'avalanche'. Defaults to "uh".
            name (str, optional): Label for the report. Defaults to "certificate".

        Returns:
            dict: Validation results with success flag and details
        """
        results = {'result_type': f'{kind}_certificate', 'success': False, 'details': {}}
        missing = [k for k in CERTIFICATE_FIELDS[kind] if k not in document]
        if missing:
            results['details']['error'] = f"Missing required keys: {missing}"
        elif kind == "uh" and not document["cones"]:
            results['details']['error'] = "Empty cone table"
        else:
            results['success'] = True
        return self._record(name, results)

    def validate_frame(self, df, name="table"):
        """
        Check that every numeric column of a table is finite.

        Args:
            df (DataFrame): Table about to be written
            name (str, optional): Label for the report. Defaults to "table".

        Returns:
            dict: Validation results with success flag and details
        """
        results = {'result_type': 'table', 'success': False, 'details': {'rows': int(len(df))}}
        numeric = df.select_dtypes(include=[np.number])
        bad = [c for c in numeric.columns if not np.isfinite(numeric[c].to_numpy(dtype=float)).all()]
        if bad:
            results['details']['error'] = f"Non-finite values in columns {bad}"
        else:
            results['success'] = True
        return self._record(name, results)

    @property
    def issues(self):
        return {name: r['details']['error'] for name, r in self.validation_results.items()
                if not r['success']}

    def generate_validation_report(self, output_file=None):
        """
        Generate a validation report based on validation results.

        Args:
            output_file (str or Path, optional): Path to save the report. Defaults to None.

        Returns:
            dict: Summary of validation results
        """
        total = len(self.validation_results)
        valid = sum(1 for r in self.validation_results.values() if r['success'])
        summary = {
            'total_checks': total,
            'passed_checks': valid,
            'failed_checks': total - valid,
            'issues': self.issues,
        }
        if output_file:
            with open(output_file, 'w', encoding='utf-8') as f:
                json.dump({'summary': summary, 'results': self.validation_results}, f,
                          indent=2, sort_keys=True, default=str)
            self.logger.info(f"Validation report saved to {output_file}")
        return summary