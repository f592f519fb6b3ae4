"""
Tests for the ResultValidator class.
"""

import json
import os
import shutil
import tempfile
import unittest

import numpy as np
import pandas as pd

from src.analysis.hyperbolicity import certify_uh
from src.analysis.uniformity import avalanche_check
from src.cocycles import matrices
from src.cocycles.cocycle import LocallyConstantCocycle
from src.dynamics.subshift import SubshiftSpec
from src.validation.result_validator import ResultValidator


class TestResultValidator(unittest.TestCase):
    """Tests for the ResultValidator class."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()
        self.validator = ResultValidator()

    def tearDown(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir)

    def test_trace(self):
        self.assertTrue(self.validator.validate_trace([0.0, 0.1, 0.2])['success'])
        self.assertFalse(self.validator.validate_trace([0.1, np.nan], name="nan")['success'])
        self.assertFalse(self.validator.validate_trace([-0.5], name="negative")['success'])

    def test_intervals(self):
        self.assertTrue(self.validator.validate_intervals([(-2.0, -1.0), (0.0, 2.0)], 3.0)['success'])
        self.assertTrue(self.validator.validate_intervals([], 0.0, name="empty")['success'])
        self.assertFalse(self.validator.validate_intervals([(0.0, 2.0), (1.0, 3.0)], name="overlap")['success'])
        self.assertFalse(self.validator.validate_intervals([(1.0, 0.0)], name="reversed")['success'])
        result = self.validator.validate_intervals([(0.0, 1.0)], 2.0, name="measure")
        self.assertFalse(result['success'])
        self.assertIn("differs", result['details']['error'])

    def test_uh_certificate(self):
        fib = SubshiftSpec.fibonacci()
        cocycle = LocallyConstantCocycle.constant(fib, matrices.mat2(2.0, 0.0, 0.0, 0.5))
        certificate = certify_uh(cocycle, horizon=4)
        self.assertTrue(self.validator.validate_certificate(certificate.to_dict(), "uh")['success'])

        document = certificate.to_dict()
        document["cones"] = {}
        self.assertFalse(self.validator.validate_certificate(document, "uh", name="empty")['success'])
        del document["margin"]
        self.assertFalse(self.validator.validate_certificate(document, "uh", name="missing")['success'])

    def test_avalanche_certificate(self):
        spec = SubshiftSpec.periodic("a")
        cocycle = LocallyConstantCocycle.constant(spec, matrices.mat2(2.0, 0.0, 0.0, 0.5))
        outcome = avalanche_check(cocycle, np.log(2.0), 40, 0.05, validation_horizon=64)
        self.assertTrue(outcome.certified)
        self.assertTrue(self.validator.validate_certificate(outcome.to_dict(), "avalanche")['success'])

    def test_frame(self):
        good = pd.DataFrame({"E": [0.0, 1.0], "class": ["z", "nuh"]})
        self.assertTrue(self.validator.validate_frame(good)['success'])
        bad = pd.DataFrame({"E": [0.0, np.inf]})
        self.assertFalse(self.validator.validate_frame(bad, name="bad")['success'])

    def test_report(self):
        self.validator.validate_trace([0.1], name="ok")
        self.validator.validate_trace([np.inf], name="broken")
        output_file = os.path.join(self.temp_dir, "validation.json")
        summary = self.validator.generate_validation_report(output_file)
        self.assertEqual(summary['total_checks'], 2)
        self.assertEqual(summary['failed_checks'], 1)
        self.assertEqual(list(summary['issues']), ["broken"])
        with open(output_file) as f:
            self.assertIn("results", json.load(f))


if __name__ == "__main__":
    unittest.main()
