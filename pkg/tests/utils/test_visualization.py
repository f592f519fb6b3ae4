"""
Tests for the matplotlib figures.
"""

import os
import shutil
import tempfile
import unittest

from src.utils import visualization


class TestVisualization(unittest.TestCase):
    """Figures are written as PNG and failures return None."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_exponent_traces(self):
        output_file = os.path.join(self.temp_dir, "exponents.png")
        fig = visualization.plot_exponent_traces([16, 32, 64], [0.3, 0.2, 0.15], [0.0, 0.05, 0.1],
                                                 [0.3, 0.15, 0.05], output_file)
        self.assertIsNotNone(fig)
        self.assertTrue(os.path.getsize(output_file) > 0)

    def test_band_sets(self):
        output_file = os.path.join(self.temp_dir, "approximants.png")
        levels = [{"q": 1, "bands": [[-2.0, 2.0]]}, {"q": 2, "bands": [[-2.0, -0.5], [0.5, 2.0]]}]
        self.assertIsNotNone(visualization.plot_band_sets(levels, output_file))
        self.assertTrue(os.path.exists(output_file))

    def test_classification_strip(self):
        output_file = os.path.join(self.temp_dir, "spectrum.png")
        fig = visualization.plot_classification_strip([-3.0, 0.0, 3.0], ["resolvent", "z", "nuh"],
                                                      [0.9, 0.0, 0.1], output_file)
        self.assertIsNotNone(fig)
        self.assertTrue(os.path.exists(output_file))

    def test_bad_input_returns_none(self):
        self.assertIsNone(visualization.plot_band_sets([{"bands": [[0.0, 1.0]]}]))


if __name__ == "__main__":
    unittest.main()
