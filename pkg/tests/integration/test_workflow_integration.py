"""
Integration tests for the cocycle laboratory workflow.

These tests run every command end to end on reduced grids and horizons and
check the emitted files.
"""

import json
import os
import shutil
import tempfile
import unittest

import pandas as pd

from src.utils.configuration import Configuration
from src.workflow import CocycleLabWorkflow

FIBONACCI = {"variant": "fibonacci"}
FREE_PERIODIC = {"variant": "periodic", "word": "a"}
INDICATOR_B = {"layers": [{"radius": 0, "table": {"b": 1.0}, "coefficient": 1.0, "default": 0.0}]}


class TestWorkflowIntegration(unittest.TestCase):
    """Integration tests for the laboratory commands."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir)

    def run_command(self, command, document, name="out", plot=False, options=None):
        config_file = os.path.join(self.temp_dir, f"{name}.json")
        with open(config_file, 'w') as f:
            json.dump(document, f)
        output_dir = os.path.join(self.temp_dir, name)
        workflow = CocycleLabWorkflow(Configuration(config_file, environ={}), output_dir=output_dir,
                                      threads=1, plot=plot, options=options)
        manifest = workflow.run(command)
        return manifest, output_dir

    def read_csv(self, output_dir, name):
        return pd.read_csv(os.path.join(output_dir, name))

    def test_subshift_command(self):
        manifest, out = self.run_command("subshift", {"subshift": FIBONACCI},
                                         options={"prefix": 13, "factors": 5, "frequencies": 2,
                                                  "sample_length": 4096})
        self.assertEqual(self.read_csv(out, "prefix.csv")["prefix"][0], "abaababaabaab")
        self.assertEqual(len(self.read_csv(out, "factors.csv")), 6)
        frequencies = self.read_csv(out, "frequencies.csv")
        self.assertAlmostEqual(frequencies["frequency"].sum(), 1.0, places=9)
        self.assertEqual(manifest["summary"]["factors"]["count"], 6)
        self.assertTrue(os.path.exists(os.path.join(out, "run.json")))

    def test_free_spectrum_scan(self):
        manifest, out = self.run_command("spectrum", {
            "subshift": FREE_PERIODIC,
            "potential": {"layers": []},
            "energies": {"min": -3.0, "max": 3.0, "step": 0.1},
            "spectrum": {"horizon": 256},
        })
        measure = manifest["summary"]["measure"]
        self.assertGreaterEqual(measure, 4.0)
        self.assertLessEqual(measure, 4.5)
        bands = self.read_csv(out, "bands.csv")
        self.assertEqual(len(bands), 1)
        scan = self.read_csv(out, "spectrum.csv")
        self.assertEqual(len(scan), 61)
        self.assertEqual(list(scan.columns), ["E", "class", "exponent", "certificate_id"])
        self.assertEqual(scan.loc[0, "class"], "resolvent")
        self.assertEqual(manifest["validation"]["failed_checks"], 0)

    def test_fibonacci_spectrum_is_smaller_than_free(self):
        energies = {"min": -3.0, "max": 3.0, "step": 0.1}
        free, _ = self.run_command("spectrum", {
            "subshift": FREE_PERIODIC, "potential": {"layers": []}, "energies": energies,
            "spectrum": {"horizon": 128},
        }, name="free")
        fib, out = self.run_command("spectrum", {
            "subshift": FIBONACCI, "potential": INDICATOR_B, "energies": energies,
            "spectrum": {"horizon": 128, "approximants": 6},
        }, name="fib")
        self.assertLess(fib["summary"]["measure"], free["summary"]["measure"])

        measures = self.read_csv(out, "approximant_measures.csv")
        self.assertEqual(list(measures["q"]), [2, 3, 5, 8, 13, 21])
        approximants = self.read_csv(out, "approximants.csv")
        self.assertEqual(list(approximants.columns), ["k", "band_lo", "band_hi"])
        self.assertEqual(set(approximants["k"]), set(range(1, 7)))

    def test_spectrum_output_is_deterministic(self):
        document = {
            "subshift": FIBONACCI, "potential": INDICATOR_B,
            "energies": {"min": -1.0, "max": 1.0, "points": 11}, "spectrum": {"horizon": 32},
        }
        _, first = self.run_command("spectrum", document, name="first")
        _, second = self.run_command("spectrum", document, name="second")
        for name in ("spectrum.csv", "bands.csv", "spectrum.json"):
            with open(os.path.join(first, name), 'rb') as f1, open(os.path.join(second, name), 'rb') as f2:
                self.assertEqual(f1.read(), f2.read())

    def test_exponent_command(self):
        manifest, out = self.run_command("exponent", {
            "subshift": FIBONACCI, "potential": INDICATOR_B,
            "energies": {"min": -1.0, "max": 1.0, "points": 5},
            "uniformity": {"horizons": [16, 32, 64], "sample_length": 4096},
        }, plot=True)
        exponents = self.read_csv(out, "exponents.csv")
        self.assertEqual(list(exponents["n"]), [16, 32, 64])
        self.assertTrue((exponents["sup_exp"] >= exponents["min_exp"]).all())
        self.assertEqual(len(self.read_csv(out, "mean_exponent.csv")), 5)
        self.assertIn(manifest["summary"]["verdict"], ("uh-certified", "small-exponent", "uniform", "undecided"))
        self.assertTrue(os.path.exists(os.path.join(out, "exponents.png")))

    def test_uh_command(self):
        manifest, out = self.run_command("uh", {
            "subshift": FIBONACCI, "potential": INDICATOR_B,
            "cocycle": {"kind": "schrodinger", "energy": 4.0}, "spectrum": {"horizon": 64},
        })
        self.assertTrue(manifest["summary"]["certified"])
        with open(os.path.join(out, "uh_certificate.json")) as f:
            certificate = json.load(f)
        self.assertTrue(certificate["certificate_id"].startswith("uh-N"))
        splitting = self.read_csv(out, "splitting.csv")
        self.assertEqual(list(splitting.columns), ["position", "unstable", "stable", "residual"])
        self.assertGreater(manifest["summary"]["lambda"], 1.0)

    def test_uh_command_records_missing_splitting(self):
        manifest, out = self.run_command("uh", {
            "subshift": FIBONACCI, "cocycle": {"kind": "rotation", "energy": 0.5},
            "spectrum": {"horizon": 8},
        })
        self.assertFalse(manifest["summary"]["certified"])
        self.assertEqual(manifest["soft_failures"][0]["item"], "splitting")
        self.assertFalse(os.path.exists(os.path.join(out, "splitting.csv")))

    def test_avalanche_command(self):
        manifest, out = self.run_command("avalanche", {
            "subshift": FREE_PERIODIC,
            "cocycle": {"kind": "constant", "matrix": [2.0, 0.0, 0.0, 0.5]},
            "avalanche": {"L": 0.6931471805599453, "epsilon": 0.05, "validation_horizon": 256,
                          "openness": {"epsilon_prime": 0.08, "size": 0.001, "trials": 5}},
        })
        self.assertTrue(manifest["summary"]["certified"])
        self.assertEqual(manifest["summary"]["ell"], 20)
        with open(os.path.join(out, "avalanche.json")) as f:
            document = json.load(f)
        self.assertTrue(document["openness"]["passed"])
        self.assertTrue(document["result"]["parameter_relative"])

    def test_approximate_command(self):
        manifest, out = self.run_command("approximate", {
            "subshift": FREE_PERIODIC, "cocycle": {"kind": "rotation"},
            "approximation": {"interval": [0.0, 1.0], "epsilon": 0.05},
        })
        self.assertLessEqual(manifest["summary"]["max_error"], 0.05)
        history = self.read_csv(out, "approximation.csv")
        self.assertEqual(history["cover_size"].iloc[-1], manifest["summary"]["cover_size"])

    def test_construct_command(self):
        manifest, out = self.run_command("construct", {
            "subshift": FREE_PERIODIC,
            "energies": {"min": -4.0, "max": 4.0, "points": 3},
            "spectrum": {"horizon": 16},
            "approximation": {"trials": 3},
            "construction": {
                "g0": {"layers": []},
                "epsilons": [0.5, 0.4],
                "generators": [
                    {"layers": [{"radius": 0, "table": {"a": 1.0}}]},
                    {"layers": [{"radius": 0, "table": {"a": 1.0}}]},
                ],
            },
        })
        self.assertTrue(manifest["summary"]["completed"])
        schedule = manifest["summary"]["delta_schedule"]
        self.assertEqual(len(schedule), 2)
        self.assertLess(schedule[1], schedule[0] / 2.0)
        self.assertEqual(len(self.read_csv(out, "construction.csv")), 2)

    def test_unknown_command(self):
        with self.assertRaises(ValueError):
            self.run_command("plot", {"subshift": FIBONACCI})


if __name__ == "__main__":
    unittest.main()
