"""
Tests for band sets, approximants, the spectrum scan and the semicontinuity probe.
"""

import math
import time
import unittest

import numpy as np

from src.analysis.spectrum import (
    RESOLVENT,
    ZERO_EXPONENT,
    EnergyGrid,
    approximant_periods,
    approximant_potential,
    approximant_sequence,
    candidate_intervals,
    covering_bound,
    fibonacci_trace_map,
    merge_intervals,
    periodic_discriminant,
    periodic_spectrum,
    scan_spectrum,
    semicontinuity_probe,
    spectrum_measure,
)
from src.cocycles.cocycle import LayeredSamplingFunction
from src.dynamics.subshift import SubshiftSpec, expand_prefix

SQRT17 = math.sqrt(17.0)


class TestIntervalArithmetic(unittest.TestCase):
    """Measures and covering bounds."""

    def test_measure(self):
        self.assertEqual(spectrum_measure([(-2.0, 2.0)]), 4.0)
        self.assertEqual(spectrum_measure([]), 0.0)

    def test_covering_bound(self):
        self.assertAlmostEqual(covering_bound([(0.0, 1.0), (2.0, 2.5)], 0.1, 2), 1.9)

    def test_covering_dominates_measure(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            edges = np.sort(rng.uniform(-5, 5, size=8))
            intervals = list(zip(edges[0::2], edges[1::2]))
            eps = float(rng.uniform(0, 1))
            self.assertGreaterEqual(covering_bound(intervals, eps, len(intervals)), spectrum_measure(intervals))

    def test_rejects_unsorted(self):
        with self.assertRaises(ValueError):
            spectrum_measure([(1.0, 2.0), (0.0, 0.5)])
        with self.assertRaises(ValueError):
            spectrum_measure([(2.0, 1.0)])
        with self.assertRaises(ValueError):
            covering_bound([(0.0, 1.0)], -0.1, 1)

    def test_merge(self):
        self.assertEqual(merge_intervals([(2.0, 3.0), (0.0, 1.0), (0.5, 2.0)]), [(0.0, 3.0)])
        self.assertEqual(merge_intervals([(0.0, 1.0), (1.5, 2.0)]), [(0.0, 1.0), (1.5, 2.0)])

    def test_candidate_padding(self):
        energies = np.arange(11, dtype=float)
        mask = np.zeros(11, dtype=bool)
        mask[[3, 4, 5, 9, 10]] = True
        self.assertEqual(candidate_intervals(energies, mask), [(2.0, 6.0), (8.0, 10.0)])
        self.assertEqual(candidate_intervals(energies, np.zeros(11, dtype=bool)), [])


class TestPeriodicSpectrum(unittest.TestCase):
    """Bands of periodic operators."""

    def test_free_band(self):
        bands = periodic_spectrum([0.0])
        self.assertEqual(len(bands.bands), 1)
        lo, hi = bands.bands[0]
        self.assertAlmostEqual(lo, -2.0, delta=1e-10)
        self.assertAlmostEqual(hi, 2.0, delta=1e-10)

    def test_shifted_band(self):
        (band,) = periodic_spectrum([5.0]).bands
        self.assertAlmostEqual(band[0], 3.0, delta=1e-10)
        self.assertAlmostEqual(band[1], 7.0, delta=1e-10)

    def test_period_two(self):
        bands = periodic_spectrum([1.0, 0.0])
        expected = [((1 - SQRT17) / 2, 0.0), (1.0, (1 + SQRT17) / 2)]
        self.assertEqual(len(bands.bands), 2)
        for (lo, hi), (elo, ehi) in zip(bands.bands, expected):
            self.assertAlmostEqual(lo, elo, delta=1e-10)
            self.assertAlmostEqual(hi, ehi, delta=1e-10)
        self.assertAlmostEqual(bands.measure, 3.1231, delta=1e-4)
        self.assertAlmostEqual(bands.measure, SQRT17 - 1.0, delta=1e-9)

    def test_bands_match_discriminant(self):
        rng = np.random.default_rng(17)
        for p in (3, 5, 8):
            v = rng.uniform(-1.5, 1.5, size=p)
            bands = periodic_spectrum(v)
            self.assertLessEqual(len(bands.bands), p)
            energies = np.linspace(v.min() - 2.5, v.max() + 2.5, 4001)
            d = periodic_discriminant(v, energies)
            for energy, value in zip(energies, d):
                if abs(value) < 2.0 - 1e-6:
                    self.assertTrue(bands.contains(energy, tol=1e-9))
                elif abs(value) > 2.0 + 1e-6:
                    self.assertFalse(bands.contains(energy))

    def test_grid_resolution_does_not_move_edges(self):
        v = np.random.default_rng(23).uniform(-1.5, 1.5, size=5)
        fine = periodic_spectrum(v, resolution=64)
        coarse = periodic_spectrum(v, resolution=1)
        self.assertEqual(len(fine.bands), len(coarse.bands))
        np.testing.assert_allclose(np.ravel(fine.bands), np.ravel(coarse.bands), atol=1e-9)
        edges = np.ravel(fine.bands)
        np.testing.assert_allclose(np.abs(periodic_discriminant(v, edges)), 2.0, atol=1e-6)

    def test_edges_thinner_than_grid_step_are_kept(self):
        fib = SubshiftSpec.fibonacci()
        v = approximant_potential(LayeredSamplingFunction.indicator("b"), fib, 233)
        with self.assertLogs("spectrum", level="DEBUG") as logs:
            coarse = periodic_spectrum(v, resolution=1)
        self.assertTrue(any("not bracketed" in line for line in logs.output))
        fine = periodic_spectrum(v)
        self.assertEqual(len(coarse.bands), len(fine.bands))
        self.assertAlmostEqual(coarse.measure, fine.measure, delta=1e-8)

    def test_bands_shrink_with_coupling(self):
        measures = [periodic_spectrum([lam, 0.0]).measure for lam in (0.5, 1.0, 2.0, 4.0)]
        self.assertTrue(all(b < a for a, b in zip(measures, measures[1:])))

    def test_rejects_empty_potential(self):
        with self.assertRaises(ValueError):
            periodic_spectrum([])
        with self.assertRaises(ValueError):
            periodic_spectrum([np.inf])

    def test_trace_map_matches_transfer_product(self):
        fib = SubshiftSpec.fibonacci()
        f = LayeredSamplingFunction.indicator("b")
        energies = np.linspace(-2.5, 3.5, 37)
        lengths = [1, 2, 3, 5, 8, 13, 21]
        for level, length in enumerate(lengths):
            potential = f.values_along(fib, expand_prefix(fib, length))
            reference = periodic_discriminant(potential, energies)
            atol = 1e-10 * float(np.max(np.abs(reference))) + 1e-9
            np.testing.assert_allclose(fibonacci_trace_map(energies, 1.0, level), reference,
                                       rtol=1e-9, atol=atol)


class TestApproximants(unittest.TestCase):
    """Periodic approximant band sets."""

    def setUp(self):
        self.fib = SubshiftSpec.fibonacci()

    def test_periods(self):
        self.assertEqual(approximant_periods(self.fib, [5, 7, 9, 11]), [13, 34, 89, 233])
        self.assertEqual(approximant_periods(SubshiftSpec.golden_sturmian(), [1, 2, 3, 4]), [1, 2, 3, 5])
        self.assertEqual(approximant_periods(SubshiftSpec.periodic("aab"), [1, 4]), [3, 3])
        self.assertEqual(approximant_periods(SubshiftSpec.simple_toeplitz("ab", [2, 2]), [1, 3]), [2, 8])

    def test_approximant_potential(self):
        f = LayeredSamplingFunction.indicator("b")
        np.testing.assert_array_equal(approximant_potential(f, self.fib, 5), [0.0, 1.0, 0.0, 0.0, 1.0])

    def test_free_levels(self):
        for level in approximant_sequence(LayeredSamplingFunction.zero(), self.fib, 4):
            self.assertEqual(len(level.bands.bands), 1)
            self.assertAlmostEqual(level.measure, 4.0, delta=1e-9)

    def test_fibonacci_measure_decreases(self):
        levels = approximant_sequence(LayeredSamplingFunction.indicator("b"), self.fib, [5, 11])
        self.assertEqual([level.period for level in levels], [13, 233])
        self.assertLess(levels[1].measure, levels[0].measure)
        for level in levels:
            self.assertLessEqual(len(level.bands.bands), level.period)

    def test_fibonacci_measures_shrink_geometrically(self):
        levels = approximant_sequence(LayeredSamplingFunction.indicator("b"), self.fib, [5, 7, 9, 11])
        self.assertEqual([level.period for level in levels], [13, 34, 89, 233])
        measures = [level.measure for level in levels]
        for measure, expected in zip(measures, [1.853, 1.408, 1.068, 0.811]):
            self.assertAlmostEqual(measure, expected, delta=0.01)
        self.assertTrue(all(b < a for a, b in zip(measures, measures[1:])))
        self.assertLess(measures[-1], 0.5 * measures[0])

    def test_periodic_base_stabilizes(self):
        levels = approximant_sequence(LayeredSamplingFunction.indicator("b"), SubshiftSpec.periodic("ab"), 3)
        self.assertEqual(levels[1].bands.bands, levels[2].bands.bands)
        self.assertAlmostEqual(levels[1].measure, SQRT17 - 1.0, delta=1e-9)

    def test_rows(self):
        (level,) = approximant_sequence(LayeredSamplingFunction.zero(), self.fib, [2])
        rows = level.bands.to_rows(level.level)
        self.assertEqual(set(rows[0]), {"k", "band_lo", "band_hi"})
        self.assertEqual(rows[0]["k"], 2)

    def test_tail_rejected(self):
        with self.assertRaises(ValueError):
            approximant_sequence(LayeredSamplingFunction.geometric(self.fib, 2), self.fib, 2)


class TestEnergyGrid(unittest.TestCase):
    """Grid construction."""

    def test_from_step(self):
        grid = EnergyGrid.from_step(-3.0, 3.0, 0.01)
        self.assertEqual(len(grid), 601)
        self.assertEqual(grid.interval, (-3.0, 3.0))

    def test_from_count(self):
        self.assertEqual(len(EnergyGrid.from_count(0.0, 1.0, 11)), 11)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            EnergyGrid([1.0, 0.0])
        with self.assertRaises(ValueError):
            EnergyGrid([1.0])
        with self.assertRaises(ValueError):
            EnergyGrid.from_step(1.0, 0.0, 0.1)


class TestScanSpectrum(unittest.TestCase):
    """Resolvent certificates versus spectrum candidates."""

    def test_free_spectrum(self):
        start = time.time()
        estimate = scan_spectrum(LayeredSamplingFunction.zero(), SubshiftSpec.periodic("a"),
                                 EnergyGrid.from_step(-3.0, 3.0, 0.01), horizon=256)
        self.assertLess(time.time() - start, 30.0)
        self.assertEqual(len(estimate.intervals), 1)
        lo, hi = estimate.intervals[0]
        self.assertLessEqual(abs(lo + 2.0), 0.05)
        self.assertLessEqual(abs(hi - 2.0), 0.05)
        self.assertGreaterEqual(estimate.measure, 3.9)
        self.assertLessEqual(estimate.measure, 4.3)
        self.assertEqual(len(estimate.to_rows()), 601)

    def test_constant_potential_shift(self):
        estimate = scan_spectrum(LayeredSamplingFunction.constant(5.0), SubshiftSpec.periodic("a"),
                                 EnergyGrid.from_step(0.0, 10.0, 0.05), horizon=64)
        (interval,) = estimate.intervals
        self.assertAlmostEqual(interval[0], 3.0, delta=0.1)
        self.assertAlmostEqual(interval[1], 7.0, delta=0.1)

    def test_sandwich(self):
        estimate = scan_spectrum(LayeredSamplingFunction.indicator("b"), SubshiftSpec.fibonacci(),
                                 EnergyGrid.from_step(-2.5, 3.5, 0.1), horizon=32, epsilon=0.05)
        for energy, cls, exponent, cid in zip(estimate.energies, estimate.classes, estimate.exponents,
                                              estimate.certificate_ids):
            if cls == ZERO_EXPONENT:
                self.assertTrue(any(lo <= energy <= hi for lo, hi in estimate.intervals))
            if cls == RESOLVENT:
                self.assertTrue(cid)
                self.assertGreater(exponent, 0.05)
        self.assertIn(RESOLVENT, estimate.classes)
        self.assertEqual(estimate.to_dict()["metadata"]["horizon"], 32)

    def test_budget_degrades_energy(self):
        with self.assertLogs("BatchProcessor", level="WARNING") as logs:
            estimate = scan_spectrum(LayeredSamplingFunction.indicator("b"), SubshiftSpec.fibonacci(),
                                     [0.0, 4.0], horizon=64, budget=1)
        self.assertEqual(len(logs.records), 2)
        self.assertEqual(estimate.classes, ["nuh", "nuh"])
        self.assertEqual(estimate.flags, [["budget"], ["budget"]])

    def test_tail_rejected(self):
        fib = SubshiftSpec.fibonacci()
        with self.assertRaises(ValueError):
            scan_spectrum(LayeredSamplingFunction.geometric(fib, 2), fib, [0.0, 1.0])


class TestSemicontinuity(unittest.TestCase):
    """Band sets of nearby sampling functions."""

    def setUp(self):
        self.fib = SubshiftSpec.fibonacci()

    def test_identical(self):
        f = LayeredSamplingFunction.indicator("b")
        report = semicontinuity_probe(f, f, self.fib, 5)
        self.assertTrue(report.holds)
        self.assertEqual(report.violation, 0.0)
        self.assertEqual(report.epsilon, 0.0)

    def test_constant_shift(self):
        report = semicontinuity_probe(LayeredSamplingFunction.zero(), LayeredSamplingFunction.constant(0.3),
                                      self.fib, 3)
        self.assertTrue(report.holds)
        self.assertAlmostEqual(report.epsilon, 0.3)

    def test_coupling_perturbation(self):
        f = LayeredSamplingFunction.indicator("b")
        g = LayeredSamplingFunction.indicator("b", 0.9)
        report = semicontinuity_probe(f, g, self.fib, 8)
        self.assertEqual(report.period, 55)
        self.assertAlmostEqual(report.epsilon, 0.1)
        self.assertTrue(report.holds)
        self.assertIn("bands_g", report.to_dict())


if __name__ == "__main__":
    unittest.main()
