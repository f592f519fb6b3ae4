"""
Tests for subshift generation, factor languages and frequencies.
"""

import itertools
import time
import unittest

from src.dynamics.subshift import (
    EXACT,
    SAMPLED,
    SubshiftSpec,
    boshernitzan_profile,
    complexity,
    convergent_denominators,
    expand_prefix,
    factor_set,
    frequency_table,
    is_primitive,
    substitution_level_lengths,
    word_frequency,
)
from src.utils.configuration import Configuration
from src.utils.exceptions import BudgetExceededError, ConfigurationError, NonPrimitiveSubstitutionError


class TestExpandPrefix(unittest.TestCase):
    """Canonical prefixes of every variant."""

    def test_periodic(self):
        self.assertEqual(expand_prefix(SubshiftSpec.periodic("ab"), 8), "abababab")

    def test_fibonacci_substitution(self):
        self.assertEqual(expand_prefix(SubshiftSpec.fibonacci(), 8), "abaababa")

    def test_golden_sturmian_matches_fibonacci(self):
        fib = expand_prefix(SubshiftSpec.fibonacci(), 5000)
        sturm = expand_prefix(SubshiftSpec.golden_sturmian(), 5000)
        self.assertEqual(fib, sturm)

    def test_toeplitz_period_doubling(self):
        toeplitz = SubshiftSpec.simple_toeplitz("ab", [2, 2])
        self.assertEqual(expand_prefix(toeplitz, 256), expand_prefix(SubshiftSpec.period_doubling(), 256))

    def test_deterministic(self):
        spec = SubshiftSpec.thue_morse()
        self.assertEqual(expand_prefix(spec, 1000), expand_prefix(spec, 1000))
        self.assertEqual(expand_prefix(spec, 8), "abbabaab")

    def test_rejects_overlong_prefix(self):
        with self.assertRaises(BudgetExceededError):
            expand_prefix(SubshiftSpec.fibonacci(), 100, max_length=50)

    def test_rejects_nonpositive_length(self):
        with self.assertRaises(ValueError):
            expand_prefix(SubshiftSpec.fibonacci(), 0)

    def test_configured_max_length(self):
        config = Configuration(environ={})
        config.set_config_value('subshift.max_length', 64)
        with config.activated():
            self.assertEqual(len(expand_prefix(SubshiftSpec.fibonacci(), 64)), 64)
            with self.assertRaises(BudgetExceededError):
                expand_prefix(SubshiftSpec.fibonacci(), 65)
        self.assertEqual(len(expand_prefix(SubshiftSpec.fibonacci(), 65)), 65)


class TestSubshiftSpec(unittest.TestCase):
    """Construction invariants and JSON documents."""

    def test_non_primitive_rejected(self):
        self.assertFalse(is_primitive({"a": "a", "b": "b"}))
        with self.assertRaises(NonPrimitiveSubstitutionError):
            SubshiftSpec.substitution({"a": "a", "b": "b"}, "a")

    def test_fibonacci_is_primitive(self):
        self.assertTrue(is_primitive({"a": "ab", "b": "a"}))

    def test_sturmian_needs_enough_terms(self):
        with self.assertRaises(ValueError):
            SubshiftSpec.sturmian([1, 1, 1])

    def test_configured_min_terms(self):
        config = Configuration(environ={})
        config.set_config_value('subshift.cf_min_terms', 3)
        with config.activated():
            self.assertEqual(SubshiftSpec.sturmian([2, 1, 1]).continued_fraction, (2, 1, 1))
        with self.assertRaises(ValueError):
            SubshiftSpec.sturmian([2, 1, 1])

    def test_from_dict_round_trip(self):
        spec = SubshiftSpec.substitution({"a": "ab", "b": "a"}, "a")
        self.assertEqual(SubshiftSpec.from_dict(spec.to_dict()), spec)

    def test_from_dict_shortcut(self):
        self.assertEqual(SubshiftSpec.from_dict({"variant": "fibonacci"}), SubshiftSpec.fibonacci())

    def test_missing_variant_is_configuration_error(self):
        with self.assertRaises(ConfigurationError):
            SubshiftSpec.from_dict({"word": "ab"})

    def test_unknown_variant_is_configuration_error(self):
        with self.assertRaises(ConfigurationError):
            SubshiftSpec.from_dict({"variant": "sofic"})

    def test_non_primitive_document_is_configuration_error(self):
        with self.assertRaises(ConfigurationError):
            SubshiftSpec.from_dict({"variant": "substitution", "rules": {"a": "a", "b": "b"}, "seed": "a"})

    def test_level_lengths_are_fibonacci_numbers(self):
        self.assertEqual(substitution_level_lengths(SubshiftSpec.fibonacci(), 6), [2, 3, 5, 8, 13, 21])

    def test_convergent_denominators(self):
        self.assertEqual(convergent_denominators([1] * 8), [1, 2, 3, 5, 8, 13, 21, 34])


class TestFactorSet(unittest.TestCase):
    """Factor enumeration."""

    def test_fibonacci_three(self):
        language = factor_set(SubshiftSpec.fibonacci(), 3)
        self.assertEqual(language.words, ("aab", "aba", "baa", "bab"))
        self.assertEqual(language.exactness, EXACT)

    def test_periodic_three(self):
        self.assertEqual(factor_set(SubshiftSpec.periodic("ab"), 3).words, ("aba", "bab"))

    def test_periodic_and_toeplitz_exactness(self):
        self.assertEqual(factor_set(SubshiftSpec.periodic("aab"), 7).exactness, EXACT)
        self.assertEqual(factor_set(SubshiftSpec.simple_toeplitz("ab", [2, 2]), 4).exactness, SAMPLED)

    def test_thue_morse_three(self):
        self.assertEqual(len(factor_set(SubshiftSpec.thue_morse(), 3)), 6)

    def test_sturmian_complexity(self):
        spec = SubshiftSpec.golden_sturmian()
        for n, p in complexity(spec, 12):
            self.assertEqual(p, n + 1)

    def test_periodic_complexity_saturates(self):
        spec = SubshiftSpec.periodic("aab")
        counts = dict(complexity(spec, 8))
        for n in range(3, 9):
            self.assertEqual(counts[n], 3)

    def test_extendable(self):
        for spec in (SubshiftSpec.fibonacci(), SubshiftSpec.thue_morse(), SubshiftSpec.period_doubling()):
            for n in range(1, 8):
                longer = factor_set(spec, n + 1).words
                self.assertEqual({w[:n] for w in longer}, set(factor_set(spec, n).words))

    def test_thue_morse_matches_brute_force(self):
        prefix = expand_prefix(SubshiftSpec.thue_morse(), 1 << 14)
        for n in range(1, 7):
            brute = {prefix[i:i + n] for i in range(len(prefix) - n + 1)}
            self.assertEqual(set(factor_set(SubshiftSpec.thue_morse(), n).words), brute)

    def test_union_collects_components(self):
        union = SubshiftSpec.unchecked_union(SubshiftSpec.periodic("a"), SubshiftSpec.periodic("b"))
        self.assertEqual(factor_set(union, 2).words, ("aa", "bb"))

    def test_words_over_alphabet(self):
        alphabet = "ab"
        for word in factor_set(SubshiftSpec.period_doubling(), 6).words:
            self.assertTrue(set(word) <= set(alphabet))
        all_words = {"".join(p) for p in itertools.product(alphabet, repeat=6)}
        self.assertTrue(set(factor_set(SubshiftSpec.period_doubling(), 6).words) <= all_words)

    def test_rejects_zero_length(self):
        with self.assertRaises(ValueError):
            factor_set(SubshiftSpec.fibonacci(), 0)


class TestFrequencies(unittest.TestCase):
    """Empirical cylinder frequencies and the Boshernitzan profile."""

    def test_fibonacci_letter_frequencies(self):
        spec = SubshiftSpec.fibonacci()
        self.assertAlmostEqual(word_frequency(spec, "a", 100000), 0.6180, delta=1e-3)
        self.assertAlmostEqual(word_frequency(spec, "b", 100000), 0.3820, delta=1e-3)

    def test_periodic_frequency(self):
        self.assertAlmostEqual(word_frequency(SubshiftSpec.periodic("ab"), "ab", 10000), 0.5, delta=1e-3)

    def test_absent_word(self):
        self.assertEqual(word_frequency(SubshiftSpec.fibonacci(), "bb", 1000), 0.0)

    def test_short_sample_rejected(self):
        with self.assertRaises(ValueError):
            word_frequency(SubshiftSpec.fibonacci(), "abaab", 20)

    def test_table_sums_to_one(self):
        for spec in (SubshiftSpec.fibonacci(), SubshiftSpec.thue_morse()):
            for n in (1, 4, 9):
                table = frequency_table(spec, n, 20000)
                self.assertAlmostEqual(table.total, 1.0, delta=1e-12)
                self.assertEqual(set(table.entries), set(factor_set(spec, n).words))
                self.assertTrue(all(v >= 0.0 for v in table.entries.values()))

    def test_periodic_profile_linear(self):
        profile = boshernitzan_profile(SubshiftSpec.periodic("ab"), 10, 1000)
        for n, eta in profile.entries:
            if n >= 2:
                self.assertAlmostEqual(eta, n / 2, places=12)

    def test_fibonacci_profile_positive(self):
        profile = boshernitzan_profile(SubshiftSpec.fibonacci(), 60, 200000)
        self.assertGreater(profile.limsup_proxy, 0.1)
        self.assertTrue(profile.satisfies_condition)

    def test_thue_morse_profile_positive(self):
        profile = boshernitzan_profile(SubshiftSpec.thue_morse(), 40, 100000)
        self.assertTrue(all(eta > 0 for _, eta in profile.entries))

    def test_fibonacci_profile_window_100_200(self):
        start = time.time()
        profile = boshernitzan_profile(SubshiftSpec.fibonacci(), 200, 1_000_000, n_min=100)
        elapsed = time.time() - start
        self.assertEqual([n for n, _ in profile.entries], list(range(100, 201)))
        self.assertTrue(all(eta > 0 for _, eta in profile.entries))
        self.assertAlmostEqual(max(eta for _, eta in profile.entries), 0.7186, delta=0.01)
        self.assertTrue(profile.satisfies_condition)
        self.assertLess(elapsed, 60.0)

    def test_profile_rejects_bad_range(self):
        with self.assertRaises(ValueError):
            boshernitzan_profile(SubshiftSpec.fibonacci(), 10, 1000, n_min=11)


if __name__ == "__main__":
    unittest.main()
