"""
Subshift Module

This module generates minimal subshifts from finite descriptions (periodic
words, primitive substitutions, Sturmian rotations, simple Toeplitz codings),
enumerates their factor languages and estimates cylinder frequencies and the
Boshernitzan profile from a single orbit.

Words are plain strings over single-character symbols. Frequencies are
empirical: the invariant measure of a cylinder [w] is represented only by the
occurrence frequency of w along one canonical orbit.
"""

import math
import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.utils.configuration import default_value
from src.utils.exceptions import BudgetExceededError, ConfigurationError, NonPrimitiveSubstitutionError

logger = logging.getLogger("subshift")

VARIANTS = ("periodic", "substitution", "sturmian", "toeplitz", "union")

# Multiplier for the rolling window hash (odd, so multiplication is invertible mod 2**64)
_HASH_BASE = np.uint64(0x9E3779B97F4A7C15)

EXACT = "exact"
SAMPLED = "sampled"


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite list of distinct single-character symbols."""

    symbols: Tuple[str, ...]

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("Alphabet must be nonempty")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError(f"Alphabet has duplicate symbols: {self.symbols}")
        for symbol in self.symbols:
            if not isinstance(symbol, str) or len(symbol) != 1:
                raise ValueError(f"Symbols must be single characters, got {symbol!r}")

    def __len__(self):
        return len(self.symbols)

    def index(self, symbol):
        return self.symbols.index(symbol)

    def contains_word(self, word):
        return set(word) <= set(self.symbols)


@dataclass(frozen=True)
class SubshiftSpec:
    """
    Finite description of a minimal subshift.

    Use the classmethod constructors rather than the raw initializer; they
    validate the variant-specific invariants.
    """

    variant: str
    word: str = ""
    rules: Tuple[Tuple[str, str], ...] = ()
    seed: str = ""
    continued_fraction: Tuple[int, ...] = ()
    coding: str = ""
    periods: Tuple[int, ...] = ()
    components: Tuple["SubshiftSpec", ...] = ()
    name: str = field(default="", compare=False)

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------
    @classmethod
    def periodic(cls, word, name=""):
        if not word:
            raise ValueError("Periodic subshift needs a nonempty word")
        Alphabet(tuple(sorted(set(word))))
        return cls(variant="periodic", word=word, name=name or f"periodic({word})")

    @classmethod
    def substitution(cls, rules, seed, name=""):
        """
        Build a substitution subshift; the rule must be primitive.

        Args:
            rules (dict): symbol -> image word
            seed (str): seed symbol whose iterates give the canonical element
        """
        rules = dict(rules)
        if seed not in rules:
            raise ValueError(f"Seed symbol '{seed}' has no substitution rule")
        alphabet = tuple(sorted(rules))
        Alphabet(alphabet)
        for symbol, image in rules.items():
            if not image:
                raise ValueError(f"Substitution image of '{symbol}' is empty")
            unknown = set(image) - set(alphabet)
            if unknown:
                raise ValueError(f"Substitution image of '{symbol}' uses unknown symbols {sorted(unknown)}")
        if not is_primitive(rules):
            raise NonPrimitiveSubstitutionError(f"Substitution {rules} is not primitive")
        return cls(variant="substitution", rules=tuple(sorted(rules.items())), seed=seed,
                   name=name or "substitution")

    @classmethod
    def sturmian(cls, continued_fraction, min_terms=None, name=""):
        """
        Sturmian subshift with rotation number alpha = [0; a1, a2, ...].

        Args:
            continued_fraction (sequence of int): partial quotients a1, a2, ... (all >= 1)
            min_terms (int, optional): required expansion length. Defaults to config 'subshift.cf_min_terms'.
        """
        cf = tuple(int(a) for a in continued_fraction)
        if min_terms is None:
            min_terms = default_value('subshift.cf_min_terms')
        if len(cf) < min_terms:
            raise ValueError(f"Sturmian expansion needs at least {min_terms} partial quotients, got {len(cf)}")
        if any(a < 1 for a in cf):
            raise ValueError(f"Partial quotients must be positive integers: {cf}")
        if cf[0] == 1 and len(cf) == 1:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        return cls(variant="sturmian", continued_fraction=cf, name=name or "sturmian")

    @classmethod
    def simple_toeplitz(cls, coding, periods, name=""):
        """
        Simple Toeplitz subshift from a coding sequence and a period list (both cycled).
        """
        periods = tuple(int(p) for p in periods)
        if not coding or len(coding) != len(periods):
            raise ValueError("Toeplitz coding and period list must be nonempty and of equal length")
        if any(p < 2 for p in periods):
            raise ValueError(f"Toeplitz periods must be >= 2: {periods}")
        Alphabet(tuple(sorted(set(coding))))
        return cls(variant="toeplitz", coding=coding, periods=periods, name=name or "toeplitz")

    @classmethod
    def unchecked_union(cls, *components, name=""):
        """
        Disjoint union of periodic orbits. NOT minimal; test fixture for
        non-uniquely-ergodic bases only.
        """
        if not components or any(c.variant != "periodic" for c in components):
            raise ValueError("unchecked_union takes periodic components only")
        return cls(variant="union", components=tuple(components), name=name or "union")

    @classmethod
    def fibonacci(cls):
        return cls.substitution({"a": "ab", "b": "a"}, "a", name="fibonacci")

    @classmethod
    def thue_morse(cls):
        return cls.substitution({"a": "ab", "b": "ba"}, "a", name="thue_morse")

    @classmethod
    def period_doubling(cls):
        return cls.substitution({"a": "ab", "b": "aa"}, "a", name="period_doubling")

    @classmethod
    def golden_sturmian(cls, terms=40):
        return cls.sturmian([1] * terms, name="golden_sturmian")

    # ------------------------------------------------------------------
    # Properties and serialization
    # ------------------------------------------------------------------
    @property
    def rule_map(self) -> Dict[str, str]:
        return dict(self.rules)

    @property
    def alphabet(self) -> Alphabet:
        if self.variant == "periodic":
            return Alphabet(tuple(sorted(set(self.word))))
        if self.variant == "substitution":
            return Alphabet(tuple(sym for sym, _ in self.rules))
        if self.variant == "sturmian":
            return Alphabet(("a", "b"))
        if self.variant == "toeplitz":
            return Alphabet(tuple(sorted(set(self.coding))))
        symbols = sorted({s for c in self.components for s in c.word})
        return Alphabet(tuple(symbols))

    def to_dict(self):
        if self.variant == "periodic":
            return {"variant": "periodic", "word": self.word}
        if self.variant == "substitution":
            return {"variant": "substitution", "rules": self.rule_map, "seed": self.seed}
        if self.variant == "sturmian":
            return {"variant": "sturmian", "continued_fraction": list(self.continued_fraction)}
        if self.variant == "toeplitz":
            return {"variant": "toeplitz", "coding": self.coding, "periods": list(self.periods)}
        return {"variant": "union", "components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, document):
        """
        Parse a JSON document with a ``variant`` tag.

        Raises:
            ConfigurationError: On a missing/unknown tag or invalid fields
        """
        if not isinstance(document, dict) or "variant" not in document:
            raise ConfigurationError("Subshift document needs a 'variant' tag")
        variant = document["variant"]
        shortcuts = {
            "fibonacci": cls.fibonacci,
            "thue_morse": cls.thue_morse,
            "period_doubling": cls.period_doubling,
            "golden_sturmian": cls.golden_sturmian,
        }
        try:
            if variant in shortcuts:
                return shortcuts[variant]()
            if variant == "periodic":
                return cls.periodic(document["word"])
            if variant == "substitution":
                return cls.substitution(document["rules"], document["seed"])
            if variant == "sturmian":
                return cls.sturmian(document["continued_fraction"], document.get("min_terms"))
            if variant == "toeplitz":
                return cls.simple_toeplitz(document["coding"], document["periods"])
            if variant == "union":
                return cls.unchecked_union(*[cls.from_dict(c) for c in document["components"]])
        except KeyError as e:
            raise ConfigurationError(f"Subshift variant '{variant}' is missing field {e}") from e
        except NonPrimitiveSubstitutionError as e:
            raise ConfigurationError(str(e)) from e
        except ValueError as e:
            raise ConfigurationError(f"Invalid '{variant}' subshift: {e}") from e
        raise ConfigurationError(f"Unknown subshift variant '{variant}'")


@dataclass(frozen=True)
class FactorLanguage:
    """All length-n factors of a subshift, with an exactness flag."""

    n: int
    words: Tuple[str, ...]
    exactness: str

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self._lookup

    @property
    def exact(self):
        return self.exactness == EXACT

    @cached_property
    def _lookup(self):
        return frozenset(self.words)


@dataclass
class FrequencyTable:
    """Empirical cylinder frequencies of all length-n factors."""

    n: int
    entries: Dict[str, float]
    sample_length: int

    @property
    def total(self):
        return float(sum(self.entries.values()))

    def minimum(self):
        return min(self.entries.values()) if self.entries else 0.0


@dataclass
class BoshernitzanProfile:
    """eta(n) = n * min frequency of length-n factors, for n = n_min..n_max."""

    entries: List[Tuple[int, float]]
    sample_length: int
    exactness: str

    @property
    def limsup_proxy(self):
        """Max of eta over the computed n >= n_max / 2."""
        n_max = self.entries[-1][0]
        return max(eta for n, eta in self.entries if n >= math.ceil(n_max / 2))

    @property
    def satisfies_condition(self):
        return self.limsup_proxy > 0.0


# ----------------------------------------------------------------------
# Substitution helpers
# ----------------------------------------------------------------------
def substitution_matrix(rules):
    """Incidence matrix M[i, j] = number of occurrences of symbol j in the image of symbol i."""
    alphabet = sorted(rules)
    index = {s: i for i, s in enumerate(alphabet)}
    matrix = np.zeros((len(alphabet), len(alphabet)), dtype=np.int64)
    for symbol, image in rules.items():
        for target in image:
            matrix[index[symbol], index[target]] += 1
    return matrix


def is_primitive(rules):
    """
    Check primitivity: some power of the incidence matrix is strictly positive.

    By Wielandt's bound it suffices to test powers up to (k - 1)**2 + 1.
    """
    positive = substitution_matrix(rules) > 0
    k = positive.shape[0]
    power = positive.copy()
    for _ in range((k - 1) ** 2 + 1):
        if power.all():
            return True
        power = (power.astype(np.int64) @ positive.astype(np.int64)) > 0
    return bool(power.all())


def substitution_level_lengths(spec, levels):
    """Lengths |sigma^k(seed)| for k = 1..levels."""
    rules = spec.rule_map
    lengths = []
    counts = {s: 0 for s in rules}
    counts[spec.seed] = 1
    for _ in range(levels):
        new_counts = {s: 0 for s in rules}
        for symbol, count in counts.items():
            for target in rules[symbol]:
                new_counts[target] += count
        counts = new_counts
        lengths.append(sum(counts.values()))
    return lengths


# ----------------------------------------------------------------------
# Continued fractions
# ----------------------------------------------------------------------
def convergents(continued_fraction):
    """
    Convergents p_k/q_k of alpha = [0; a1, a2, ...].

    Returns:
        list of (p, q) integer pairs, k = 1..len(continued_fraction)
    """
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    result = []
    for a in continued_fraction:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        result.append((p, q))
    return result


def convergent_denominators(continued_fraction):
    """Distinct convergent denominators in increasing order."""
    denominators = []
    for _, q in convergents(continued_fraction):
        if not denominators or q > denominators[-1]:
            denominators.append(q)
    return denominators


# ----------------------------------------------------------------------
# Prefix generation
# ----------------------------------------------------------------------
def expand_prefix(spec: SubshiftSpec, length: int, max_length: Optional[int] = None) -> str:
    """
    First `length` symbols of the canonical element of the subshift.

    Args:
        spec (SubshiftSpec): Subshift description
        length (int): Number of symbols (>= 1)
        max_length (int, optional): Refuse longer requests. Defaults to config 'subshift.max_length'.

    Returns:
        str: Prefix word
    """
    if length < 1:
        raise ValueError(f"Prefix length must be >= 1, got {length}")
    if max_length is None:
        max_length = default_value('subshift.max_length')
    if length > max_length:
        raise BudgetExceededError(f"Prefix length {length} exceeds the configured maximum {max_length}")
    return _expand_prefix(spec, int(length))


@lru_cache(maxsize=16)
def _expand_prefix(spec, length):
    if spec.variant == "periodic":
        repeats = -(-length // len(spec.word))
        return (spec.word * repeats)[:length]
    if spec.variant == "union":
        return _expand_prefix(spec.components[0], length)
    if spec.variant == "substitution":
        return _substitution_prefix(spec, length)
    if spec.variant == "sturmian":
        return _sturmian_prefix(spec, length)
    if spec.variant == "toeplitz":
        return _toeplitz_prefix(spec, length)
    raise ValueError(f"Unknown subshift variant '{spec.variant}'")


def _substitution_prefix(spec, length):
    rules = spec.rule_map
    word = spec.seed
    while len(word) < length:
        grown = "".join(rules[symbol] for symbol in word)
        if len(grown) <= len(word):
            raise ValueError("Substitution does not grow; it generates a finite orbit only")
        word = grown
    return word[:length]


def _sturmian_prefix(spec, length):
    # Symbol k (k = 1..length) is 'a' iff floor((k+1)alpha) - floor(k alpha) == 1,
    # evaluated exactly at the last convergent p/q.
    p, q = convergents(spec.continued_fraction)[-1]
    if length + 1 > q:
        raise ValueError(
            f"Sturmian prefix of length {length} needs a convergent denominator above {length + 1}; "
            f"the expansion only reaches q = {q}"
        )
    if p * (length + 2) < 2 ** 62:
        k = np.arange(1, length + 2, dtype=np.int64)
        floors = (k * p) // q
        steps = np.diff(floors)
    else:
        floors = [(k * p) // q for k in range(1, length + 2)]
        steps = np.diff(np.array(floors, dtype=object)).astype(np.int64)
    return np.where(steps == 1, ord("a"), ord("b")).astype(np.uint8).tobytes().decode("latin-1")


def _toeplitz_prefix(spec, length):
    symbols = np.zeros(length, dtype=np.uint8)
    holes = np.arange(length)
    step = 0
    while holes.size:
        index = step % len(spec.periods)
        period = spec.periods[index]
        symbols[holes[::period]] = ord(spec.coding[index])
        holes = np.delete(holes, np.s_[::period])
        step += 1
    return symbols.tobytes().decode("latin-1")


# ----------------------------------------------------------------------
# Factor languages
# ----------------------------------------------------------------------
def factor_set(spec: SubshiftSpec, n: int, stabilization_window: Optional[int] = None,
               scan_budget: Optional[int] = None) -> FactorLanguage:
    """
    All length-n factors of the subshift.

    The prefix scanned starts at 16 n symbols and doubles until the factor set
    is unchanged across `stabilization_window` consecutive doublings.

    Args:
        spec (SubshiftSpec): Subshift description
        n (int): Factor length (>= 1)
        stabilization_window (int, optional): Unchanged doublings required. Defaults to config.
        scan_budget (int, optional): Longest prefix scanned. Defaults to config.

    Returns:
        FactorLanguage: Words sorted lexicographically; `sampled` when stabilization failed
    """
    if n < 1:
        raise ValueError(f"Factor length must be >= 1, got {n}")
    if stabilization_window is None:
        stabilization_window = default_value('subshift.stabilization_window')
    if scan_budget is None:
        scan_budget = default_value('subshift.scan_budget')
    return _factor_set(spec, int(n), int(stabilization_window), int(scan_budget))


@lru_cache(maxsize=256)
def _factor_set(spec, n, stabilization_window, scan_budget):
    if spec.variant == "periodic":
        cycle = spec.word * (n // len(spec.word) + 2)
        words = {cycle[i:i + n] for i in range(len(spec.word))}
        return FactorLanguage(n, tuple(sorted(words)), EXACT)
    if spec.variant == "union":
        languages = [_factor_set(c, n, stabilization_window, scan_budget) for c in spec.components]
        words = set().union(*(language.words for language in languages))
        exactness = EXACT if all(language.exact for language in languages) else SAMPLED
        return FactorLanguage(n, tuple(sorted(words)), exactness)

    length = max(64, 16 * n)
    previous = None
    unchanged = 0
    while True:
        if length > scan_budget:
            logger.warning(f"Factor set of length {n} did not stabilize within {scan_budget} symbols")
            words = previous if previous is not None else set()
            return FactorLanguage(n, tuple(sorted(words)), SAMPLED)
        prefix = expand_prefix(spec, length)
        words = {prefix[i:i + n] for i in range(length - n + 1)}
        if words == previous:
            unchanged += 1
            if unchanged >= stabilization_window:
                break
        else:
            unchanged = 0
        previous = words
        length *= 2

    exactness = EXACT if spec.variant in ("substitution", "sturmian") else SAMPLED
    return FactorLanguage(n, tuple(sorted(words)), exactness)


def complexity(spec, n_max):
    """Factor complexity p(n) = |factor_set(spec, n)| for n = 1..n_max."""
    return [(n, len(factor_set(spec, n))) for n in range(1, n_max + 1)]


# ----------------------------------------------------------------------
# Frequencies
# ----------------------------------------------------------------------
def encode(word, alphabet):
    """Integer codes of a word's symbols (positions in the alphabet)."""
    lookup = np.full(256, -1, dtype=np.int64)
    for i, symbol in enumerate(alphabet.symbols):
        lookup[ord(symbol)] = i
    codes = lookup[np.frombuffer(word.encode("latin-1"), dtype=np.uint8)]
    if codes.size and codes.min() < 0:
        raise ValueError(f"Word contains symbols outside the alphabet {alphabet.symbols}")
    return codes


def word_frequency(spec: SubshiftSpec, w: str, sample_length: int) -> float:
    """
    Sliding-window frequency of w in the canonical prefix of length sample_length.

    Returns:
        float: occurrences / (sample_length - |w| + 1)
    """
    if not w:
        raise ValueError("Word must be nonempty")
    if sample_length < 10 * len(w):
        raise ValueError(f"sample_length must be >= 10 |w| = {10 * len(w)}, got {sample_length}")
    alphabet = spec.alphabet
    if not alphabet.contains_word(w):
        return 0.0
    prefix = encode(expand_prefix(spec, sample_length), alphabet)
    target = encode(w, alphabet)
    windows = np.lib.stride_tricks.sliding_window_view(prefix, len(w))
    count = int(np.count_nonzero((windows == target).all(axis=1)))
    return count / (sample_length - len(w) + 1)


def _window_hashes(codes, n, starts):
    """Rolling hashes of the length-n windows at positions 0..starts-1."""
    hashes = np.zeros(starts, dtype=np.uint64)
    values = codes.astype(np.uint64) + np.uint64(1)
    for offset in range(n):
        hashes = hashes * _HASH_BASE + values[offset:offset + starts]
    return hashes


def frequency_table(spec: SubshiftSpec, n: int, sample_length: int) -> FrequencyTable:
    """
    Frequencies of all length-n factors over `sample_length` window starts.

    Factors absent from the sample are listed with frequency 0, so the table
    always covers factor_set(spec, n).
    """
    if n < 1 or sample_length < 1:
        raise ValueError("n and sample_length must be positive")
    prefix = expand_prefix(spec, sample_length + n - 1)
    codes = encode(prefix, spec.alphabet)
    hashes = _window_hashes(codes, n, sample_length)
    _, first, counts = np.unique(hashes, return_index=True, return_counts=True)
    entries = {word: 0.0 for word in factor_set(spec, n).words}
    for start, count in zip(first, counts):
        entries[prefix[start:start + n]] = count / sample_length
    return FrequencyTable(n=n, entries=entries, sample_length=sample_length)


def boshernitzan_profile(spec: SubshiftSpec, n_max: int, sample_length: int,
                         n_min: int = 1) -> BoshernitzanProfile:
    """
    Profile eta(n) = n * min{frequency of w : w length-n factor}, n = n_min..n_max.

    Occurrences are counted at `sample_length` window starts; a factor missing
    from the sample makes eta(n) = 0.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if not 1 <= n_min <= n_max:
        raise ValueError(f"n_min must lie in [1, {n_max}], got {n_min}")
    prefix = expand_prefix(spec, sample_length + n_max - 1)
    values = encode(prefix, spec.alphabet).astype(np.uint64) + np.uint64(1)

    entries = []
    exactness = EXACT
    hashes = np.zeros(values.size, dtype=np.uint64)
    for n in range(1, n_max + 1):
        # hashes[i] now covers the window prefix[i:i+n]
        hashes = hashes[:values.size - n + 1] * _HASH_BASE + values[n - 1:]
        if n < n_min:
            continue
        language = factor_set(spec, n)
        if not language.exact:
            exactness = SAMPLED
        _, counts = np.unique(hashes[:sample_length], return_counts=True)
        if counts.size < len(language):
            eta = 0.0
        else:
            eta = n * int(counts.min()) / sample_length
        entries.append((n, eta))
    return BoshernitzanProfile(entries=entries, sample_length=sample_length, exactness=exactness)
