"""
Cocycle Module

SL(2,R) cocycles over subshifts: locally constant cocycles given by a window
table, continuous sampling functions represented as absolutely summable sums
of locally constant layers, Schroedinger cocycles built from them, and
one-parameter families over an energy interval.

A configuration is a finite word; `start` is the index of omega_0 inside it,
so A(T^k omega) is read off the window configuration[start+k-r : start+k+r+1].
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from src.cocycles import matrices
from src.dynamics.subshift import SubshiftSpec, encode, factor_set, frequency_table, expand_prefix
from src.utils.configuration import default_value
from src.utils.exceptions import (
    BudgetExceededError,
    ConfigurationError,
    IllegalWindowError,
    InsufficientConfigurationError,
)

logger = logging.getLogger("cocycle")

# Window codes are integers in base |alphabet|; beyond this many symbols fall back to dict lookup
_MAX_CODE = 2 ** 62


class WindowIndex:
    """
    Maps every position of a word to the index of its (2r+1)-window in a sorted window list.
    """

    def __init__(self, subshift, radius, windows):
        self.alphabet = subshift.alphabet
        self.radius = radius
        self.width = 2 * radius + 1
        self.windows = tuple(windows)
        base = len(self.alphabet)
        self._use_codes = base ** self.width < _MAX_CODE
        if self._use_codes:
            self._powers = base ** np.arange(self.width - 1, -1, -1, dtype=np.int64)
            codes = np.array([int(encode(w, self.alphabet) @ self._powers) for w in self.windows],
                             dtype=np.int64)
            self._order = np.argsort(codes)
            self._sorted_codes = codes[self._order]
        else:
            self._lookup = {w: i for i, w in enumerate(self.windows)}

    def positions(self, word):
        """
        Window indices for every start position 0..len(word)-width.

        Raises:
            IllegalWindowError: naming the first window absent from the table
        """
        count = len(word) - self.width + 1
        if count <= 0:
            return np.zeros(0, dtype=np.int64)
        if not self._use_codes:
            try:
                return np.array([self._lookup[word[j:j + self.width]] for j in range(count)], dtype=np.int64)
            except KeyError as e:
                raise IllegalWindowError(e.args[0]) from None
        try:
            codes = encode(word, self.alphabet)
        except ValueError:
            bad = next(j for j, s in enumerate(word) if s not in self.alphabet.symbols)
            start = max(0, bad - self.width + 1)
            raise IllegalWindowError(word[start:start + self.width]) from None
        windows = np.lib.stride_tricks.sliding_window_view(codes, self.width) @ self._powers
        slots = np.searchsorted(self._sorted_codes, windows)
        slots = np.minimum(slots, len(self._sorted_codes) - 1)
        legal = self._sorted_codes[slots] == windows
        if not legal.all():
            j = int(np.argmin(legal))
            raise IllegalWindowError(word[j:j + self.width])
        return self._order[slots]


class LocallyConstantCocycle:
    """
    Cocycle A : Omega -> SL(2,R) depending on the window omega_{-r..r}.
    """

    def __init__(self, subshift: SubshiftSpec, radius: int, table, det_tol=None,
                 check_coverage=True, name=""):
        """
        Initialize from a window table.

        Args:
            subshift (SubshiftSpec): Base subshift
            radius (int): Window radius r >= 0
            table (dict): window word of length 2r+1 -> 2x2 matrix (array-like)
            det_tol (float, optional): Determinant tolerance. Defaults to config 'cocycle.det_tol'.
            check_coverage (bool, optional): Require every legal window in the table. Defaults to True.
            name (str, optional): Label used in reports. Defaults to "".
        """
        self.logger = logging.getLogger("LocallyConstantCocycle")
        if radius < 0:
            raise ValueError(f"Window radius must be >= 0, got {radius}")
        self.subshift = subshift
        self.radius = int(radius)
        self.name = name
        self.det_tol = default_value('cocycle.det_tol') if det_tol is None else det_tol
        width = 2 * self.radius + 1

        windows = tuple(sorted(table))
        for window in windows:
            if len(window) != width:
                raise ValueError(f"Window '{window}' has length {len(window)}, expected {width}")
        if check_coverage:
            missing = [w for w in factor_set(subshift, width).words if w not in table]
            if missing:
                raise ValueError(f"Cocycle table misses legal windows: {missing[:5]}")

        stack = np.array([np.asarray(table[w], dtype=float).reshape(2, 2) for w in windows])
        stack, off = matrices.normalize_determinant(stack, self.det_tol, labels=windows)
        self.renormalized_windows = tuple(w for w, flag in zip(windows, off) if flag)

        self.windows = windows
        self.stack = stack
        self.stack.setflags(write=False)
        self._index = WindowIndex(subshift, self.radius, windows)
        self.logger.debug(f"Cocycle {name or '<unnamed>'}: {len(windows)} windows at radius {self.radius}")

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------
    @classmethod
    def constant(cls, subshift, matrix, name="constant"):
        table = {w: matrix for w in factor_set(subshift, 1).words}
        return cls(subshift, 0, table, name=name)

    @classmethod
    def identity(cls, subshift):
        return cls.constant(subshift, np.eye(2), name="identity")

    def with_stack(self, stack, name=None):
        """Same windows, new matrices."""
        table = {w: m for w, m in zip(self.windows, np.asarray(stack, dtype=float))}
        return LocallyConstantCocycle(self.subshift, self.radius, table, det_tol=self.det_tol,
                                      check_coverage=False, name=name or self.name)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------
    @property
    def width(self):
        return 2 * self.radius + 1

    @property
    def c_max(self):
        """max over windows of log ||A(window)|| (equal to the log norm of the inverse)."""
        return float(np.max(matrices.log_norm(self.stack)))

    def eval(self, window):
        """
        Table entry for a legal window.

        Raises:
            IllegalWindowError: If the window is not in the table
        """
        if len(window) != self.width:
            raise IllegalWindowError(window)
        index = self._index.positions(window)
        return self.stack[index[0]].copy()

    def window_positions(self, word):
        return self._index.positions(word)

    def factors(self, word):
        """Matrices A(T^j omega) for every window of `word` (shape (len-2r, 2, 2))."""
        return self.stack[self._index.positions(word)]

    def to_dict(self):
        return {
            "subshift": self.subshift.to_dict(),
            "radius": self.radius,
            "table": {w: [float(x) for x in m.ravel()] for w, m in zip(self.windows, self.stack)},
        }

    @classmethod
    def from_dict(cls, document):
        try:
            subshift = SubshiftSpec.from_dict(document["subshift"])
            table = {w: np.asarray(v, dtype=float).reshape(2, 2) for w, v in document["table"].items()}
            return cls(subshift, int(document["radius"]), table)
        except KeyError as e:
            raise ConfigurationError(f"Cocycle document is missing field {e}") from e

    def __repr__(self):
        return f"LocallyConstantCocycle(name={self.name!r}, radius={self.radius}, windows={len(self.windows)})"


# ----------------------------------------------------------------------
# Sampling functions
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SamplingLayer:
    """Locally constant real function of the window omega_{-r..r}, times a coefficient."""

    radius: int
    table: Tuple[Tuple[str, float], ...] = ()
    coefficient: float = 1.0
    default: Optional[float] = None

    @cached_property
    def mapping(self):
        return dict(self.table)

    @property
    def sup(self):
        values = [abs(v) for _, v in self.table]
        if self.default is not None:
            values.append(abs(self.default))
        return max(values) if values else 0.0

    def value(self, window):
        """Layer value (without coefficient) on a window of length 2*radius+1."""
        if window in self.mapping:
            return self.mapping[window]
        if self.default is None:
            raise IllegalWindowError(window)
        return self.default

    def to_dict(self):
        document = {"radius": self.radius, "table": self.mapping, "coefficient": self.coefficient}
        if self.default is not None:
            document["default"] = self.default
        return document


@dataclass(frozen=True)
class LayeredSamplingFunction:
    """
    f = sum_j c_j f_j with locally constant layers f_j, plus a declared tail bound tau.
    """

    layers: Tuple[SamplingLayer, ...] = ()
    tail: float = 0.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.tail < 0:
            raise ValueError(f"Tail bound must be >= 0, got {self.tail}")

    @classmethod
    def zero(cls):
        return cls((), 0.0, name="zero")

    @classmethod
    def constant(cls, value):
        return cls((SamplingLayer(0, (), 1.0, float(value)),), name=f"constant({value})")

    @classmethod
    def indicator(cls, symbol, coupling=1.0):
        """coupling * 1[omega_0 == symbol]."""
        return cls((SamplingLayer(0, ((symbol, 1.0),), float(coupling), 0.0),),
                   name=f"{coupling}*indicator({symbol})")

    @classmethod
    def from_function(cls, subshift, radius, fn, coefficient=1.0, name=""):
        """Tabulate fn(window) over every legal window of the given radius."""
        words = factor_set(subshift, 2 * radius + 1).words
        table = tuple((w, float(fn(w))) for w in words)
        return cls((SamplingLayer(radius, table, float(coefficient)),), name=name)

    @classmethod
    def geometric(cls, subshift, depth, ratio=0.5, fn=None, name="geometric"):
        """
        sum_{j>=0} ratio**j f_j with f_j of radius j, keeping layers j < depth.

        fn(window) must take values in [-1, 1]; the dropped layers j >= depth
        are declared as the tail ratio**depth / (1 - ratio).
        """
        if not 0.0 < ratio < 1.0:
            raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
        if fn is None:
            def fn(window):
                return 1.0 if window[0] == window[-1] else -1.0
        layers = []
        for j in range(depth):
            words = factor_set(subshift, 2 * j + 1).words
            values = tuple((w, float(fn(w))) for w in words)
            if any(abs(v) > 1.0 for _, v in values):
                raise ValueError("geometric layers need values in [-1, 1]")
            layers.append(SamplingLayer(j, values, ratio ** j))
        return cls(tuple(layers), ratio ** depth / (1.0 - ratio), name=name)

    @property
    def radius(self):
        return max((layer.radius for layer in self.layers), default=0)

    @property
    def finite(self):
        return self.tail == 0.0

    @property
    def sup_bound(self):
        return sum(abs(layer.coefficient) * layer.sup for layer in self.layers) + self.tail

    def evaluate(self, window):
        """
        Value on a window of length 2R+1 (R = max layer radius); exact up to the tail.
        """
        big = self.radius
        if len(window) != 2 * big + 1:
            raise ValueError(f"Expected a window of length {2 * big + 1}, got '{window}'")
        total = 0.0
        for layer in self.layers:
            inner = window[big - layer.radius: big + layer.radius + 1]
            total += layer.coefficient * layer.value(inner)
        return total

    def table(self, subshift, radius=None):
        """Values on every legal window of radius max(R, radius)."""
        big = self.radius if radius is None else max(radius, self.radius)
        shift = big - self.radius
        out = {}
        for window in factor_set(subshift, 2 * big + 1).words:
            inner = window[shift:len(window) - shift] if shift else window
            out[window] = self.evaluate(inner)
        return out

    def values_along(self, subshift, word):
        """f(T^j omega) for every full window of `word`."""
        big = self.radius
        width = 2 * big + 1
        table = self.table(subshift)
        try:
            return np.array([table[word[j:j + width]] for j in range(len(word) - width + 1)])
        except KeyError as e:
            raise IllegalWindowError(e.args[0]) from None

    def plus(self, other, scale=1.0, name=""):
        """self + scale * other (layers concatenated, tails added)."""
        scaled = tuple(SamplingLayer(l.radius, l.table, scale * l.coefficient, l.default) for l in other.layers)
        return LayeredSamplingFunction(self.layers + scaled, self.tail + abs(scale) * other.tail,
                                       name=name or self.name)

    def truncated(self, radius):
        """Layers of radius <= `radius` and the sup bound of what was dropped."""
        kept = tuple(l for l in self.layers if l.radius <= radius)
        dropped = sum(abs(l.coefficient) * l.sup for l in self.layers if l.radius > radius)
        return LayeredSamplingFunction(kept, 0.0, name=self.name), dropped + self.tail

    def to_dict(self):
        return {"layers": [layer.to_dict() for layer in self.layers], "tail": self.tail}

    @classmethod
    def from_dict(cls, document):
        if not isinstance(document, dict) or "layers" not in document:
            raise ConfigurationError("Sampling function document needs a 'layers' array")
        try:
            layers = tuple(
                SamplingLayer(
                    int(layer["radius"]),
                    tuple(sorted((str(k), float(v)) for k, v in layer.get("table", {}).items())),
                    float(layer.get("coefficient", 1.0)),
                    None if layer.get("default") is None else float(layer["default"]),
                )
                for layer in document["layers"]
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid sampling layer: {e}") from e
        return cls(layers, float(document.get("tail", 0.0)))


def sup_norm_distance(f, g, subshift):
    """||f - g||_inf over legal windows, plus both tails."""
    radius = max(f.radius, g.radius)
    tf = f.table(subshift, radius)
    tg = g.table(subshift, radius)
    gap = max(abs(tf[w] - tg[w]) for w in tf)
    return float(gap) + f.tail + g.tail


# ----------------------------------------------------------------------
# Schroedinger cocycles and families
# ----------------------------------------------------------------------
def schrodinger(f: LayeredSamplingFunction, energy: float, subshift: SubshiftSpec) -> LocallyConstantCocycle:
    """
    Schroedinger cocycle [[E - f(omega), -1], [1, 0]] at radius max layer radius.

    A positive tail makes this a truncation whose entries are within tau of
    the true cocycle; the bound is kept on the result as `truncation_error`.
    """
    if not f.finite:
        logger.warning(f"Sampling function has tail {f.tail}; Schroedinger cocycle is a truncation")
    values = f.table(subshift)
    table = {w: matrices.schrodinger_matrix(energy - v) for w, v in values.items()}
    cocycle = LocallyConstantCocycle(subshift, f.radius, table, name=f"schrodinger(E={energy:g})")
    cocycle.truncation_error = f.tail
    return cocycle


class CocycleFamily:
    """
    One-parameter family E -> A(E, .) of locally constant cocycles over an energy interval.
    """

    def __init__(self, subshift, radius, builder: Callable[[float], np.ndarray], interval,
                 kind="table", metadata=None):
        """
        Initialize the family.

        Args:
            subshift (SubshiftSpec): Base subshift
            radius (int): Common window radius
            builder (callable): E -> stack of matrices aligned with `self.windows`
            interval (tuple): Energy interval (a, b)
            kind (str, optional): 'schrodinger', 'table', 'rotation', 'constant'. Defaults to 'table'.
            metadata (dict, optional): Serializable description. Defaults to None.
        """
        a, b = interval
        if not a <= b:
            raise ValueError(f"Energy interval must satisfy a <= b, got {interval}")
        self.subshift = subshift
        self.radius = int(radius)
        self.windows = factor_set(subshift, 2 * self.radius + 1).words
        self.builder = builder
        self.interval = (float(a), float(b))
        self.kind = kind
        self.metadata = metadata or {}

    @classmethod
    def schrodinger(cls, f, subshift, interval):
        values = f.table(subshift)
        words = factor_set(subshift, 2 * f.radius + 1).words
        potential = np.array([values[w] for w in words])

        def builder(energy):
            return matrices.schrodinger_matrix(energy - potential)

        return cls(subshift, f.radius, builder, interval, kind="schrodinger",
                   metadata={"sampling": f.to_dict()})

    @classmethod
    def constant(cls, cocycle, interval=(0.0, 1.0)):
        stack = np.array(cocycle.stack)
        # cocycle windows and family windows are the same sorted legal words
        return cls(cocycle.subshift, cocycle.radius, lambda energy: stack, interval, kind="constant",
                   metadata={"cocycle": cocycle.name})

    @classmethod
    def rotation(cls, subshift, interval=(0.0, 1.0)):
        """A(E, omega) = rotation by angle E, independent of omega."""
        count = len(factor_set(subshift, 1).words)

        def builder(energy):
            return np.broadcast_to(matrices.rotation(energy), (count, 2, 2)).copy()

        return cls(subshift, 0, builder, interval, kind="rotation")

    @classmethod
    def from_builder(cls, subshift, radius, fn, interval, kind="table"):
        """Family from fn(E, window) -> 2x2 matrix."""
        words = factor_set(subshift, 2 * radius + 1).words

        def builder(energy):
            return np.array([np.asarray(fn(energy, w), dtype=float).reshape(2, 2) for w in words])

        return cls(subshift, radius, builder, interval, kind=kind)

    def stack(self, energy):
        return np.asarray(self.builder(float(energy)), dtype=float)

    def at(self, energy):
        """The fixed-E slice as a LocallyConstantCocycle."""
        table = dict(zip(self.windows, self.stack(energy)))
        return LocallyConstantCocycle(self.subshift, self.radius, table, check_coverage=False,
                                      name=f"{self.kind}(E={energy:g})")

    def matrix(self, energy, window):
        try:
            return self.stack(energy)[self.windows.index(window)]
        except ValueError:
            raise IllegalWindowError(window) from None


# ----------------------------------------------------------------------
# Products and exponents
# ----------------------------------------------------------------------
def _check_horizon(n, horizon):
    if horizon is None:
        horizon = default_value('cocycle.horizon')
    if abs(n) > horizon:
        raise BudgetExceededError(f"|n| = {abs(n)} exceeds the configured horizon {horizon}")


def _factors_for(cocycle, configuration, start, n):
    """Factors in application order for A_n(omega), omega_0 = configuration[start]."""
    r = cocycle.radius
    if n >= 0:
        lo, hi = start - r, start + n + r
        if lo < 0 or hi > len(configuration):
            raise InsufficientConfigurationError(max(hi, len(configuration)) + max(0, -lo), len(configuration))
        return cocycle.factors(configuration[lo:hi])
    m = -n
    lo, hi = start - m - r, start + r
    if lo < 0 or hi > len(configuration):
        raise InsufficientConfigurationError(max(hi, len(configuration)) + max(0, -lo), len(configuration))
    forward = cocycle.factors(configuration[lo:hi])  # A(T^{-m} omega), ..., A(T^{-1} omega)
    return matrices.inverse(forward[::-1])


def iterate_scaled(cocycle, configuration, start, n, horizon=None):
    """
    A_n(omega) as (normalized matrix, log scale); A_n = exp(scale) * matrix.
    """
    _check_horizon(n, horizon)
    if n == 0:
        return np.eye(2), 0.0
    normalized, scale = matrices.reduce_product(_factors_for(cocycle, configuration, start, n))
    return normalized, float(scale)


def iterate(cocycle: LocallyConstantCocycle, configuration: str, start: int, n: int, horizon=None):
    """
    A_n(omega) = A(T^{n-1} omega) ... A(omega) for n >= 0, (A_{-n}(T^n omega))^{-1} for n < 0.

    Args:
        cocycle (LocallyConstantCocycle): The cocycle
        configuration (str): Word supplying every window touched
        start (int): Index of omega_0 in the configuration
        n (int): Number of steps (negative for backward products)
        horizon (int, optional): Largest |n| allowed. Defaults to config 'cocycle.horizon'.

    Returns:
        ndarray: 2x2 product (entries may overflow for very long hyperbolic products;
        use iterate_scaled there)
    """
    normalized, scale = iterate_scaled(cocycle, configuration, start, n, horizon)
    return normalized * np.exp(scale)


def finite_scale_exponent(cocycle, configuration, n, start=None, horizon=None):
    """
    (1/n) log ||A_n(omega)|| in nats per step.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if start is None:
        start = cocycle.radius
    normalized, scale = iterate_scaled(cocycle, configuration, start, n, horizon)
    return max(0.0, float((scale + matrices.log_norm(normalized)) / n))


def exponent_trace(cocycle, configuration, start, n_max, renorm_interval=None):
    """
    (1/k) log ||A_k(omega)|| for k = 1..n_max in one sequential pass.
    """
    if renorm_interval is None:
        renorm_interval = default_value('cocycle.renorm_interval')
    factors = _factors_for(cocycle, configuration, start, n_max)
    log_norms, _ = matrices.accumulate(factors, renorm_interval)
    return np.maximum(0.0, log_norms / np.arange(1, n_max + 1))


@dataclass
class ExponentExtrema:
    """Exact extrema of (1/n) log ||A_n|| over Omega with witnessing words."""

    n: int
    maximum: float
    minimum: float
    argmax: str
    argmin: str
    word_count: int


def _check_budget(word_count, n, budget):
    if budget is None:
        budget = default_value('general.budget')
    if word_count * max(n, 1) > budget:
        raise BudgetExceededError(
            f"Exact enumeration needs {word_count} x {n} matrix steps (budget {budget}); "
            f"use sampled_exponent_extrema instead"
        )


def sup_exponent_exact(cocycle: LocallyConstantCocycle, n: int, budget=None) -> ExponentExtrema:
    """
    Exact max/min over Omega of (1/n) log ||A_n(omega)||.

    A_n(omega) depends only on omega_{-r..n-1+r}, so the extrema over Omega
    are extrema over factor_set(n + 2r).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    words = factor_set(cocycle.subshift, n + 2 * cocycle.radius).words
    _check_budget(len(words), n, budget)
    indices = np.array([cocycle.window_positions(w) for w in words])
    logs = matrices.product_log_norm(cocycle.stack[indices])
    exponents = np.maximum(0.0, logs / n)
    hi, lo = int(np.argmax(exponents)), int(np.argmin(exponents))
    return ExponentExtrema(n, float(exponents[hi]), float(exponents[lo]), words[hi], words[lo], len(words))


def sampled_exponent_extrema(cocycle, n, sample_length, stride=1):
    """
    Extrema of (1/n) log ||A_n|| over windows of the canonical prefix (not exact).
    """
    width = n + 2 * cocycle.radius
    prefix = expand_prefix(cocycle.subshift, sample_length + width - 1)
    positions = cocycle.window_positions(prefix)
    starts = np.arange(0, sample_length, stride)
    indices = positions[starts[:, None] + np.arange(n)[None, :]]
    logs = matrices.product_log_norm(cocycle.stack[indices])
    exponents = np.maximum(0.0, logs / n)
    hi, lo = int(np.argmax(exponents)), int(np.argmin(exponents))
    return ExponentExtrema(n, float(exponents[hi]), float(exponents[lo]),
                           prefix[starts[hi]:starts[hi] + width], prefix[starts[lo]:starts[lo] + width],
                           len(starts))


@dataclass
class ExponentProfile:
    """Per-scale exact extrema of the finite-scale exponent for k = 1..n_max."""

    scales: np.ndarray
    sup: np.ndarray
    inf: np.ndarray
    words: Tuple[str, ...]
    snapshots: Dict[int, Tuple[np.ndarray, np.ndarray]]
    last: np.ndarray = None

    def sup_at(self, k):
        return float(self.sup[k - 1])

    def inf_at(self, k):
        return float(self.inf[k - 1])


def exponent_profile(cocycle, n_max, checkpoints=(), budget=None, extra=0, renorm_interval=None):
    """
    Extrema of (1/k) log ||A_k|| over Omega for every k <= n_max in one pass.

    Every length-(k+2r) factor is a prefix of a length-(n_max+2r) factor, so
    running products along the longer words cover all shorter scales.

    Args:
        cocycle (LocallyConstantCocycle): The cocycle
        n_max (int): Largest scale
        checkpoints (iterable of int, optional): Scales whose per-word products are kept. Defaults to ().
        budget (int, optional): Matrix-step budget. Defaults to config 'general.budget'.
        extra (int, optional): Extra symbols appended to each enumerated word. Defaults to 0.
        renorm_interval (int, optional): Defaults to config 'cocycle.renorm_interval'.

    Returns:
        ExponentProfile
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if renorm_interval is None:
        renorm_interval = default_value('cocycle.renorm_interval')
    words = factor_set(cocycle.subshift, n_max + 2 * cocycle.radius + extra).words
    _check_budget(len(words), n_max, budget)
    indices = np.array([cocycle.window_positions(w)[:n_max] for w in words])
    log_norms, snapshots = matrices.accumulate(cocycle.stack[indices], renorm_interval, checkpoints)
    exponents = np.maximum(0.0, log_norms / np.arange(1, n_max + 1))
    return ExponentProfile(
        scales=np.arange(1, n_max + 1),
        sup=exponents.max(axis=0),
        inf=exponents.min(axis=0),
        words=words,
        snapshots=snapshots,
        last=exponents[:, -1],
    )


def mean_exponent(cocycle, n, sample_length):
    """
    Frequency-weighted mean of (1/n) log ||A_n|| over length n+2r factors (L_mu proxy).
    """
    table = frequency_table(cocycle.subshift, n + 2 * cocycle.radius, sample_length)
    words = [w for w, freq in table.entries.items() if freq > 0]
    weights = np.array([table.entries[w] for w in words])
    indices = np.array([cocycle.window_positions(w) for w in words])
    logs = matrices.product_log_norm(cocycle.stack[indices])
    return float(np.dot(weights, np.maximum(0.0, logs / n)) / weights.sum())
