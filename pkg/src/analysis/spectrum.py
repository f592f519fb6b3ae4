"""
Spectrum Module

Approximates the almost-sure spectrum of Schroedinger operators over
subshifts from the cocycle side: band sets of periodic approximants, a
per-energy scan that separates certified resolvent energies from spectrum
candidates, Lebesgue-measure and covering arithmetic, and a semicontinuity
probe comparing the band sets of two nearby sampling functions.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from scipy.linalg import eigvalsh
from scipy.optimize import brentq

from src.analysis.uniformity import FAIL, SMALL, UH, _Partial, budget_fallback, classify_cocycle
from src.cocycles.cocycle import LayeredSamplingFunction, schrodinger, sup_norm_distance
from src.dynamics.subshift import (
    SubshiftSpec,
    convergent_denominators,
    expand_prefix,
    substitution_level_lengths,
)
from src.processing.batch_processor import BatchProcessor
from src.utils.configuration import default_value
from src.utils.exceptions import BudgetExceededError

logger = logging.getLogger("spectrum")

RESOLVENT = "resolvent"
ZERO_EXPONENT = "z"
NON_UNIFORM = "nuh"

_CLASS_NAMES = {UH: RESOLVENT, SMALL: ZERO_EXPONENT, FAIL: NON_UNIFORM}


# ----------------------------------------------------------------------
# Interval arithmetic
# ----------------------------------------------------------------------
def _check_intervals(intervals):
    previous = -math.inf
    for lo, hi in intervals:
        if lo > hi:
            raise ValueError(f"Interval [{lo}, {hi}] is reversed")
        if lo < previous:
            raise ValueError("Intervals must be sorted and disjoint")
        previous = hi


def spectrum_measure(intervals) -> float:
    """Sum of interval lengths (intervals sorted and disjoint)."""
    intervals = list(intervals)
    _check_intervals(intervals)
    return float(sum(hi - lo for lo, hi in intervals))


def covering_bound(intervals, epsilon, m) -> float:
    """2 m epsilon + sum of lengths: measure bound of the epsilon-neighborhood of m intervals."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    return 2.0 * m * epsilon + spectrum_measure(intervals)


def merge_intervals(intervals, tol=0.0):
    """Union of closed intervals as a sorted disjoint list (touching within tol merged)."""
    merged = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1] + tol:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


# ----------------------------------------------------------------------
# Periodic operators
# ----------------------------------------------------------------------
@dataclass
class BandSet:
    """Closed bands of a periodic Schroedinger operator."""

    period: int
    bands: List[Tuple[float, float]]

    @property
    def measure(self):
        return spectrum_measure(self.bands)

    def contains(self, energy, tol=0.0):
        return any(lo - tol <= energy <= hi + tol for lo, hi in self.bands)

    def distance(self, energy):
        """Distance from an energy to the band set."""
        return min(max(lo - energy, energy - hi, 0.0) for lo, hi in self.bands)

    def to_rows(self, level=None):
        return [{"k": level, "band_lo": lo, "band_hi": hi} for lo, hi in self.bands]

    def to_dict(self):
        return {"period": self.period, "bands": [list(b) for b in self.bands], "measure": self.measure}


def periodic_discriminant(potential, energies):
    """
    D(E) = trace of the period transfer product, evaluated on an array of energies.
    """
    v = np.asarray(potential, dtype=float)
    e = np.asarray(energies, dtype=float)
    a = np.ones_like(e)
    b = np.zeros_like(e)
    c = np.zeros_like(e)
    d = np.ones_like(e)
    for value in v:
        g = e - value
        # [[g, -1], [1, 0]] @ [[a, b], [c, d]]
        a, b, c, d = g * a - c, g * b - d, a, b
    return a + d


def _floquet_edges(v):
    """Eigenvalues of the periodic (D = 2) and antiperiodic (D = -2) truncations."""
    p = len(v)
    if p == 1:
        return np.array([v[0] - 2.0, v[0] + 2.0])
    if p == 2:
        periodic = np.array([[v[0], 2.0], [2.0, v[1]]])
        antiperiodic = np.diag(v)
        return np.sort(np.concatenate([eigvalsh(periodic), eigvalsh(antiperiodic)]))
    base = np.diag(v) + np.diag(np.ones(p - 1), 1) + np.diag(np.ones(p - 1), -1)
    periodic = base.copy()
    periodic[0, -1] = periodic[-1, 0] = 1.0
    antiperiodic = base.copy()
    antiperiodic[0, -1] = antiperiodic[-1, 0] = -1.0
    return np.sort(np.concatenate([eigvalsh(periodic), eigvalsh(antiperiodic)]))


def _bracketed_roots(v, lo, hi, points, edge_tol):
    """Roots of D - 2 and D + 2 bracketed by sign changes on a uniform grid, refined by Brent's method."""
    energies = np.linspace(lo, hi, points)
    d = periodic_discriminant(v, energies)
    roots = {}
    for target in (2.0, -2.0):
        g = d - target
        found = []
        for i in np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0):
            found.append(brentq(lambda x: float(periodic_discriminant(v, x) - target),
                                energies[i], energies[i + 1], xtol=edge_tol))
        roots[target] = np.array(found)
    return roots


def _polish_edge(v, edge, target, width, edge_tol):
    """Refine a band edge as a root of D - target with Brent's method when bracketed."""
    lo, hi = edge - width, edge + width
    f_lo = periodic_discriminant(v, lo) - target
    f_hi = periodic_discriminant(v, hi) - target
    if np.sign(f_lo) * np.sign(f_hi) < 0:
        return brentq(lambda x: float(periodic_discriminant(v, x) - target), lo, hi, xtol=edge_tol)
    return edge


def periodic_spectrum(potential, resolution=None, edge_tol=None) -> BandSet:
    """
    Bands {E : |D(E)| <= 2} of the periodic operator with the given one-period potential.

    Edges are located by sign changes of D - 2 and D + 2 on resolution * p grid
    steps over [min v - 2, max v + 2] and refined with Brent's method to edge_tol.
    The eigenvalues of the periodic and antiperiodic p x p truncations give all 2p
    edges; each is matched to a bracketed root, and an edge the grid cannot bracket
    (a band or gap thinner than one step, or a closed gap) is polished in a narrow
    bracket of its own or kept as the eigenvalue. Sorted, the edges pair up into
    bands [e_0, e_1], [e_2, e_3], ...; bands touching within edge_tol are merged.

    Args:
        potential (sequence of float): One period of the potential (p >= 1)
        resolution (int, optional): Grid points per period. Defaults to config 'spectrum.resolution'.
        edge_tol (float, optional): Edge accuracy. Defaults to config 'spectrum.edge_tol'.

    Returns:
        BandSet: At most p bands
    """
    v = np.asarray(potential, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("Potential must be a nonempty one-period sequence")
    if not np.all(np.isfinite(v)):
        raise ValueError("Potential values must be finite")
    resolution = default_value('spectrum.resolution') if resolution is None else resolution
    edge_tol = default_value('spectrum.edge_tol') if edge_tol is None else edge_tol

    p = v.size
    span = (v.max() + 2.0) - (v.min() - 2.0)
    step = span / (resolution * p)
    edges = _floquet_edges(v)
    roots = _bracketed_roots(v, v.min() - 2.0, v.max() + 2.0, resolution * p + 1, edge_tol)

    polished = np.empty_like(edges)
    unbracketed = 0
    for k, edge in enumerate(edges):
        target = 2.0 if periodic_discriminant(v, edge) > 0 else -2.0
        width = min(step, 1e-6 * max(1.0, abs(edge)))
        candidates = roots[target]
        nearest = np.argmin(np.abs(candidates - edge)) if candidates.size else None
        if nearest is not None and abs(candidates[nearest] - edge) <= width:
            polished[k] = candidates[nearest]
        else:
            # thinner than a grid step, or a closed gap
            unbracketed += 1
            polished[k] = _polish_edge(v, edge, target, width, edge_tol)
    polished = np.sort(polished)
    if unbracketed:
        logger.debug(f"Period {p}: {unbracketed} of {edges.size} edges not bracketed on the grid")

    bands = [(float(polished[2 * i]), float(polished[2 * i + 1])) for i in range(p)]
    bands = merge_intervals(bands, tol=edge_tol)
    return BandSet(period=p, bands=bands)


def fibonacci_trace_map(energies, coupling, level):
    """
    Discriminant of the level-k Fibonacci approximant by the trace recursion.

    x_{-1} = E - coupling, x_0 = E, x_1 = E (E - coupling) - 2 and
    x_{k+1} = x_k x_{k-1} - x_{k-2}; level k corresponds to the word sigma^k(a)
    of the substitution a -> ab, b -> a with potential coupling * 1[b].
    """
    e = np.asarray(energies, dtype=float)
    if level < -1:
        raise ValueError(f"level must be >= -1, got {level}")
    traces = [e - coupling, e, e * (e - coupling) - 2.0]
    if level <= 1:
        return traces[level + 1]
    for _ in range(level - 1):
        traces = [traces[1], traces[2], traces[2] * traces[1] - traces[0]]
    return traces[2]


# ----------------------------------------------------------------------
# Periodic approximants
# ----------------------------------------------------------------------
def approximant_periods(spec: SubshiftSpec, levels):
    """q_k per level: convergent denominators, substitution word lengths, |w| for periodic."""
    levels = list(levels)
    if spec.variant == "periodic":
        return [len(spec.word)] * len(levels)
    if spec.variant == "sturmian":
        denominators = convergent_denominators(spec.continued_fraction)
        if max(levels) > len(denominators):
            raise ValueError(f"Only {len(denominators)} convergent denominators available")
        return [denominators[k - 1] for k in levels]
    if spec.variant == "substitution":
        lengths = substitution_level_lengths(spec, max(levels))
        return [lengths[k - 1] for k in levels]
    if spec.variant == "toeplitz":
        periods = []
        for k in levels:
            q = 1
            for i in range(k):
                q *= spec.periods[i % len(spec.periods)]
            periods.append(q)
        return periods
    raise ValueError(f"Periodic approximants are not defined for variant '{spec.variant}'")


def approximant_potential(f: LayeredSamplingFunction, spec: SubshiftSpec, q: int):
    """f evaluated along expand_prefix(spec, q + 2r): one period of the approximant."""
    r = f.radius
    prefix = expand_prefix(spec, q + 2 * r)
    return f.values_along(spec, prefix)


@dataclass
class ApproximantLevel:
    level: int
    period: int
    bands: BandSet

    @property
    def measure(self):
        return self.bands.measure

    def to_dict(self):
        return {"k": self.level, "q": self.period, "bands": [list(b) for b in self.bands.bands],
                "measure": self.measure}


def _level_bands(f, spec, resolution, item):
    level, q = item
    return ApproximantLevel(level, q, periodic_spectrum(approximant_potential(f, spec, q), resolution))


def approximant_sequence(f: LayeredSamplingFunction, spec: SubshiftSpec, levels, resolution=None,
                         n_jobs=1) -> List[ApproximantLevel]:
    """
    Band sets of the periodic approximants at each level.

    Args:
        f (LayeredSamplingFunction): Locally constant sampling function
        spec (SubshiftSpec): Sturmian, substitution, Toeplitz or periodic base
        levels (int or list of int): K (levels 1..K) or explicit levels
        resolution (int, optional): Passed to periodic_spectrum. Defaults to config.
        n_jobs (int, optional): Worker processes. Defaults to 1.

    Returns:
        list of ApproximantLevel
    """
    if not f.finite:
        raise ValueError("approximant_sequence needs a finite-layered sampling function")
    levels = list(range(1, levels + 1)) if isinstance(levels, int) else [int(k) for k in levels]
    periods = approximant_periods(spec, levels)
    processor = BatchProcessor(n_jobs, soft_errors=(), desc="Approximants")
    results = processor.map_values(_Partial(_level_bands, f, spec, resolution), list(zip(levels, periods)))
    for result in results:
        logger.debug(f"Level {result.level} (q={result.period}): measure {result.measure:.6f}")
    return results


# ----------------------------------------------------------------------
# Spectrum scan
# ----------------------------------------------------------------------
@dataclass
class EnergyGrid:
    """Sorted distinct energies on [a, b]."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.size < 2:
            raise ValueError("Energy grid needs at least two points")
        if np.any(np.diff(self.points) <= 0):
            raise ValueError("Energy grid points must be sorted and distinct")

    @classmethod
    def from_step(cls, a, b, step):
        if not a < b or step <= 0:
            raise ValueError(f"Need a < b and step > 0, got [{a}, {b}], step {step}")
        count = int(round((b - a) / step)) + 1
        return cls(np.linspace(a, b, count))

    @classmethod
    def from_count(cls, a, b, count):
        if not a < b:
            raise ValueError(f"Need a < b, got [{a}, {b}]")
        return cls(np.linspace(a, b, int(count)))

    @property
    def interval(self):
        return float(self.points[0]), float(self.points[-1])

    def __len__(self):
        return self.points.size


@dataclass
class SpectrumEstimate:
    """Per-energy classes, padded candidate intervals and their measure."""

    energies: np.ndarray
    classes: List[str]
    exponents: List[float]
    certificate_ids: List[str]
    flags: List[List[str]]
    intervals: List[Tuple[float, float]]
    metadata: Dict = field(default_factory=dict)

    @property
    def measure(self):
        return spectrum_measure(self.intervals)

    def candidates(self):
        return np.array([c != RESOLVENT for c in self.classes])

    def to_rows(self):
        return [
            {"E": float(e), "class": c, "exponent": x, "certificate_id": cid}
            for e, c, x, cid in zip(self.energies, self.classes, self.exponents, self.certificate_ids)
        ]

    def to_dict(self):
        return {
            "intervals": [list(i) for i in self.intervals],
            "measure": self.measure,
            "counts": {name: self.classes.count(name) for name in (RESOLVENT, ZERO_EXPONENT, NON_UNIFORM)},
            "degraded": [float(e) for e, f in zip(self.energies, self.flags) if f],
            "metadata": self.metadata,
        }


def candidate_intervals(energies, candidate_mask):
    """Maximal candidate runs padded by one grid step on each side, clipped and merged."""
    energies = np.asarray(energies, dtype=float)
    mask = np.asarray(candidate_mask, dtype=bool)
    last = energies.size - 1
    intervals = []
    i = 0
    while i <= last:
        if not mask[i]:
            i += 1
            continue
        j = i
        while j + 1 <= last and mask[j + 1]:
            j += 1
        intervals.append((float(energies[max(i - 1, 0)]), float(energies[min(j + 1, last)])))
        i = j + 1
    return merge_intervals(intervals)


def _scan_energy(f, spec, epsilon, horizon, budget, margin, energy):
    return classify_cocycle(schrodinger(f, energy, spec), epsilon, horizon, energy, budget, margin)


def scan_spectrum(f: LayeredSamplingFunction, spec: SubshiftSpec, grid, horizon=None, epsilon=None,
                  n_jobs=1, budget=None, margin=None, verbose=False) -> SpectrumEstimate:
    """
    Classify grid energies as resolvent (UH certificate), z (small exponent) or nuh.

    Candidate intervals over-cover the spectrum up to grid resolution; only
    the resolvent classification is backed by a certificate.

    Args:
        f (LayeredSamplingFunction): Finite-layered sampling function
        spec (SubshiftSpec): Base subshift
        grid (EnergyGrid or array-like): Energies
        horizon (int, optional): Largest block length and exponent scale. Defaults to config.
        epsilon (float, optional): Small-exponent threshold. Defaults to config 'spectrum.epsilon'.
        n_jobs (int, optional): Worker processes. Defaults to 1.
        budget (int, optional): Matrix-step budget per energy. Defaults to config.
        margin (float, optional): Cone margin. Defaults to config.
        verbose (bool, optional): Progress bar. Defaults to False.

    Returns:
        SpectrumEstimate
    """
    if not f.finite:
        raise ValueError("scan_spectrum needs a finite-layered sampling function")
    if not isinstance(grid, EnergyGrid):
        grid = EnergyGrid(grid)
    horizon = default_value('spectrum.horizon') if horizon is None else int(horizon)
    epsilon = default_value('spectrum.epsilon') if epsilon is None else epsilon

    energies = [float(e) for e in grid.points]
    # energies over budget stay candidates
    processor = BatchProcessor(n_jobs, verbose=verbose, soft_errors=(BudgetExceededError,), desc="Spectrum scan")
    results = processor.map_values(
        _Partial(_scan_energy, f, spec, epsilon, horizon, budget, margin), energies,
        fallback=budget_fallback(energies),
    )
    classes = [_CLASS_NAMES[r.status] for r in results]
    candidates = np.array([c != RESOLVENT for c in classes])
    estimate = SpectrumEstimate(
        energies=grid.points,
        classes=classes,
        exponents=[float(r.exponent) for r in results],
        certificate_ids=[r.certificate_id for r in results],
        flags=[list(r.flags) for r in results],
        intervals=candidate_intervals(grid.points, candidates),
        metadata={
            "grid": {"a": grid.interval[0], "b": grid.interval[1], "points": len(grid)},
            "horizon": horizon,
            "epsilon": epsilon,
            "sampling": f.to_dict(),
            "subshift": spec.to_dict(),
        },
    )
    logger.info(f"Spectrum scan: {int(candidates.sum())} candidates of {len(grid)}, "
                f"measure estimate {estimate.measure:.6f}")
    return estimate


# ----------------------------------------------------------------------
# Semicontinuity
# ----------------------------------------------------------------------
@dataclass
class SemicontinuityReport:
    holds: bool
    violation: float
    epsilon: float
    period: int
    bands_f: BandSet
    bands_g: BandSet

    def to_dict(self):
        return {
            "holds": self.holds,
            "violation": self.violation,
            "epsilon": self.epsilon,
            "q": self.period,
            "bands_f": self.bands_f.to_dict(),
            "bands_g": self.bands_g.to_dict(),
        }


def _max_distance(bands_from: BandSet, bands_to: BandSet):
    """sup over x in bands_from of dist(x, bands_to); attained at endpoints or gap midpoints."""
    gaps = [(hi, lo) for (_, hi), (lo, _) in zip(bands_to.bands, bands_to.bands[1:])]
    worst = 0.0
    for lo, hi in bands_from.bands:
        points = [lo, hi] + [(a + b) / 2 for a, b in gaps if lo < (a + b) / 2 < hi]
        worst = max(worst, max(bands_to.distance(x) for x in points))
    return worst


def semicontinuity_probe(f, g, spec, level, resolution=None, tol=1e-8) -> SemicontinuityReport:
    """
    Check that g's level-k band set lies in the epsilon-neighborhood of f's, epsilon = ||f - g||.
    """
    if not (f.finite and g.finite):
        raise ValueError("semicontinuity_probe needs finite-layered sampling functions")
    epsilon = sup_norm_distance(f, g, spec)
    (q,) = approximant_periods(spec, [level])
    bands_f = periodic_spectrum(approximant_potential(f, spec, q), resolution)
    bands_g = periodic_spectrum(approximant_potential(g, spec, q), resolution)
    violation = max(0.0, _max_distance(bands_g, bands_f) - epsilon)
    return SemicontinuityReport(violation <= tol, violation, epsilon, q, bands_f, bands_g)
