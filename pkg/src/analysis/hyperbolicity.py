"""
Hyperbolicity Module

Certifies uniform hyperbolicity of locally constant cocycles with invariant
cone families, extracts the expanding/contracting splitting numerically,
builds diagonal cocycles whose exponent is an exact Birkhoff average, and
compares the sup/min exponent spread along horizons.

A cone is an arc (center, half-width) of the projective circle of lines,
angles in [-pi/2, pi/2). A refusal from certify_uh is inconclusive: a
cocycle can be hyperbolic without a cone family at the block lengths tried.
"""

import json
import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from src.cocycles import matrices
from src.cocycles.cocycle import LocallyConstantCocycle, exponent_profile, iterate_scaled
from src.dynamics.subshift import expand_prefix, factor_set
from src.utils.configuration import default_value
from src.utils.exceptions import BudgetExceededError, DegenerateSingularValuesError

logger = logging.getLogger("hyperbolicity")

NO_INVARIANT_CONE = "no_invariant_cone"
BUDGET = "budget"
ELLIPTIC_MONODROMY = "elliptic_monodromy"

# starting half-widths tried per block length: initial, initial/4, ...
HALF_WIDTH_STEPS = 4


@dataclass
class UHCertificate:
    """Cone family strictly invariant under all length-N blocks."""

    block_length: int
    radius: int
    margin: float
    cones: Dict[str, Tuple[float, float]]
    min_log_expansion: float
    sweeps: int
    word_count: int

    certified = True

    @property
    def lower_bound(self):
        """Lower bound on the uniform exponent L implied by the certificate."""
        return self.min_log_expansion / self.block_length

    @property
    def certificate_id(self):
        digest = hashlib.sha1(json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")).hexdigest()
        return f"uh-N{self.block_length}-{digest[:10]}"

    def to_dict(self):
        return {
            "block_length": self.block_length,
            "radius": self.radius,
            "margin": self.margin,
            "cones": {w: [c, h] for w, (c, h) in sorted(self.cones.items())},
            "min_log_expansion": self.min_log_expansion,
            "lower_bound": self.min_log_expansion / self.block_length,
            "sweeps": self.sweeps,
            "word_count": self.word_count,
        }

    @classmethod
    def from_dict(cls, document):
        return cls(
            block_length=int(document["block_length"]),
            radius=int(document["radius"]),
            margin=float(document["margin"]),
            cones={w: (float(c), float(h)) for w, (c, h) in document["cones"].items()},
            min_log_expansion=float(document["min_log_expansion"]),
            sweeps=int(document.get("sweeps", 0)),
            word_count=int(document.get("word_count", 0)),
        )


@dataclass
class UHRefusal:
    """No certificate; `reason` separates a failed search from budget exhaustion."""

    reason: str
    tried: List[int] = field(default_factory=list)
    detail: str = ""

    certified = False
    certificate_id = ""

    def to_dict(self):
        return {"reason": self.reason, "tried": list(self.tried), "detail": self.detail}


@dataclass
class _BlockData:
    words: Tuple[str, ...]
    source: np.ndarray
    target: np.ndarray
    normalized: np.ndarray
    scale: np.ndarray


def _block_data(cocycle, block_length, budget):
    """Products A_N over every legal word of length N+2r+1 with source/target window indices."""
    words = factor_set(cocycle.subshift, block_length + 2 * cocycle.radius + 1).words
    if budget is None:
        budget = default_value('general.budget')
    if len(words) * block_length > budget:
        raise BudgetExceededError(
            f"Cone search at N={block_length} needs {len(words)} x {block_length} matrix steps (budget {budget})"
        )
    indices = np.array([cocycle.window_positions(w) for w in words])
    normalized, scale = matrices.reduce_product(cocycle.stack[indices[:, :block_length]])
    return _BlockData(words, indices[:, 0], indices[:, block_length], normalized, scale)


def _cone_images(data, centers, half_widths):
    """Image arcs of the source cones under each block product."""
    lo = centers[data.source] - half_widths[data.source]
    hi = centers[data.source] + half_widths[data.source]
    start = matrices.act(data.normalized, lo)
    end = matrices.act(data.normalized, hi)
    # det > 0 keeps the projective action orientation preserving
    length = np.mod(end - start, np.pi)
    return matrices.wrap_angle(start + length / 2), length / 2


def _log_expansion(data, centers, half_widths):
    """log of min ||A_N v|| over unit v in each source cone."""
    c = centers[data.source]
    h = half_widths[data.source]
    candidates = [matrices.stretch(data.normalized, c - h), matrices.stretch(data.normalized, c + h)]
    weakest = matrices.right_singular_angle(data.normalized) + np.pi / 2
    inside = matrices.angular_distance(weakest, c) <= h
    least = np.minimum(candidates[0], candidates[1])
    least = np.where(inside, np.minimum(least, matrices.stretch(data.normalized, weakest)), least)
    return data.scale + np.log(least)


def _check_cones(data, centers, half_widths, margin):
    """(images strictly inside target cones, per-word log expansion)."""
    image_centers, image_half = _cone_images(data, centers, half_widths)
    offset = matrices.wrap_angle(image_centers - centers[data.target])
    inside = np.all(np.abs(offset) + image_half <= half_widths[data.target] - margin)
    return bool(inside), _log_expansion(data, centers, half_widths)


def _initial_cones(data, count, half_width):
    """Centers at the mean most-expanded output direction of the blocks arriving at each window."""
    doubled = 2.0 * matrices.left_singular_angle(data.normalized)
    x = np.zeros(count)
    y = np.zeros(count)
    np.add.at(x, data.target, np.cos(doubled))
    np.add.at(y, data.target, np.sin(doubled))
    centers = matrices.wrap_angle(0.5 * np.arctan2(y, x))
    return centers, np.full(count, half_width)


def _search_cones(cocycle, data, margin, max_sweeps, half_width, angle_tol):
    """
    Image-tightening iteration C_t <- hull(images arriving at t) widened by 2 margin.

    Returns:
        tuple: (centers, half_widths, min log expansion, sweeps) or None
    """
    count = len(cocycle.windows)
    centers, half_widths = _initial_cones(data, count, half_width)
    log_threshold = math.log1p(margin)
    best = None
    for sweep in range(1, max_sweeps + 1):
        inside, log_expansion = _check_cones(data, centers, half_widths, margin)
        if inside and log_expansion.min() >= log_threshold:
            best = (centers.copy(), half_widths.copy(), float(log_expansion.min()), sweep)

        image_centers, image_half = _cone_images(data, centers, half_widths)
        offset = matrices.wrap_angle(image_centers - centers[data.target])
        lo = np.full(count, np.inf)
        hi = np.full(count, -np.inf)
        np.minimum.at(lo, data.target, offset - image_half)
        np.maximum.at(hi, data.target, offset + image_half)
        new_half = (hi - lo) / 2 + 2 * margin
        if np.any(new_half >= np.pi / 2 - margin):
            logger.debug(f"Cone hull degenerates at sweep {sweep}")
            break
        new_centers = matrices.wrap_angle(centers + (lo + hi) / 2)
        change = np.max(matrices.angular_distance(new_centers, centers) + np.abs(new_half - half_widths))
        centers, half_widths = new_centers, new_half
        if change < angle_tol:
            inside, log_expansion = _check_cones(data, centers, half_widths, margin)
            if inside and log_expansion.min() >= log_threshold:
                best = (centers, half_widths, float(log_expansion.min()), sweep)
            break
    return best


def _half_widths(initial, margin):
    """Narrower starting cones keep the repelling direction out near parabolic energies."""
    widths = [initial]
    while len(widths) < HALF_WIDTH_STEPS and widths[-1] / 4 > 4 * margin:
        widths.append(widths[-1] / 4)
    return widths


def _periodic_log_trace(cocycle):
    """log |trace| of the product over one period, or None when the base is not a single periodic orbit."""
    spec = cocycle.subshift
    if spec.variant != "periodic":
        return None
    word = expand_prefix(spec, len(spec.word) + 2 * cocycle.radius)
    normalized, scale = matrices.reduce_product(cocycle.factors(word))
    trace = abs(float(normalized[0, 0] + normalized[1, 1]))
    return math.log(trace) + float(scale) if trace > 0.0 else -math.inf


def _growth_allows(profile, block_length, margin):
    """
    Necessary condition for a certificate at block length N.

    Invariant cones expanding by 1 + margin per block force
    ||A_{mN}|| >= (1 + margin)^m on every word, for every m.
    """
    floor = math.log1p(margin)
    n_max = len(profile.scales)
    for multiple in range(block_length, n_max + 1, block_length):
        m = multiple // block_length
        if multiple * profile.inf_at(multiple) < m * floor - 1e-9 * m:
            return False
    return True


def certify_uh(cocycle: LocallyConstantCocycle, horizon=None, margin=None, budget=None,
               max_sweeps=None, initial_half_width=None, angle_tol=None, profile=None):
    """
    Search for an invariant cone family at block lengths N = 1, 2, 4, ... <= horizon.

    Over a single periodic orbit the monodromy trace decides at once: |trace| <= 2
    admits no invariant cone. When an exponent profile is supplied, block lengths
    whose growth rules out a certificate are skipped without a search.

    Args:
        cocycle (LocallyConstantCocycle): The cocycle
        horizon (int, optional): Largest block length tried. Defaults to config 'spectrum.horizon'.
        margin (float, optional): Angular margin and expansion slack. Defaults to config.
        budget (int, optional): Matrix-step budget per block length. Defaults to config 'general.budget'.
        max_sweeps (int, optional): Tightening sweeps per block length. Defaults to config.
        initial_half_width (float, optional): Starting cone half-width. Defaults to config.
        angle_tol (float, optional): Convergence tolerance of the sweeps. Defaults to config.
        profile (ExponentProfile, optional): Exact exponent extrema used to skip block lengths.
            Defaults to None.

    Returns:
        UHCertificate or UHRefusal
    """
    horizon = default_value('spectrum.horizon') if horizon is None else horizon
    margin = default_value('hyperbolicity.margin') if margin is None else margin
    max_sweeps = default_value('hyperbolicity.max_sweeps') if max_sweeps is None else max_sweeps
    if initial_half_width is None:
        initial_half_width = default_value('hyperbolicity.initial_half_width')
    angle_tol = default_value('hyperbolicity.angle_tol') if angle_tol is None else angle_tol

    log_trace = _periodic_log_trace(cocycle)
    if log_trace is not None and log_trace <= math.log(2.0):
        return UHRefusal(ELLIPTIC_MONODROMY, [],
                         f"periodic monodromy has |trace| = {math.exp(log_trace):.12g} <= 2")

    tried = []
    block_length = 1
    while block_length <= horizon:
        if profile is not None and not _growth_allows(profile, block_length, margin):
            block_length *= 2
            continue
        try:
            data = _block_data(cocycle, block_length, budget)
        except BudgetExceededError as e:
            return UHRefusal(BUDGET, tried, str(e))
        tried.append(block_length)
        # every cone vector must grow, so the block norm must already exceed 1 + margin
        norms = data.scale + matrices.log_norm(data.normalized)
        if norms.min() >= math.log1p(margin):
            for half_width in _half_widths(initial_half_width, margin):
                found = _search_cones(cocycle, data, margin, max_sweeps, half_width, angle_tol)
                if found is not None:
                    break
            if found is not None:
                centers, half_widths, min_log_expansion, sweeps = found
                certificate = UHCertificate(
                    block_length=block_length,
                    radius=cocycle.radius,
                    margin=margin,
                    cones={w: (float(c), float(h)) for w, c, h in zip(cocycle.windows, centers, half_widths)},
                    min_log_expansion=min_log_expansion,
                    sweeps=sweeps,
                    word_count=len(data.words),
                )
                logger.debug(f"UH certificate at N={block_length}, L >= {certificate.lower_bound:.6f}")
                return certificate
        block_length *= 2
    return UHRefusal(NO_INVARIANT_CONE, tried, f"no invariant cone family up to N={horizon}")


def verify_certificate(cocycle: LocallyConstantCocycle, certificate: UHCertificate, budget=None):
    """
    Replay a certificate: cone invariance with margin and expansion >= 1 + margin.
    """
    if certificate.radius != cocycle.radius:
        return False
    try:
        centers = np.array([certificate.cones[w][0] for w in cocycle.windows])
        half_widths = np.array([certificate.cones[w][1] for w in cocycle.windows])
    except KeyError:
        return False
    data = _block_data(cocycle, certificate.block_length, budget)
    inside, log_expansion = _check_cones(data, centers, half_widths, certificate.margin)
    return inside and float(log_expansion.min()) >= math.log1p(certificate.margin)


# ----------------------------------------------------------------------
# Splitting
# ----------------------------------------------------------------------
@dataclass
class SplittingSample:
    """Unstable/stable directions along consecutive orbit points."""

    positions: np.ndarray
    unstable: np.ndarray
    stable: np.ndarray
    residuals: np.ndarray
    constant: float
    rate: float
    transversality: float

    @property
    def max_residual(self):
        return float(self.residuals.max()) if self.residuals.size else 0.0

    def to_dict(self):
        return {
            "positions": self.positions.tolist(),
            "unstable": self.unstable.tolist(),
            "stable": self.stable.tolist(),
            "residuals": self.residuals.tolist(),
            "C": self.constant,
            "lambda": self.rate,
            "transversality": self.transversality,
        }


def _weakest_input_angle(normalized):
    return matrices.wrap_angle(matrices.right_singular_angle(normalized) + np.pi / 2)


def extract_splitting(cocycle, configuration, n, samples=8, start=None, gap_tol=None, angle_tol=None):
    """
    Approximate u(omega), s(omega) at `samples` consecutive orbit points.

    s is the most contracted input direction of A_n(omega), u the most
    contracted input direction of A_{-n}(omega). The equivariance residual
    is the angle between A(omega) u(omega) and u(T omega); (C, lambda) are
    fitted to log ||A_k(omega) s(omega)|| over k <= n/2.

    Raises:
        DegenerateSingularValuesError: If some A_n has sigma_max - sigma_min < gap_tol
            or u and s are not transversal
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    gap_tol = default_value('hyperbolicity.gap_tol') if gap_tol is None else gap_tol
    angle_tol = default_value('hyperbolicity.angle_tol') if angle_tol is None else angle_tol
    r = cocycle.radius
    first = n + r if start is None else start
    positions = np.arange(first, first + samples + 1)

    unstable, stable = [], []
    for j in positions:
        forward, scale = iterate_scaled(cocycle, configuration, int(j), n)
        log_sigma = scale + float(matrices.log_norm(forward))
        gap = 2.0 * math.sinh(min(log_sigma, 700.0))
        if gap < gap_tol:
            raise DegenerateSingularValuesError(
                f"Singular gap {gap:.3e} of A_{n} at position {j} is below gap_tol {gap_tol}"
            )
        backward, _ = iterate_scaled(cocycle, configuration, int(j), -n)
        stable.append(float(_weakest_input_angle(forward)))
        unstable.append(float(_weakest_input_angle(backward)))
    unstable = np.array(unstable)
    stable = np.array(stable)

    transversality = float(matrices.angular_distance(unstable, stable).min())
    if transversality <= angle_tol:
        raise DegenerateSingularValuesError(f"u and s are not transversal (angle {transversality:.3e})")

    steps = cocycle.factors(configuration[positions[0] - r:positions[-1] + r + 1])
    images = matrices.act(steps[:-1], unstable[:-1])
    residuals = matrices.angular_distance(images, unstable[1:])

    # decay of the stable direction along the first sample point
    horizon = max(1, n // 2)
    forward_steps = cocycle.factors(configuration[positions[0] - r:positions[0] + horizon + r])
    vector = matrices.unit(stable[0])
    log_lengths = np.empty(horizon)
    total = 0.0
    for k in range(horizon):
        vector = forward_steps[k] @ vector
        length = float(np.hypot(vector[0], vector[1]))
        total += math.log(length)
        vector = vector / length
        log_lengths[k] = total
    ks = np.arange(1, horizon + 1)
    if horizon >= 2:
        slope, _ = np.polyfit(ks, log_lengths, 1)
    else:
        slope = log_lengths[0]
    rate = math.exp(-slope)
    constant = float(np.exp(np.max(log_lengths + ks * math.log(rate))))
    constant = max(constant, 1.0)

    return SplittingSample(positions[:-1], unstable[:-1], stable[:-1], residuals, constant, rate, transversality)


# ----------------------------------------------------------------------
# Diagonal cocycles and the UH1/UH3 probe
# ----------------------------------------------------------------------
def diagonal_cocycle(f, subshift):
    """
    A(omega) = diag(exp f(omega), exp -f(omega)) for f >= 1.

    The exponent of A_n is exactly the Birkhoff average of f.
    """
    values = f.table(subshift)
    low = {w: v for w, v in values.items() if v < 1.0}
    if low:
        window, value = sorted(low.items())[0]
        raise ValueError(f"diagonal_cocycle needs f >= 1; f('{window}') = {value}")
    table = {w: np.diag([math.exp(v), math.exp(-v)]) for w, v in values.items()}
    return LocallyConstantCocycle(subshift, f.radius, table, name="diagonal")


@dataclass
class SpreadReport:
    """Sup/min exponent pairs along horizons."""

    horizons: List[int]
    sup: List[float]
    inf: List[float]

    @property
    def spreads(self):
        return [hi - lo for hi, lo in zip(self.sup, self.inf)]

    @property
    def nonincreasing(self):
        s = self.spreads
        return all(b <= a + 1e-12 for a, b in zip(s, s[1:]))

    @property
    def shrink_ratio(self):
        """spread at the last horizon over spread at the first (0 when both vanish)."""
        s = self.spreads
        if s[0] <= 0.0:
            return 0.0 if s[-1] <= 0.0 else math.inf
        return s[-1] / s[0]

    def to_dict(self):
        return {
            "horizons": list(self.horizons),
            "sup": list(self.sup),
            "inf": list(self.inf),
            "spreads": self.spreads,
            "nonincreasing": self.nonincreasing,
            "shrink_ratio": self.shrink_ratio,
        }


def uh1_vs_uh3_probe(cocycle, horizons, budget=None):
    """
    Exact (sup, min) of the finite-scale exponent over Omega at each horizon.
    """
    horizons = [int(h) for h in horizons]
    if not horizons or horizons != sorted(horizons):
        raise ValueError("horizons must be nonempty and ascending")
    profile = exponent_profile(cocycle, horizons[-1], budget=budget)
    return SpreadReport(
        horizons=horizons,
        sup=[profile.sup_at(h) for h in horizons],
        inf=[profile.inf_at(h) for h in horizons],
    )
