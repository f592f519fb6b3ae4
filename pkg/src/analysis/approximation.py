"""
Approximation Module

Locally constant approximation of sampling functions and cocycle families,
and the iterative construction of a potential with infinitely many values
whose partial sums stay in W_epsilon at every stage.

W_epsilon membership is checked by a finite proxy (finite horizon, finite
energy grid, certificate-or-small-exponent per energy); every construction
log says so.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.analysis.uniformity import _Partial, passes_w_epsilon, w_epsilon_test
from src.cocycles import matrices
from src.cocycles.cocycle import CocycleFamily, LayeredSamplingFunction, SamplingLayer
from src.dynamics.subshift import factor_set
from src.processing.batch_processor import BatchProcessor
from src.utils.configuration import default_value
from src.utils.exceptions import CoverRefinementError, DeterminantError

logger = logging.getLogger("approximation")

PROXY_NOTE = (
    "proxy-certified: W_epsilon membership was checked at a finite horizon on a finite "
    "energy grid, not proved; delta acceptance is a Monte-Carlo surrogate over seeded trials"
)


def discretize_sampling(f: LayeredSamplingFunction, radius: int):
    """
    Drop layers of radius > r.

    Returns:
        tuple: (locally constant f_r, bound on ||f - f_r||_inf)
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    return f.truncated(radius)


# ----------------------------------------------------------------------
# Family approximation
# ----------------------------------------------------------------------
class HatBlend:
    """
    E -> sum_k phi_k(E) B_k with piecewise-linear hats on uniform nodes, renormalized to det 1.
    """

    def __init__(self, nodes, stacks):
        self.nodes = np.asarray(nodes, dtype=float)
        self.stacks = np.asarray(stacks, dtype=float)
        self.logger = logging.getLogger("HatBlend")

    def raw(self, energy):
        """Blend before renormalization; constant outside the node range."""
        e = float(np.clip(energy, self.nodes[0], self.nodes[-1]))
        if self.nodes.size == 1:
            return self.stacks[0].copy()
        i = int(np.searchsorted(self.nodes, e, side="right") - 1)
        i = min(max(i, 0), self.nodes.size - 2)
        t = (e - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i])
        left, right = self.stacks[i], self.stacks[i + 1]
        return left + t * (right - left)

    def __call__(self, energy):
        blended = self.raw(energy)
        dets = matrices.determinant(blended)
        if np.any(dets <= 0.0):
            raise DeterminantError(
                f"Blended matrix at E={energy:g} has determinant {dets.min():.3e} <= 0; refine the cover"
            )
        scale = np.where(dets == 1.0, 1.0, 1.0 / np.sqrt(dets))
        return blended * scale[:, None, None]


@dataclass
class ApproximationReport:
    cover_size: int
    max_error: float
    det_range: tuple
    verification_points: int
    history: List[Dict] = field(default_factory=list)

    def to_dict(self):
        return {
            "cover_size": self.cover_size,
            "max_error": self.max_error,
            "det_range": list(self.det_range),
            "verification_points": self.verification_points,
            "history": self.history,
        }


def _verify(family, blend, energies):
    worst = 0.0
    det_lo, det_hi = np.inf, -np.inf
    for energy in energies:
        exact = family.at(energy).stack
        raw = blend.raw(energy)
        dets = matrices.determinant(raw)
        det_lo, det_hi = min(det_lo, float(dets.min())), max(det_hi, float(dets.max()))
        approx = blend(energy)
        worst = max(worst, float(matrices.spectral_norm(approx - exact).max()))
    return worst, (det_lo, det_hi)


def approximate_family(family: CocycleFamily, epsilon, cover_count=None, max_cover=None,
                       verification_step=None):
    """
    Locally constant (in omega) family within epsilon of `family` on its interval.

    The cover starts at `cover_count` nodes (default 2) and doubles its
    intervals until every point of the verification sample is within epsilon.

    Args:
        family (CocycleFamily): Family over a compact interval J
        epsilon (float): Target sup error (operator norm)
        cover_count (int, optional): Initial node count. Defaults to 2.
        max_cover (int, optional): Largest node count. Defaults to config 'approximation.max_cover'.
        verification_step (float, optional): Spacing of the verification sample. Defaults to config.

    Returns:
        tuple: (CocycleFamily, ApproximationReport)

    Raises:
        CoverRefinementError: If max_cover nodes do not reach epsilon
        DeterminantError: If a blended matrix has nonpositive determinant
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    max_cover = default_value('approximation.max_cover') if max_cover is None else max_cover
    if verification_step is None:
        verification_step = default_value('approximation.verification_step')
    a, b = family.interval
    count = 2 if cover_count is None else max(1, int(cover_count))
    sample = np.append(np.arange(a, b, verification_step), b) if b > a else np.array([a])

    history = []
    while True:
        nodes = np.linspace(a, b, count) if b > a else np.array([a])
        blend = HatBlend(nodes, [family.at(e).stack for e in nodes])
        error, det_range = _verify(family, blend, sample)
        history.append({"cover_size": int(count), "max_error": error})
        logger.debug(f"Cover of {count} nodes: max sampled error {error:.3e}")
        if error <= epsilon:
            break
        if count >= max_cover:
            raise CoverRefinementError(
                f"Cover of {count} nodes leaves sampled error {error:.3e} > {epsilon}"
            )
        count = min(max_cover, 2 * count - 1 if count > 1 else 2)

    approximated = CocycleFamily(
        family.subshift, family.radius, blend, family.interval, kind="approximated",
        metadata={"source": family.kind, "epsilon": epsilon, "cover_size": int(count)},
    )
    report = ApproximationReport(int(count), error, det_range, int(sample.size), history)
    logger.info(f"Approximated {family.kind} family with {count} nodes (error {error:.3e} <= {epsilon})")
    return approximated, report


# ----------------------------------------------------------------------
# Uniform potential construction
# ----------------------------------------------------------------------
@dataclass
class StageRecord:
    stage: int
    epsilon: float
    delta: Optional[float]
    passed: bool
    attempts: List[Dict] = field(default_factory=list)
    partial_sum_passed: Optional[bool] = None
    diagnostic: str = ""

    def to_dict(self):
        return {
            "stage": self.stage,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "passed": self.passed,
            "attempts": self.attempts,
            "partial_sum_passed": self.partial_sum_passed,
            "diagnostic": self.diagnostic,
        }


@dataclass
class ConstructionLog:
    stages: List[StageRecord]
    proxy: Dict
    completed: bool

    @property
    def deltas(self):
        return [s.delta for s in self.stages if s.passed]

    def to_dict(self):
        return {
            "completed": self.completed,
            "delta_schedule": self.deltas,
            "proxy": self.proxy,
            "note": PROXY_NOTE,
            "stages": [s.to_dict() for s in self.stages],
        }


def random_locally_constant(subshift, radius, size, rng):
    """Locally constant function with independent uniform values in [-size, size] per window."""
    words = factor_set(subshift, 2 * radius + 1).words
    values = rng.uniform(-size, size, size=len(words))
    table = tuple((w, float(v)) for w, v in zip(words, values))
    return LayeredSamplingFunction((SamplingLayer(radius, table, 1.0),))


def _proxy_passes(subshift, grid, epsilon, horizon, budget, potential):
    interval = (float(min(grid)), float(max(grid)))
    family = CocycleFamily.schrodinger(potential, subshift, interval)
    classifications = w_epsilon_test(family, grid, epsilon, horizon=horizon, budget=budget)
    failing = [c.energy for c in classifications if c.status not in ("uh", "small")]
    return {"passed": passes_w_epsilon(classifications), "failing": failing}


def construct_uniform_potential(g0: LayeredSamplingFunction, generators, epsilons, subshift, grid,
                                horizon=None, seed=None, trials=None, delta_start=None, delta_min=None,
                                n_jobs=1, budget=None):
    """
    g = g0 + sum_k (delta_k / 2) g_k with each partial sum passing the W_{epsilon_k} proxy.

    Stage k searches delta_k by halving from delta_start (stage 1) or from just
    below delta_{k-1}/2, accepting delta once `trials` seeded random locally
    constant perturbations of the current partial sum with sup norm <= delta
    all pass the proxy. A stage that reaches delta_min without success stops
    the construction and the partial result is returned.

    Args:
        g0 (LayeredSamplingFunction): Finite-layered starting potential
        generators (list of LayeredSamplingFunction): Finite-layered g_k with sup <= 1
        epsilons (list of float): Strictly decreasing positive thresholds
        subshift (SubshiftSpec): Base subshift
        grid (array-like): Proxy energy grid
        horizon (int, optional): Proxy horizon. Defaults to config 'spectrum.horizon'.
        seed (int, optional): Run seed. Defaults to config 'general.seed'.
        trials (int, optional): Perturbation trials per delta. Defaults to config.
        delta_start (float, optional): First delta tried. Defaults to config.
        delta_min (float, optional): Smallest delta tried. Defaults to config.
        n_jobs (int, optional): Worker processes for the trials. Defaults to 1.
        budget (int, optional): Matrix-step budget. Defaults to config.

    Returns:
        tuple: (LayeredSamplingFunction, ConstructionLog)
    """
    generators = list(generators)
    epsilons = [float(e) for e in epsilons]
    if len(generators) != len(epsilons):
        raise ValueError("Need one epsilon per generator")
    if any(e <= 0 for e in epsilons) or any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError(f"epsilons must be positive and strictly decreasing: {epsilons}")
    if not g0.finite or not all(gen.finite for gen in generators):
        raise ValueError("g0 and the generators must be finite-layered")
    horizon = default_value('spectrum.horizon') if horizon is None else int(horizon)
    seed = default_value('general.seed') if seed is None else int(seed)
    trials = default_value('approximation.trials') if trials is None else int(trials)
    delta_start = default_value('approximation.delta_start') if delta_start is None else delta_start
    delta_min = default_value('approximation.delta_min') if delta_min is None else delta_min
    grid = [float(e) for e in grid]

    proxy = {"grid": {"points": len(grid), "min": min(grid), "max": max(grid)}, "horizon": horizon,
             "trials": trials, "seed": seed, "delta_min": delta_min}
    stage_seeds = np.random.SeedSequence(seed).spawn(max(1, len(generators)))
    processor = BatchProcessor(n_jobs, soft_errors=(), desc="Perturbation trials")

    g = g0
    stages = []
    previous = None
    for k, (generator, epsilon) in enumerate(zip(generators, epsilons), start=1):
        rng = np.random.default_rng(stage_seeds[k - 1])
        delta = delta_start if previous is None else np.nextafter(previous / 2.0, 0.0)
        record = StageRecord(k, epsilon, None, False)
        radius = max(g.radius, generator.radius)
        check = _Partial(_proxy_passes, subshift, grid, epsilon, horizon, budget)

        while delta >= delta_min:
            perturbations = [g.plus(random_locally_constant(subshift, radius, delta, rng))
                             for _ in range(trials)]
            outcomes = processor.map_values(check, perturbations)
            passes = sum(o["passed"] for o in outcomes)
            record.attempts.append({"delta": float(delta), "passes": passes, "trials": trials})
            logger.debug(f"Stage {k}: delta {delta:.3e} passed {passes}/{trials} trials")
            if passes == trials:
                break
            delta /= 2.0

        if delta < delta_min:
            record.diagnostic = f"no delta >= {delta_min} passed all {trials} trials"
            stages.append(record)
            logger.warning(f"Construction stopped at stage {k}: {record.diagnostic}")
            return g, ConstructionLog(stages, proxy, False)

        candidate = g if generator.sup_bound == 0.0 else g.plus(generator, scale=delta / 2.0)
        partial = check(candidate)
        record.delta = float(delta)
        record.partial_sum_passed = partial["passed"]
        record.passed = partial["passed"]
        if not partial["passed"]:
            record.diagnostic = f"partial sum fails at energies {partial['failing'][:5]}"
            stages.append(record)
            logger.warning(f"Construction stopped at stage {k}: {record.diagnostic}")
            return g, ConstructionLog(stages, proxy, False)
        stages.append(record)
        g = candidate
        previous = delta
        logger.info(f"Stage {k} accepted: delta = {delta:.6g}, epsilon = {epsilon}")

    return g, ConstructionLog(stages, proxy, True)