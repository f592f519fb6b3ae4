"""
Uniformity Module

Finite-scale uniformity machinery for SL(2,R) cocycles: upper-bound
propagation from a single scale, window checks and the step bound for
consecutive exponents, the Var_n functional of a family over an energy grid,
the per-energy W_epsilon classification, and the Avalanche-Principle band
certificate with its openness probe.

Every verdict here is a finite-scale statement; sup over Omega is exact
(factor enumeration) while sup over energies is a max over a finite grid.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.analysis.hyperbolicity import certify_uh
from src.cocycles import matrices
from src.cocycles.cocycle import (
    CocycleFamily,
    LocallyConstantCocycle,
    exponent_profile,
    sup_exponent_exact,
)
from src.dynamics.subshift import factor_set, frequency_table
from src.processing.batch_processor import BatchProcessor
from src.utils.configuration import default_value
from src.utils.exceptions import BudgetExceededError, InsufficientConfigurationError

logger = logging.getLogger("uniformity")

UH = "uh"
SMALL = "small"
FAIL = "fail"

# Uniformity verdicts, strongest first
UH_CERTIFIED = "uh-certified"
SMALL_EXPONENT = "small-exponent"
UNIFORM = "uniform"
UNDECIDED = "undecided"


def propagate_upper_bound(k: int, M: float, L: float, c_max: float) -> int:
    """
    N = ceil(2 k c_max / (L - M)) such that (1/n) log ||A_n|| < L for all n >= N,
    given (1/k) log ||A_k|| <= M everywhere.

    Args:
        k (int): Scale at which M was measured (>= 1)
        M (float): Sup of the exponent at scale k
        L (float): Target bound, L > M
        c_max (float): max over windows of log ||A(window)|| (>= 0)

    Returns:
        int: N
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not M < L:
        raise ValueError(f"propagate_upper_bound needs M < L, got M={M}, L={L}")
    if c_max < 0:
        raise ValueError(f"c_max must be >= 0, got {c_max}")
    return int(math.ceil(2.0 * k * c_max / (L - M)))


def window_check(cocycle: LocallyConstantCocycle, N: int, L: float, budget=None, profile=None) -> bool:
    """
    True iff sup_exponent_exact(cocycle, k) < L for every k in [N, 2N].

    A precomputed exponent_profile covering 2N may be passed to avoid re-enumeration.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if profile is None or len(profile.sup) < 2 * N:
        profile = exponent_profile(cocycle, 2 * N, budget=budget)
    return bool(np.all(profile.sup[N - 1:2 * N] < L))


def step_bound_residual(cocycle: LocallyConstantCocycle, configuration: str, n: int, start=None):
    """
    (lhs, rhs) of the step bound between consecutive scales.

    lhs = |a_{n+1} - a_n| and rhs = a_n/(n+1) + c/(n+1), with
    a_n = log ||A_n(omega)|| / n and c = max over windows of log ||A^{+-1}||.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    r = cocycle.radius
    start = r if start is None else start
    factors = cocycle.factors(configuration[start - r:start + n + 1 + r])
    if len(factors) < n + 1:
        raise InsufficientConfigurationError(start + n + 1 + r, len(configuration))
    log_norms, _ = matrices.accumulate(factors[:n + 1])
    a_n = log_norms[n - 1] / n
    a_next = log_norms[n] / (n + 1)
    c = cocycle.c_max
    return float(abs(a_next - a_n)), float(a_n / (n + 1) + c / (n + 1))


# ----------------------------------------------------------------------
# Var_n and the uniformity verdict
# ----------------------------------------------------------------------
def _resolve_jobs(n_jobs):
    return 1 if n_jobs is None else n_jobs


def _spread_at(family, n, budget, energy):
    extrema = sup_exponent_exact(family.at(energy), n, budget=budget)
    return n * (extrema.maximum - extrema.minimum)


def var_n(family: CocycleFamily, grid, n: int, n_jobs=1, budget=None) -> float:
    """
    max over grid energies of (max - min) over Omega of log ||A_n(E, .)||.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("Energy grid must be nonempty")
    processor = BatchProcessor(_resolve_jobs(n_jobs), soft_errors=(), desc=f"Var_{n}")
    spreads = processor.map_values(_Partial(_spread_at, family, n, budget), list(grid))
    return float(max(spreads))


class _Partial:
    """Picklable partial application for joblib workers."""

    def __init__(self, fn, *args):
        self.fn = fn
        self.args = args

    def __call__(self, item):
        return self.fn(*self.args, item)


@dataclass
class UniformityReport:
    """Traces of a family over an energy grid plus a finite-scale verdict."""

    horizons: List[int]
    sup_exponent: List[float]
    min_exponent: List[float]
    var_over_n: List[float]
    verdict: str
    epsilon: float
    grid: List[float]
    mean_exponent: List[float] = field(default_factory=list)
    band: Optional[tuple] = None
    parameters: Dict = field(default_factory=dict)
    L: Optional[float] = None

    def to_rows(self):
        return [
            {"n": n, "sup_exp": s, "min_exp": m, "var_over_n": v}
            for n, s, m, v in zip(self.horizons, self.sup_exponent, self.min_exponent, self.var_over_n)
        ]

    def to_dict(self):
        return {
            "horizons": list(self.horizons),
            "sup_exponent": list(self.sup_exponent),
            "min_exponent": list(self.min_exponent),
            "var_over_n": list(self.var_over_n),
            "verdict": self.verdict,
            "epsilon": self.epsilon,
            "grid": {"points": len(self.grid), "min": min(self.grid), "max": max(self.grid)},
            "mean_exponent": list(self.mean_exponent),
            "band": list(self.band) if self.band else None,
            "L": self.L,
            "parameters": self.parameters,
        }


def _energy_traces(family, horizons, weights, budget, energy):
    """Per-scale sup/min exponents at one energy and the frequency-weighted mean at the top scale."""
    cocycle = family.at(energy)
    n_max = horizons[-1]
    profile = exponent_profile(cocycle, n_max, budget=budget)
    sup = [profile.sup_at(n) for n in horizons]
    inf = [profile.inf_at(n) for n in horizons]
    mean = float(np.dot(weights, profile.last)) if weights is not None else float("nan")
    return sup, inf, mean


def _all_certified(family, grid, inf_top, horizon, budget, margin):
    """Cone certificates at every grid energy, weakest energies first so a refusal comes early."""
    for index in np.argsort(inf_top, kind="stable"):
        if not certify_uh(family.at(grid[index]), horizon=horizon, margin=margin, budget=budget).certified:
            return False
    return True


def uniformity_verdict(family: CocycleFamily, grid, horizons=None, epsilon=None, n_jobs=1,
                       budget=None, sample_length=None, margin=None) -> UniformityReport:
    """
    Var_n/n traces over the grid plus a finite-scale verdict.

    Verdicts, strongest first:

    - uh-certified: a cone certificate exists at every grid energy (block lengths up to the top horizon)
    - small-exponent: the sup exponent at the top horizon is below epsilon at every grid energy
    - uniform: the minimum over horizons of Var_n/n is below epsilon; L is the largest
      L_mu proxy over the grid and band = (L(1 - 44 epsilon), L(1 + epsilon))
    - undecided: none of the above

    Args:
        family (CocycleFamily): Family over an energy interval
        grid (array-like): Energies
        horizons (list of int, optional): Ascending scales. Defaults to config 'uniformity.horizons'.
        epsilon (float, optional): Threshold. Defaults to config 'uniformity.epsilon'.
        n_jobs (int, optional): Worker processes. Defaults to 1.
        budget (int, optional): Matrix-step budget per energy. Defaults to config.
        sample_length (int, optional): Orbit length behind the L_mu proxy. Defaults to config.
        margin (float, optional): Cone margin of the certificate attempt. Defaults to config.

    Returns:
        UniformityReport: verdict one of the four above, never a proof
    """
    horizons = default_value('uniformity.horizons') if horizons is None else horizons
    horizons = [int(h) for h in horizons]
    if not horizons or horizons != sorted(horizons):
        raise ValueError("horizons must be nonempty and ascending")
    epsilon = default_value('uniformity.epsilon') if epsilon is None else epsilon
    grid = [float(e) for e in grid]
    if not grid:
        raise ValueError("Energy grid must be nonempty")
    if sample_length is None:
        sample_length = default_value('uniformity.sample_length')

    n_max = horizons[-1]
    length = n_max + 2 * family.radius
    table = frequency_table(family.subshift, length, sample_length)
    words = factor_set(family.subshift, length).words
    weights = np.array([table.entries[w] for w in words])
    weights = weights / weights.sum() if weights.sum() > 0 else None

    processor = BatchProcessor(_resolve_jobs(n_jobs), soft_errors=(), desc="Uniformity")
    traces = processor.map_values(_Partial(_energy_traces, family, horizons, weights, budget), grid)

    sup = np.array([t[0] for t in traces])
    inf = np.array([t[1] for t in traces])
    var_over_n = (sup - inf).max(axis=0)
    means = np.array([t[2] for t in traces])

    L, band = None, None
    if _all_certified(family, grid, inf[:, -1], n_max, budget, margin):
        verdict = UH_CERTIFIED
    elif sup[:, -1].max() < epsilon:
        verdict = SMALL_EXPONENT
    elif var_over_n.min() < epsilon:
        verdict = UNIFORM
        L = float(np.nanmax(means)) if np.isfinite(means).any() else float(sup[:, -1].max())
        band = (L * (1.0 - 44.0 * epsilon), L * (1.0 + epsilon))
    else:
        verdict = UNDECIDED
    logger.info(f"Uniformity verdict: {verdict} (min Var_n/n = {var_over_n.min():.6f}, epsilon = {epsilon})")
    return UniformityReport(
        horizons=horizons,
        sup_exponent=[float(x) for x in sup.max(axis=0)],
        min_exponent=[float(x) for x in inf.min(axis=0)],
        var_over_n=[float(x) for x in var_over_n],
        verdict=verdict,
        epsilon=epsilon,
        grid=grid,
        mean_exponent=[float(m) for m in means],
        band=band,
        parameters={"sample_length": sample_length, "grid_points": len(grid), "kind": family.kind},
        L=L,
    )


# ----------------------------------------------------------------------
# W_epsilon classification
# ----------------------------------------------------------------------
@dataclass
class EnergyClassification:
    """Per-energy outcome of the W_epsilon test."""

    energy: float
    status: str
    k: Optional[int] = None
    method: str = ""
    exponent: float = 0.0
    certificate: Optional[object] = None
    flags: List[str] = field(default_factory=list)

    @property
    def certificate_id(self):
        return self.certificate.certificate_id if self.certificate is not None else ""

    def to_dict(self):
        return {
            "energy": self.energy,
            "status": self.status,
            "k": self.k,
            "method": self.method,
            "exponent": self.exponent,
            "certificate": self.certificate.to_dict() if self.certificate is not None else None,
            "flags": list(self.flags),
        }


def classify_cocycle(cocycle, epsilon, horizon, energy=0.0, budget=None, margin=None):
    """
    UH certificate first; then a window check over doubling N; then the single-scale
    propagation route; otherwise 'fail'.
    """
    profile = exponent_profile(cocycle, horizon, budget=budget)
    certificate = certify_uh(cocycle, horizon=horizon, margin=margin, budget=budget, profile=profile)
    top = profile.sup_at(horizon)
    if certificate.certified:
        return EnergyClassification(energy, UH, certificate.block_length, "cone", top, certificate)

    N = 1
    while 2 * N <= horizon:
        if window_check(cocycle, N, epsilon, profile=profile):
            return EnergyClassification(energy, SMALL, N, "window", top)
        N *= 2

    c_max = cocycle.c_max
    best = None
    for k in range(1, horizon + 1):
        M = profile.sup_at(k)
        if M < epsilon:
            candidate = propagate_upper_bound(k, M, epsilon, c_max)
            if best is None or candidate < best:
                best = candidate
    if best is not None:
        return EnergyClassification(energy, SMALL, best, "propagation", top)
    return EnergyClassification(energy, FAIL, None, "", top)


def _classify_energy(family, epsilon, horizon, budget, margin, energy):
    return classify_cocycle(family.at(energy), epsilon, horizon, energy, budget, margin)


def budget_fallback(energies):
    """Fallback for BatchProcessor.map_values: an energy over budget becomes a flagged 'fail'."""
    def fallback(outcome):
        return EnergyClassification(energies[outcome['index']], FAIL, flags=["budget"])
    return fallback


def w_epsilon_test(family: CocycleFamily, grid, epsilon, horizon=None, n_jobs=1, budget=None,
                   margin=None) -> List[EnergyClassification]:
    """
    Classify every grid energy as uh-certified, exponent < epsilon from k on, or fail.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    horizon = default_value('spectrum.horizon') if horizon is None else int(horizon)
    energies = [float(e) for e in grid]
    processor = BatchProcessor(_resolve_jobs(n_jobs), soft_errors=(BudgetExceededError,), desc="W_epsilon")
    return processor.map_values(
        _Partial(_classify_energy, family, epsilon, horizon, budget, margin),
        energies,
        fallback=budget_fallback(energies),
    )


def passes_w_epsilon(classifications):
    return all(c.status in (UH, SMALL) for c in classifications)


# ----------------------------------------------------------------------
# Avalanche certificate
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class AvalancheParams:
    """Avalanche-Principle constants; configurable placeholders, not derived values."""

    kappa: float = 20.0
    lambda0: float = 10.0

    def __post_init__(self):
        if self.kappa <= 0 or self.lambda0 <= 0:
            raise ValueError(f"kappa and lambda0 must be positive, got {self.kappa}, {self.lambda0}")

    @classmethod
    def from_config(cls, config=None):
        if config is None:
            return cls(default_value('uniformity.kappa'), default_value('uniformity.lambda0'))
        return cls(config.get_config_value('uniformity.kappa'), config.get_config_value('uniformity.lambda0'))


def minimal_block_length(L, epsilon, params=None):
    """Smallest block length satisfying the two arithmetic conditions (a3) and (a4)."""
    params = params or AvalancheParams()
    if L <= 0 or epsilon <= 0:
        raise ValueError("L and epsilon must be positive")
    ell = max(1, math.ceil(params.lambda0 / (0.75 * L)))
    while 0.75 * L * ell < params.lambda0:
        ell += 1
    while 2.0 * params.kappa / (ell * math.exp(params.lambda0)) >= epsilon * L:
        ell = max(ell + 1, math.ceil(2.0 * params.kappa / (math.exp(params.lambda0) * epsilon * L)))
    return ell


@dataclass
class AvalancheCertificate:
    """Band [L(1-44 eps), L(1+eps)] for every n >= ell, relative to (kappa, lambda0)."""

    L: float
    ell: int
    epsilon: float
    params: AvalancheParams
    validation_horizon: int
    validated: bool

    certified = True

    @property
    def band(self):
        return (self.L * (1.0 - 44.0 * self.epsilon), self.L * (1.0 + self.epsilon))

    def to_dict(self):
        return {
            "L": self.L,
            "ell": self.ell,
            "epsilon": self.epsilon,
            "kappa": self.params.kappa,
            "lambda0": self.params.lambda0,
            "validation_horizon": self.validation_horizon,
            "validated": self.validated,
            "band": list(self.band),
            "parameter_relative": True,
        }


@dataclass
class AvalancheRefusal:
    """First violated condition among a1..a4."""

    condition: str
    detail: str

    certified = False

    def to_dict(self):
        return {"condition": self.condition, "detail": self.detail}


def avalanche_check(cocycle, L, ell, epsilon, params=None, validation_horizon=None, budget=None):
    """
    Check (a1) on n in [ell, H], (a2) exactly at 2 ell, (a3) and (a4) arithmetically.

    Args:
        cocycle (LocallyConstantCocycle): The cocycle
        L (float): Candidate exponent (> 0)
        ell (int): Block length (>= 1)
        epsilon (float): 0 < epsilon < 1/12
        params (AvalancheParams, optional): kappa, lambda0. Defaults to config.
        validation_horizon (int, optional): H. Defaults to 4096.
        budget (int, optional): Matrix-step budget. Defaults to config.

    Returns:
        AvalancheCertificate or AvalancheRefusal
    """
    if not 0.0 < epsilon < 1.0 / 12.0:
        raise ValueError(f"epsilon must lie in (0, 1/12), got {epsilon}")
    if L <= 0 or ell < 1:
        raise ValueError(f"Need L > 0 and ell >= 1, got L={L}, ell={ell}")
    params = params or AvalancheParams.from_config()
    horizon = max(2 * ell, 4096 if validation_horizon is None else int(validation_horizon))
    profile = exponent_profile(cocycle, horizon, budget=budget)

    upper = L * (1.0 + epsilon)
    worst = float(profile.sup[ell - 1:].max())
    if worst > upper:
        return AvalancheRefusal("a1", f"exponent {worst:.6f} exceeds L(1+eps) = {upper:.6f} on [{ell}, {horizon}]")
    lowest = profile.inf_at(2 * ell)
    if lowest < L * (1.0 - epsilon):
        return AvalancheRefusal("a2", f"min exponent {lowest:.6f} at 2 ell below L(1-eps) = {L * (1 - epsilon):.6f}")
    if 0.75 * L * ell < params.lambda0:
        return AvalancheRefusal("a3", f"(3/4) L ell = {0.75 * L * ell:.6f} < lambda0 = {params.lambda0}")
    slack = 2.0 * params.kappa / (ell * math.exp(params.lambda0))
    if slack >= epsilon * L:
        return AvalancheRefusal("a4", f"2 kappa / (ell exp(lambda0)) = {slack:.3e} >= eps L = {epsilon * L:.3e}")

    certificate = AvalancheCertificate(L, ell, epsilon, params, horizon, False)
    lo, hi = certificate.band
    window_sup = profile.sup[ell - 1:]
    window_inf = profile.inf[ell - 1:]
    certificate.validated = bool(np.all(window_inf >= lo) and np.all(window_sup <= hi))
    if not certificate.validated:
        logger.warning("Avalanche band failed empirical validation")
    return certificate


@dataclass
class OpennessReport:
    passed: bool
    passes: int
    trials: int
    perturbation_size: float
    epsilon_prime: float

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return {
            "passed": self.passed,
            "passes": self.passes,
            "trials": self.trials,
            "perturbation_size": self.perturbation_size,
            "epsilon_prime": self.epsilon_prime,
        }


def perturb_cocycle(cocycle, size, rng):
    """Entrywise uniform perturbation of every table entry, renormalized to det 1."""
    noise = rng.uniform(-size, size, size=cocycle.stack.shape)
    stack, _ = matrices.normalize_determinant(cocycle.stack + noise, cocycle.det_tol, labels=cocycle.windows)
    return cocycle.with_stack(stack, name=f"{cocycle.name}+noise")


def openness_probe(cocycle, L, ell, epsilon, epsilon_prime, perturbation_size, trials, seed=None,
                   params=None, validation_horizon=None, budget=None) -> OpennessReport:
    """
    Re-run avalanche_check at epsilon' on `trials` seeded perturbations of size delta.
    """
    if not epsilon < epsilon_prime < 1.0 / 12.0:
        raise ValueError(f"Need epsilon < epsilon' < 1/12, got {epsilon}, {epsilon_prime}")
    seed = default_value('general.seed') if seed is None else seed
    base = avalanche_check(cocycle, L, ell, epsilon, params, validation_horizon, budget)
    if not base.certified:
        return OpennessReport(False, 0, trials, perturbation_size, epsilon_prime)

    passes = 0
    for child in np.random.SeedSequence(seed).spawn(trials):
        perturbed = perturb_cocycle(cocycle, perturbation_size, np.random.default_rng(child))
        if avalanche_check(perturbed, L, ell, epsilon_prime, params, validation_horizon, budget).certified:
            passes += 1
    return OpennessReport(passes == trials, passes, trials, perturbation_size, epsilon_prime)
