"""
Cocycle Laboratory Workflow

This module provides the command implementations behind the command-line
interface, integrating all the components of the laboratory:
- Configuration for defaults, JSON config files and environment overrides
- DataManager for loading inputs and emitting CSV/JSON results
- ResultValidator for checking results before emission
- the analysis modules for the numerics

Example usage:
    workflow = CocycleLabWorkflow(Configuration("configs/fib.json"), output_dir="results")
    workflow.run("spectrum")
"""

import logging
import platform
import time
from importlib import metadata

import numpy as np
import pandas as pd

from src.analysis import approximation, hyperbolicity, spectrum, uniformity
from src.cocycles import cocycle as cocycles
from src.data.data_manager import DataManager
from src.dynamics import subshift as subshifts
from src.utils import visualization
from src.utils.configuration import detect_environment
from src.utils.exceptions import (
    ConfigurationError,
    CoverRefinementError,
    DegenerateSingularValuesError,
    DeterminantError,
)
from src.validation.result_validator import ResultValidator

COMMANDS = ("subshift", "exponent", "uh", "avalanche", "spectrum", "approximate", "construct")
PACKAGES = ("numpy", "scipy", "pandas", "matplotlib", "joblib", "tqdm", "psutil")
COCYCLE_KINDS = ("schrodinger", "constant", "table", "diagonal", "rotation")
# Faults of the numerics rather than the inputs; recorded in the manifest, not fatal
NUMERICAL_FAULTS = (DegenerateSingularValuesError, DeterminantError, CoverRefinementError)


def package_versions():
    versions = {}
    for name in PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    versions["python"] = platform.python_version()
    return versions


class CocycleLabWorkflow:
    """
    Complete workflow for one laboratory command.

    Each command reads the resolved configuration, runs the analysis and
    writes its CSV/JSON outputs plus a `run.json` manifest into the output
    directory.
    """

    def __init__(self, config, output_dir="results", threads=None, plot=False, verbose=False,
                 options=None):
        """
        Initialize the workflow.

        Args:
            config (Configuration): Resolved configuration
            output_dir (str or Path): Directory for output files
            threads (int, optional): Worker processes. Defaults to the configured value.
            plot (bool, optional): Whether to write PNG figures. Defaults to False.
            verbose (bool, optional): Whether to show progress bars. Defaults to False.
            options (dict, optional): Command-specific command-line options. Defaults to None.
        """
        self.config = config
        self.threads = threads or config.resolved_threads()
        self.plot = plot
        self.verbose = verbose
        self.options = options or {}
        self.data_manager = DataManager(output_dir)
        self.result_validator = ResultValidator(verbose=verbose)
        self.soft_failures = []
        self.logger = logging.getLogger("CocycleLabWorkflow")

    # ------------------------------------------------------------------
    # Inputs
    # ------------------------------------------------------------------
    def value(self, key, default=None):
        return self.config.get_config_value(key, default)

    @property
    def budget(self):
        return int(self.value('general.budget'))

    @property
    def seed(self):
        return int(self.value('general.seed'))

    def load_subshift(self):
        return self.data_manager.load_subshift(self.value('subshift'))

    def load_potential(self, key='potential'):
        return self.data_manager.load_sampling(self.value(key))

    def energy_grid(self):
        """Energies from the 'energies' section: {min, max} plus step or points."""
        section = self.value('energies', {}) or {}
        a, b = float(section.get('min', -3.0)), float(section.get('max', 3.0))
        if 'step' in section:
            return spectrum.EnergyGrid.from_step(a, b, float(section['step']))
        return spectrum.EnergyGrid.from_count(a, b, int(section.get('points', self.value('uniformity.grid_points'))))

    def load_cocycle(self, subshift):
        """
        The single cocycle of the 'cocycle' section.

        Kinds: schrodinger (potential at cocycle.energy), constant (cocycle.matrix),
        table (cocycle.radius plus cocycle.table of window -> 4 entries),
        diagonal (diag(exp f, exp -f) of the potential), rotation (angle cocycle.energy).
        """
        kind = self.value('cocycle.kind', 'schrodinger')
        energy = float(self.value('cocycle.energy', 0.0))
        if kind == 'schrodinger':
            return cocycles.schrodinger(self.load_potential(), energy, subshift)
        if kind == 'constant':
            matrix = self.value('cocycle.matrix')
            if matrix is None or len(matrix) != 4:
                raise ConfigurationError("cocycle.matrix must list four entries [a, b, c, d]")
            return cocycles.LocallyConstantCocycle.constant(subshift, np.reshape(matrix, (2, 2)))
        if kind == 'table':
            return cocycles.LocallyConstantCocycle.from_dict({
                "subshift": subshift.to_dict(),
                "radius": self.value('cocycle.radius', 0),
                "table": self.value('cocycle.table', {}),
            })
        if kind == 'diagonal':
            return hyperbolicity.diagonal_cocycle(self.load_potential(), subshift)
        if kind == 'rotation':
            return cocycles.CocycleFamily.rotation(subshift, (energy, energy)).at(energy)
        raise ConfigurationError(f"Unknown cocycle kind '{kind}' (expected one of {COCYCLE_KINDS})")

    def load_family(self, subshift, interval):
        kind = self.value('cocycle.kind', 'schrodinger')
        if kind == 'schrodinger':
            return cocycles.CocycleFamily.schrodinger(self.load_potential(), subshift, interval)
        if kind == 'rotation':
            return cocycles.CocycleFamily.rotation(subshift, interval)
        return cocycles.CocycleFamily.constant(self.load_cocycle(subshift), interval)

    # ------------------------------------------------------------------
    # Emission
    # ------------------------------------------------------------------
    def save_frame(self, rows, name, columns):
        df = pd.DataFrame(list(rows), columns=columns)
        self.result_validator.validate_frame(df, name=name)
        return self.data_manager.save_csv(df, name)

    def save_json(self, document, name):
        return self.data_manager.save_json(document, name)

    def figure(self, name):
        return self.data_manager.path(name) if self.plot else None

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------
    def run(self, command):
        """
        Run one command and write its manifest.

        Args:
            command (str): One of COMMANDS

        Returns:
            dict: The run manifest
        """
        if command not in COMMANDS:
            raise ConfigurationError(f"Unknown command '{command}'")
        self.logger.info(f"Starting command '{command}'")
        start_time = time.time()
        # library defaults read the resolved configuration while the command runs
        with self.config.activated():
            try:
                results = getattr(self, f"run_{command}")()
            except NUMERICAL_FAULTS as e:
                self.logger.warning(f"Command '{command}' stopped on a numerical fault: {e}")
                self.soft_failures.append({"item": command, "error": f"{type(e).__name__}: {e}"})
                results = {"failed": type(e).__name__}
        execution_time = time.time() - start_time

        manifest = {
            "command": command,
            "options": self.options,
            "config": self.config.config,
            "seed": self.seed,
            "threads": self.threads,
            "versions": package_versions(),
            "environment": detect_environment(),
            "wall_time": execution_time,
            "soft_failures": self.soft_failures,
            "validation": self.result_validator.generate_validation_report(),
            "outputs": sorted(set(self.data_manager.written)),
            "summary": results,
        }
        self.save_json(manifest, "run.json")
        self.logger.info(f"Command '{command}' completed in {execution_time:.2f} seconds")
        return manifest

    def run_subshift(self):
        """Prefix, factors with complexity, frequencies and the Boshernitzan profile."""
        spec = self.load_subshift()
        summary = {"subshift": spec.to_dict()}
        sample_length = int(self.options.get('sample_length') or self.value('uniformity.sample_length'))

        if self.options.get('prefix'):
            n = int(self.options['prefix'])
            word = subshifts.expand_prefix(spec, n, self.value('subshift.max_length'))
            self.save_frame([{"prefix": word}], "prefix.csv", ["prefix"])
            summary["prefix_length"] = n
        if self.options.get('factors'):
            n = int(self.options['factors'])
            language = subshifts.factor_set(spec, n, self.value('subshift.stabilization_window'),
                                            self.value('subshift.scan_budget'))
            self.save_frame([{"word": w} for w in language.words], "factors.csv", ["word"])
            self.save_frame([{"n": k, "complexity": p} for k, p in subshifts.complexity(spec, n)],
                            "complexity.csv", ["n", "complexity"])
            summary["factors"] = {"n": n, "count": len(language), "exactness": language.exactness}
        if self.options.get('frequencies'):
            n = int(self.options['frequencies'])
            table = subshifts.frequency_table(spec, n, sample_length)
            self.save_frame([{"word": w, "frequency": p} for w, p in sorted(table.entries.items())],
                            "frequencies.csv", ["word", "frequency"])
            summary["frequencies"] = {"n": n, "minimum": table.minimum(), "sample_length": sample_length}
        if self.options.get('boshernitzan'):
            profile = subshifts.boshernitzan_profile(spec, int(self.options['boshernitzan']), sample_length)
            self.save_frame([{"n": n, "eta": eta} for n, eta in profile.entries], "boshernitzan.csv",
                            ["n", "eta"])
            summary["boshernitzan"] = {"limsup_proxy": profile.limsup_proxy,
                                       "satisfies_condition": profile.satisfies_condition,
                                       "exactness": profile.exactness}
        return summary

    def run_exponent(self):
        """Finite-scale exponent traces and Var_n/n over the energy grid."""
        spec = self.load_subshift()
        grid = self.energy_grid()
        family = self.load_family(spec, grid.interval)
        energies = grid.points if family.kind in ('schrodinger', 'rotation') else [0.0]
        report = uniformity.uniformity_verdict(
            family, energies, self.value('uniformity.horizons'), self.value('uniformity.epsilon'),
            n_jobs=self.threads, budget=self.budget, sample_length=self.value('uniformity.sample_length'),
            margin=self.value('hyperbolicity.margin'),
        )
        self.result_validator.validate_trace(report.min_exponent, name="min_exponent")
        self.save_frame(report.to_rows(), "exponents.csv", ["n", "sup_exp", "min_exp", "var_over_n"])
        self.save_frame([{"E": e, "mean_exponent": x} for e, x in zip(energies, report.mean_exponent)],
                        "mean_exponent.csv", ["E", "mean_exponent"])
        self.save_json(report.to_dict(), "uniformity.json")
        if self.plot:
            visualization.plot_exponent_traces(report.horizons, report.sup_exponent, report.min_exponent,
                                               report.var_over_n, self.figure("exponents.png"))
        return {"verdict": report.verdict, "min_var_over_n": min(report.var_over_n), "L": report.L,
                "band": list(report.band) if report.band else None}

    def run_uh(self):
        """Cone-field certificate search plus a sampled stable/unstable splitting."""
        spec = self.load_subshift()
        cocycle = self.load_cocycle(spec)
        outcome = hyperbolicity.certify_uh(cocycle, horizon=self.value('spectrum.horizon'),
                                           margin=self.value('hyperbolicity.margin'), budget=self.budget,
                                           max_sweeps=self.value('hyperbolicity.max_sweeps'),
                                           initial_half_width=self.value('hyperbolicity.initial_half_width'),
                                           angle_tol=self.value('hyperbolicity.angle_tol'))
        document = outcome.to_dict()
        document["certified"] = outcome.certified
        if outcome.certified:
            document["certificate_id"] = outcome.certificate_id
            self.result_validator.validate_certificate(outcome.to_dict(), "uh", name="uh_certificate")
        self.save_json(document, "uh_certificate.json")
        summary = {"certified": outcome.certified}

        n = int(self.value('hyperbolicity.splitting_n', 64))
        samples = int(self.value('hyperbolicity.splitting_samples', 8))
        configuration = subshifts.expand_prefix(spec, 2 * n + samples + 4 * cocycle.radius + 2)
        try:
            split = hyperbolicity.extract_splitting(cocycle, configuration, n, samples,
                                                    gap_tol=self.value('hyperbolicity.gap_tol'),
                                                    angle_tol=self.value('hyperbolicity.angle_tol'))
        except DegenerateSingularValuesError as e:
            self.logger.warning(f"No splitting extracted: {e}")
            self.soft_failures.append({"item": "splitting", "error": str(e)})
            return summary
        rows = [
            {"position": int(p), "unstable": u, "stable": s, "residual": res}
            for p, u, s, res in zip(split.positions, split.unstable, split.stable, split.residuals)
        ]
        self.save_frame(rows, "splitting.csv", ["position", "unstable", "stable", "residual"])
        summary.update({"C": split.constant, "lambda": split.rate, "max_residual": split.max_residual})
        return summary

    def run_avalanche(self):
        """Finite-scale Avalanche Principle certificate, optionally with an openness probe."""
        spec = self.load_subshift()
        cocycle = self.load_cocycle(spec)
        params = uniformity.AvalancheParams.from_config(self.config)
        epsilon = float(self.value('avalanche.epsilon', 0.01))
        validation_horizon = int(self.value('avalanche.validation_horizon', 4096))
        L = self.value('avalanche.L')
        if L is None:
            configuration = subshifts.expand_prefix(spec, validation_horizon + 2 * cocycle.radius)
            L = cocycles.finite_scale_exponent(cocycle, configuration, validation_horizon)
            self.logger.info(f"Candidate exponent from the horizon trace: L = {L:.6f}")
        L = float(L)
        if L <= 0:
            raise ConfigurationError(f"Avalanche check needs a positive exponent, got L = {L}")
        ell = self.value('avalanche.ell') or uniformity.minimal_block_length(L, epsilon, params)
        outcome = uniformity.avalanche_check(cocycle, L, int(ell), epsilon, params, validation_horizon,
                                             self.budget)
        document = {"certified": outcome.certified, "result": outcome.to_dict()}
        if outcome.certified:
            self.result_validator.validate_certificate(outcome.to_dict(), "avalanche",
                                                       name="avalanche_certificate")
        openness = self.value('avalanche.openness')
        if openness and outcome.certified:
            report = uniformity.openness_probe(
                cocycle, L, int(ell), epsilon, float(openness['epsilon_prime']), float(openness['size']),
                int(openness.get('trials', 100)), self.seed, params, validation_horizon, self.budget,
            )
            document["openness"] = report.to_dict()
        self.save_json(document, "avalanche.json")
        return {"certified": outcome.certified, "L": L, "ell": int(ell)}

    def run_spectrum(self):
        """Spectrum scan, periodic approximants and the semicontinuity probe."""
        spec = self.load_subshift()
        f = self.load_potential()
        summary = {}

        if self.value('spectrum.scan', True):
            grid = self.energy_grid()
            estimate = spectrum.scan_spectrum(f, spec, grid, self.value('spectrum.horizon'),
                                              self.value('spectrum.epsilon'), n_jobs=self.threads,
                                              budget=self.budget, margin=self.value('hyperbolicity.margin'),
                                              verbose=self.verbose)
            for energy, flags in zip(estimate.energies, estimate.flags):
                if flags:
                    self.soft_failures.append({"item": f"E={energy:.15g}", "error": ",".join(flags)})
            self.result_validator.validate_intervals(estimate.intervals, estimate.measure, name="bands")
            self.save_frame(estimate.to_rows(), "spectrum.csv", ["E", "class", "exponent", "certificate_id"])
            self.save_frame([{"lo": lo, "hi": hi} for lo, hi in estimate.intervals], "bands.csv", ["lo", "hi"])
            self.save_json(estimate.to_dict(), "spectrum.json")
            if self.plot:
                visualization.plot_classification_strip(estimate.energies, estimate.classes,
                                                        estimate.exponents, self.figure("spectrum.png"))
            summary["measure"] = estimate.measure
            summary["intervals"] = len(estimate.intervals)

        levels = self.options.get('approximants') or self.value('spectrum.approximants')
        if levels:
            sequence = spectrum.approximant_sequence(f, spec, levels, self.value('spectrum.resolution'),
                                                     n_jobs=self.threads)
            rows = []
            for level in sequence:
                self.result_validator.validate_intervals(level.bands.bands, level.measure,
                                                         name=f"approximant_{level.level}")
                rows.extend(level.bands.to_rows(level.level))
            self.save_frame(rows, "approximants.csv", ["k", "band_lo", "band_hi"])
            self.save_frame([{"k": lv.level, "q": lv.period, "measure": lv.measure} for lv in sequence],
                            "approximant_measures.csv", ["k", "q", "measure"])
            if self.plot:
                visualization.plot_band_sets([lv.to_dict() for lv in sequence], self.figure("approximants.png"))
            summary["approximant_measures"] = [lv.measure for lv in sequence]

        probe = self.value('spectrum.semicontinuity')
        if probe:
            g = self.data_manager.load_sampling(probe.get('potential'))
            report = spectrum.semicontinuity_probe(f, g, spec, int(probe.get('level', 5)),
                                                   self.value('spectrum.resolution'))
            self.save_json(report.to_dict(), "semicontinuity.json")
            summary["semicontinuity_holds"] = report.holds
        return summary

    def run_approximate(self):
        """Locally constant approximation of the configured family."""
        spec = self.load_subshift()
        interval = self.value('approximation.interval', [0.0, 1.0])
        family = self.load_family(spec, tuple(interval))
        approximated, report = approximation.approximate_family(
            family, float(self.value('approximation.epsilon', 0.05)),
            self.value('approximation.cover_count'), self.value('approximation.max_cover'),
            self.value('approximation.verification_step'),
        )
        self.save_frame(report.history, "approximation.csv", ["cover_size", "max_error"])
        self.save_json({"report": report.to_dict(), "family": approximated.metadata}, "approximation.json")
        return {"cover_size": report.cover_size, "max_error": report.max_error}

    def run_construct(self):
        """Iterative construction of a potential whose partial sums pass the W_epsilon proxy."""
        spec = self.load_subshift()
        section = self.value('construction', {}) or {}
        g0 = self.data_manager.load_sampling(section.get('g0'))
        generators = [self.data_manager.load_sampling(doc) for doc in section.get('generators', [])]
        epsilons = section.get('epsilons', [])
        grid = self.energy_grid()
        g, log = approximation.construct_uniform_potential(
            g0, generators, epsilons, spec, grid.points,
            horizon=self.value('spectrum.horizon'), seed=self.seed,
            trials=self.value('approximation.trials'), delta_start=self.value('approximation.delta_start'),
            delta_min=self.value('approximation.delta_min'), n_jobs=self.threads, budget=self.budget,
        )
        rows = [{"stage": s.stage, "epsilon": s.epsilon, "delta": s.delta if s.delta is not None else 0.0,
                 "passed": s.passed} for s in log.stages]
        self.save_frame(rows, "construction.csv", ["stage", "epsilon", "delta", "passed"])
        self.save_json({"log": log.to_dict(), "potential": g.to_dict()}, "construction.json")
        if not log.completed:
            self.soft_failures.append({"item": "construction", "error": log.stages[-1].diagnostic})
        return {"completed": log.completed, "delta_schedule": log.deltas}
