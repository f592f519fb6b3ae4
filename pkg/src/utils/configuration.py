"""
Configuration Module

This module handles configuration parameters for the cocycle laboratory.
It provides functionality to load configuration from files, provide defaults,
and apply environment overrides (``COCYCLE_LAB_BUDGET``).
"""

import os
import json
import math
import logging
import platform
from contextlib import contextmanager
from copy import deepcopy

from src.utils.exceptions import ConfigurationError

BUDGET_ENV_VAR = "COCYCLE_LAB_BUDGET"

DEFAULT_CONFIG = {
    'general': {
        'seed': 20240607,
        'threads': None,  # Auto-detect
        'budget': 4_194_304,  # matrix steps per enumeration
        'verbose': False,
    },
    'subshift': {
        'max_length': 4_000_000,
        'stabilization_window': 2,
        'cf_min_terms': 30,
        'scan_budget': 1_048_576,
    },
    'cocycle': {
        'det_tol': 1e-10,
        'renorm_interval': 32,
        'horizon': 1_048_576,
    },
    'uniformity': {
        'kappa': 20.0,  # placeholder, not a derived constant
        'lambda0': 10.0,  # placeholder, not a derived constant
        'epsilon': 0.2,
        'horizons': [16, 32, 64, 128, 256, 512],
        'grid_points': 101,
        'sample_length': 65536,
    },
    'hyperbolicity': {
        'margin': 1e-3,
        'angle_tol': 1e-6,
        'gap_tol': 1e-8,
        'max_sweeps': 64,
        'initial_half_width': math.pi / 8,
    },
    'spectrum': {
        'resolution': 64,
        'edge_tol': 1e-10,
        'horizon': 256,
        'epsilon': 0.05,
    },
    'approximation': {
        'delta_start': 0.5,
        'delta_min': 1e-6,
        'trials': 16,
        'max_cover': 4096,
        'verification_step': 0.01,
    },
}


class Configuration:
    """
    Manages configuration parameters for the cocycle laboratory.
    """

    def __init__(self, config_file=None, environ=None):
        """
        Initialize with optional configuration file.

        Args:
            config_file (str or Path, optional): Path to a JSON configuration file. Defaults to None.
            environ (dict, optional): Environment mapping used for overrides. Defaults to os.environ.
        """
        self.logger = logging.getLogger("Configuration")
        self.config = {}

        # Load default configuration
        self._load_defaults()

        # Load from configuration file if provided
        if config_file:
            self.load_config(config_file)

        self.apply_environment(os.environ if environ is None else environ)

    def _load_defaults(self):
        """
        Load default configuration parameters.
        """
        self.config = deepcopy(DEFAULT_CONFIG)

    def load_config(self, config_file):
        """
        Load configuration from file.

        Args:
            config_file (str or Path): Path to configuration file

        Raises:
            ConfigurationError: If the file is missing or is not a JSON object
        """
        try:
            with open(config_file, 'r', encoding='utf-8') as f:
                file_config = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Error loading configuration file {config_file}: {e}") from e

        if not isinstance(file_config, dict):
            raise ConfigurationError(f"Configuration {config_file} must be a JSON object")

        self._merge_config(file_config)
        self.logger.info(f"Loaded configuration from {config_file}")

    def apply_environment(self, environ):
        """
        Apply environment overrides.

        Args:
            environ (dict): Environment mapping
        """
        raw = environ.get(BUDGET_ENV_VAR)
        if raw is None:
            return
        try:
            budget = int(raw)
        except ValueError as e:
            raise ConfigurationError(f"{BUDGET_ENV_VAR} must be an integer, got '{raw}'") from e
        if budget <= 0:
            raise ConfigurationError(f"{BUDGET_ENV_VAR} must be positive, got {budget}")
        self.set_config_value('general.budget', budget)
        self.logger.info(f"Budget overridden from environment: {budget}")

    def get_config_value(self, key, default=None):
        """
        Get configuration parameter.

        Args:
            key (str): Configuration key (can be nested using dots, e.g., 'cocycle.det_tol')
            default: Default value if key is not found

        Returns:
            Configuration value or default
        """
        return get_config_value(self.config, key, default)

    def set_config_value(self, key, value):
        """
        Set configuration parameter.

        Args:
            key (str): Configuration key (can be nested using dots)
            value: Value to set
        """
        sections = key.split('.')
        current = self.config
        for section in sections[:-1]:
            current = current.setdefault(section, {})
        current[sections[-1]] = value

    @contextmanager
    def activated(self):
        """
        Make this configuration the one `default_value` reads while the block runs.

        Yields:
            Configuration: self
        """
        previous = activate(self.config)
        try:
            yield self
        finally:
            activate(previous)

    def save_config(self, config_file):
        """
        Save configuration to file.

        Args:
            config_file (str or Path): Path to save configuration
        """
        with open(config_file, 'w', encoding='utf-8') as f:
            json.dump(self.config, f, indent=2, sort_keys=True)
        self.logger.info(f"Saved configuration to {config_file}")

    def resolved_threads(self):
        """
        Number of worker processes, auto-detected when unset.

        Returns:
            int: Worker count (at least 1)
        """
        threads = self.get_config_value('general.threads')
        if threads:
            return max(1, int(threads))
        return detect_environment()['resources']['max_workers']

    def _merge_config(self, new_config):
        """
        Merge new configuration with existing configuration.

        Args:
            new_config (dict): New configuration to merge
        """
        _merge_config_section(self.config, new_config)


def _merge_config_section(target, source):
    """
    Recursively merge configuration sections.

    Args:
        target (dict): Target configuration section
        source (dict): Source configuration section
    """
    for key, value in source.items():
        if key in target and isinstance(target[key], dict) and isinstance(value, dict):
            _merge_config_section(target[key], value)
        else:
            target[key] = value


def load_config(config_file):
    """
    Load configuration from file.

    Args:
        config_file (str or Path): Path to configuration file

    Returns:
        dict: Configuration dictionary
    """
    return Configuration(config_file).config


def get_config_value(config, key, default=None):
    """
    Get configuration parameter.

    Args:
        config (dict): Configuration dictionary
        key (str): Configuration key
        default: Default value if key is not found

    Returns:
        Configuration value or default
    """
    current = config
    for section in key.split('.'):
        if not isinstance(current, dict) or section not in current:
            return default
        current = current[section]
    return current


_ACTIVE_CONFIG = None


def activate(config):
    """
    Install a configuration dictionary as the active one.

    Args:
        config (dict or None): Configuration to activate; None restores the built-in defaults

    Returns:
        dict or None: The previously active configuration
    """
    global _ACTIVE_CONFIG
    previous = _ACTIVE_CONFIG
    _ACTIVE_CONFIG = config
    return previous


def active_config():
    """The active configuration dictionary, or None when only defaults apply."""
    return _ACTIVE_CONFIG


def default_value(key):
    """
    Look up a parameter default.

    The active configuration (see `Configuration.activated`) wins; otherwise the
    built-in defaults apply, with the environment override for the budget.
    """
    if _ACTIVE_CONFIG is not None:
        value = get_config_value(_ACTIVE_CONFIG, key)
        if value is not None:
            return value
    if key == 'general.budget' and os.environ.get(BUDGET_ENV_VAR):
        try:
            return int(os.environ[BUDGET_ENV_VAR])
        except ValueError:
            pass
    return get_config_value(DEFAULT_CONFIG, key)


def detect_environment():
    """
    Detect execution environment.

    Returns:
        dict: Environment information
    """
    import psutil

    cpu_count = psutil.cpu_count(logical=False) or 1
    memory_gb = psutil.virtual_memory().total / (1024 * 1024 * 1024)

    return {
        'resources': {
            'cpu_count': cpu_count,
            'memory_gb': round(memory_gb, 2),
            'max_workers': max(1, cpu_count - 1),
        },
        'platform': {
            'system': platform.system(),
            'node': platform.node(),
            'python': platform.python_version(),
        },
    }
