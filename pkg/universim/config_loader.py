"""
Configuration loader for universim experiments
"""

import copy
import math
import os
from typing import Any, Dict

import yaml
from loguru import logger

from .distributions import from_literal
from .errors import ConfigError

EXPERIMENTS = (
    "sawtooth_sweep",
    "quantized_seed",
    "type_decay",
    "markov_decay",
    "clt_baseline",
    "squeeze_sweep",
)

_COMMON_KEYS = {"experiment", "rng_seed", "output_path"}

ALLOWED_KEYS = {
    "sawtooth_sweep": _COMMON_KEYS | {"seed_distribution", "target_distribution", "delta_grid", "renyi_alpha"},
    "quantized_seed": _COMMON_KEYS | {"seed_distribution", "target_distribution", "delta_grid", "quantization_n"},
    "type_decay": _COMMON_KEYS | {"seed_distribution", "target_distribution", "n_grid", "greedy_target"},
    "markov_decay": _COMMON_KEYS | {"markov", "target_distribution", "n_grid"},
    "clt_baseline": _COMMON_KEYS | {"seed_distribution", "n_grid", "quantization_n", "universal_cap"},
    "squeeze_sweep": _COMMON_KEYS | {"seed_distribution", "delta_grid", "g_function", "support", "interval"},
}

G_FAMILIES = {
    "identity": set(),
    "constant": {"value"},
    "sine": {"frequency"},
    "power": {"exponent"},
    "indicator": {"threshold"},
}

_MARKOV_KEYS = {"state_count", "order", "initial_state", "transitions"}


class ConfigLoader:
    """Loads, merges and validates experiment configurations"""

    @staticmethod
    def load_config(config_path: str) -> Dict[str, Any]:
        """
        Load configuration from YAML file

        Args:
            config_path: Path to configuration file

        Returns:
            Configuration dictionary (empty for an empty file)

        Raises:
            ConfigError: the file is missing, unreadable or not a mapping
        """
        if not os.path.exists(config_path):
            raise ConfigError(f"Config file not found: {config_path}")

        try:
            with open(config_path, "r") as f:
                config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"Error parsing config {config_path}: {e}") from e

        if config is None:
            config = {}
        if not isinstance(config, dict):
            raise ConfigError(f"Config {config_path} must hold a mapping, got {type(config).__name__}")

        logger.info(f"Configuration loaded from {config_path}")
        return config

    @staticmethod
    def _create_default_config(experiment: str) -> Dict[str, Any]:
        """Create the default configuration of one experiment"""
        uniform = {"kind": "uniform", "a": 0.0, "b": 1.0}
        defaults = {
            "sawtooth_sweep": {
                "seed_distribution": [
                    {"kind": "normal", "mu": 0.0, "sigma": 1.0},
                    {"kind": "exp", "lambda": 1.0},
                    {"kind": "neglog"},
                    {"kind": "powerlaw", "r": 0.5},
                ],
                "target_distribution": uniform,
                "delta_grid": [0.1, 0.05, 0.01],
                "renyi_alpha": 0.5,
            },
            "quantized_seed": {
                "seed_distribution": [
                    {"kind": "normal", "mu": 0.0, "sigma": 1.0},
                    {"kind": "neglog"},
                ],
                "target_distribution": uniform,
                "delta_grid": [0.01],
                "quantization_n": 10000,
            },
            "type_decay": {
                "seed_distribution": {"kind": "bernoulli", "p": 0.7},
                "target_distribution": uniform,
                "n_grid": list(range(1, 13)),
                "greedy_target": None,
            },
            "markov_decay": {
                "markov": {
                    "state_count": 2,
                    "order": 1,
                    "initial_state": [0],
                    "transitions": [[0.9, 0.1], [0.4, 0.6]],
                },
                "target_distribution": uniform,
                "n_grid": list(range(2, 11)),
            },
            "clt_baseline": {
                "seed_distribution": {"kind": "bernoulli", "p": 0.5},
                "n_grid": [4, 8, 16, 32, 64, 128, 256],
                "quantization_n": 1000,
                "universal_cap": 1000000,
            },
            "squeeze_sweep": {
                "seed_distribution": {"kind": "normal", "mu": 0.0, "sigma": 1.0},
                "delta_grid": [0.1, 0.05, 0.025, 0.0125],
                "g_function": {"family": "sine", "frequency": 1.0},
                "support": None,
                "interval": [0.0, 1.0],
            },
        }
        if experiment not in defaults:
            raise ConfigError(f"unknown experiment '{experiment}'; choose one of {', '.join(EXPERIMENTS)}")

        config = {"experiment": experiment, "rng_seed": 0, "output_path": f"results/{experiment}.csv"}
        config.update(copy.deepcopy(defaults[experiment]))
        return config

    @staticmethod
    def save_config(config: Dict[str, Any], config_path: str):
        """
        Save configuration to YAML file

        Args:
            config: Configuration dictionary
            config_path: Path to save configuration
        """
        directory = os.path.dirname(config_path)
        if directory:
            os.makedirs(directory, exist_ok=True)

        with open(config_path, "w") as f:
            yaml.safe_dump(config, f, default_flow_style=False, sort_keys=True)

        logger.info(f"Configuration saved to {config_path}")

    @staticmethod
    def merge_configs(base_config: Dict, override_config: Dict) -> Dict:
        """
        Merge two configurations, with override taking precedence

        Args:
            base_config: Base configuration
            override_config: Configuration to merge on top

        Returns:
            Merged configuration
        """
        merged = copy.deepcopy(base_config)

        for key, value in override_config.items():
            if key in merged and isinstance(merged[key], dict) and isinstance(value, dict):
                merged[key] = ConfigLoader.merge_configs(merged[key], value)
            else:
                merged[key] = copy.deepcopy(value)

        return merged

    @staticmethod
    def validate_config(config: Dict) -> bool:
        """
        Validate configuration structure, failing on the first bad field

        Args:
            config: Configuration to validate

        Returns:
            True when valid

        Raises:
            ConfigError: naming the offending field
        """
        experiment = config.get("experiment")
        if experiment not in ALLOWED_KEYS:
            raise ConfigError(f"experiment: unknown experiment '{experiment}'")

        unknown = sorted(set(config) - ALLOWED_KEYS[experiment])
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown key for experiment '{experiment}'")

        _check_seed(config.get("rng_seed"))
        if not isinstance(config.get("output_path"), str) or not config["output_path"]:
            raise ConfigError("output_path: must be a non-empty string")

        if "delta_grid" in config:
            _check_grid("delta_grid", config["delta_grid"], integral=False)
        if "n_grid" in config:
            _check_grid("n_grid", config["n_grid"], integral=True)

        for key in ("seed_distribution", "target_distribution", "greedy_target"):
            if config.get(key) is not None:
                _check_literals(key, config[key])
        if "seed_distribution" in ALLOWED_KEYS[experiment] and config.get("seed_distribution") is None:
            raise ConfigError("seed_distribution: required")

        for key in ("quantization_n", "universal_cap"):
            if key in config:
                value = config[key]
                if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                    raise ConfigError(f"{key}: must be a positive integer, got {value!r}")

        if "renyi_alpha" in config:
            alpha = config["renyi_alpha"]
            if isinstance(alpha, bool) or not isinstance(alpha, (int, float)) or not alpha >= 0:
                raise ConfigError(f"renyi_alpha: must be a number in [0, inf], got {alpha!r}")

        if "markov" in config:
            _check_markov(config["markov"])
        if "g_function" in config:
            _check_g_function(config["g_function"])
        for key in ("support", "interval"):
            if config.get(key) is not None:
                _check_interval(key, config[key])

        logger.info(f"Configuration validation passed for {experiment}")
        return True


def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"rng_seed: must be a 64-bit nonnegative integer, got {seed!r}")


def _check_grid(key: str, grid, integral: bool):
    if not isinstance(grid, list) or not grid:
        raise ConfigError(f"{key}: must be a non-empty list")
    for value in grid:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: entries must be numbers, got {value!r}")
        if integral and (not isinstance(value, int) or value < 1):
            raise ConfigError(f"{key}: entries must be positive integers, got {value!r}")
        if not (math.isfinite(value) and value > 0):
            raise ConfigError(f"{key}: entries must be finite and positive, got {value!r}")


def _check_literals(key: str, value):
    literals = value if isinstance(value, list) else [value]
    if not literals:
        raise ConfigError(f"{key}: must not be empty")
    for literal in literals:
        try:
            from_literal(literal)
        except ConfigError as e:
            raise ConfigError(f"{key}: {e}") from e


def _check_markov(markov):
    if not isinstance(markov, dict):
        raise ConfigError("markov: must be a mapping")
    unknown = sorted(set(markov) - _MARKOV_KEYS)
    if unknown:
        raise ConfigError(f"markov.{unknown[0]}: unknown key")
    missing = sorted(_MARKOV_KEYS - set(markov))
    if missing:
        raise ConfigError(f"markov.{missing[0]}: required")


def _check_g_function(g_function):
    if not isinstance(g_function, dict) or "family" not in g_function:
        raise ConfigError("g_function: must be a mapping with a 'family' key")
    family = g_function["family"]
    if family not in G_FAMILIES:
        raise ConfigError(f"g_function.family: unknown family '{family}'")
    unknown = sorted(set(g_function) - {"family"} - G_FAMILIES[family])
    if unknown:
        raise ConfigError(f"g_function.{unknown[0]}: unknown key for family '{family}'")


def _check_interval(key: str, value):
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{key}: must be a [low, high] pair")
    lo, hi = value
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"{key}: bounds must be numbers")
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ConfigError(f"{key}: need finite low < high, got {value!r}")
