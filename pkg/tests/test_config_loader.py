"""
Tests for loading, merging and validating experiment configurations
"""

from pathlib import Path

import pytest
import yaml

from universim.config_loader import ALLOWED_KEYS, EXPERIMENTS, ConfigLoader
from universim.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def config_for(experiment: str, /, **overrides) -> dict:
    return ConfigLoader.merge_configs(ConfigLoader._create_default_config(experiment), overrides)


class TestLoading:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            ConfigLoader.load_config(str(tmp_path / "absent.yaml"))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert ConfigLoader.load_config(str(path)) == {}

    def test_bad_yaml_and_non_mapping(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("delta_grid: [0.1, 0.2\n")
        with pytest.raises(ConfigError):
            ConfigLoader.load_config(str(bad))
        listing = tmp_path / "list.yaml"
        listing.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            ConfigLoader.load_config(str(listing))

    def test_save_round_trip(self, tmp_path):
        config = config_for("clt_baseline")
        path = tmp_path / "nested" / "clt.yaml"
        ConfigLoader.save_config(config, str(path))
        assert yaml.safe_load(path.read_text()) == config

    @pytest.mark.parametrize("experiment", EXPERIMENTS)
    def test_shipped_configs_validate(self, experiment):
        loaded = ConfigLoader.load_config(str(CONFIG_DIR / f"{experiment}.yaml"))
        assert loaded["experiment"] == experiment
        assert set(loaded) <= ALLOWED_KEYS[experiment]
        assert ConfigLoader.validate_config(config_for(experiment, **loaded))


class TestDefaults:
    @pytest.mark.parametrize("experiment", EXPERIMENTS)
    def test_defaults_validate(self, experiment):
        config = ConfigLoader._create_default_config(experiment)
        assert config["experiment"] == experiment
        assert config["output_path"] == f"results/{experiment}.csv"
        assert ConfigLoader.validate_config(config)

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError, match="unknown experiment"):
            ConfigLoader._create_default_config("bootstrap")

    def test_defaults_are_fresh_copies(self):
        first = ConfigLoader._create_default_config("sawtooth_sweep")
        first["delta_grid"].append(0.5)
        assert ConfigLoader._create_default_config("sawtooth_sweep")["delta_grid"] == [0.1, 0.05, 0.01]


class TestMerge:
    def test_nested_override(self):
        base = {"markov": {"order": 1, "state_count": 2}, "n_grid": [1, 2]}
        merged = ConfigLoader.merge_configs(base, {"markov": {"order": 2}, "n_grid": [5]})
        assert merged == {"markov": {"order": 2, "state_count": 2}, "n_grid": [5]}
        assert base["markov"]["order"] == 1

    def test_override_is_copied(self):
        override = {"delta_grid": [0.1]}
        merged = ConfigLoader.merge_configs({}, override)
        merged["delta_grid"].append(0.2)
        assert override["delta_grid"] == [0.1]


class TestValidation:
    @pytest.mark.parametrize(
        "experiment,overrides,field",
        [
            ("sawtooth_sweep", {"n_grid": [1]}, "n_grid"),
            ("sawtooth_sweep", {"delta_grid": []}, "delta_grid"),
            ("sawtooth_sweep", {"delta_grid": [0.1, -0.1]}, "delta_grid"),
            ("sawtooth_sweep", {"delta_grid": [0.1, "a"]}, "delta_grid"),
            ("sawtooth_sweep", {"renyi_alpha": -1.0}, "renyi_alpha"),
            ("sawtooth_sweep", {"seed_distribution": {"kind": "gamma"}}, "seed_distribution"),
            ("sawtooth_sweep", {"target_distribution": {"kind": "normal", "sd": 1}}, "target_distribution"),
            ("sawtooth_sweep", {"rng_seed": -1}, "rng_seed"),
            ("sawtooth_sweep", {"rng_seed": 2 ** 64}, "rng_seed"),
            ("sawtooth_sweep", {"output_path": ""}, "output_path"),
            ("quantized_seed", {"quantization_n": 0}, "quantization_n"),
            ("type_decay", {"n_grid": [1, 2.5]}, "n_grid"),
            ("type_decay", {"greedy_target": {"kind": "bernoulli"}}, "greedy_target"),
            ("clt_baseline", {"universal_cap": True}, "universal_cap"),
            ("markov_decay", {"markov": {"order": 1, "state_count": 2, "initial_state": [0]}}, "markov.transitions"),
            ("squeeze_sweep", {"g_function": {"family": "cosine"}}, "g_function.family"),
            ("squeeze_sweep", {"g_function": {"family": "sine", "phase": 1.0}}, "g_function.phase"),
            ("squeeze_sweep", {"interval": [1.0, 0.0]}, "interval"),
            ("squeeze_sweep", {"support": [0.0]}, "support"),
        ],
    )
    def test_error_names_the_field(self, experiment, overrides, field):
        config = config_for(experiment)
        config.update(overrides)
        with pytest.raises(ConfigError) as excinfo:
            ConfigLoader.validate_config(config)
        assert str(excinfo.value).startswith(f"{field}:")

    def test_missing_seed(self):
        config = config_for("sawtooth_sweep")
        config["seed_distribution"] = None
        with pytest.raises(ConfigError, match="seed_distribution: required"):
            ConfigLoader.validate_config(config)

    def test_mixture_literal_is_accepted(self):
        mixture = {
            "kind": "mixture",
            "weight": 0.3,
            "discrete": {"kind": "point", "x": 0.5},
            "continuous": {"kind": "uniform"},
        }
        assert ConfigLoader.validate_config(config_for("quantized_seed", seed_distribution=mixture))

    def test_config_errors_are_value_errors(self):
        config = config_for("type_decay")
        config["n_grid"] = [0]
        with pytest.raises(ValueError):
            ConfigLoader.validate_config(config)
