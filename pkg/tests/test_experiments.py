"""
Tests for the experiment runners and the engine's artifacts
"""

import math

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from universim import distributions as dist
from universim.config_loader import ConfigLoader
from universim.errors import ConfigError, InvariantViolation, PreconditionError
from universim.experiments import (
    ExperimentConfig,
    ExperimentEngine,
    g_family,
    run_clt_baseline,
    run_markov_decay,
    run_quantized_seed,
    run_sawtooth_sweep,
    run_squeeze_sweep,
    run_type_decay,
    standardized_sum_law,
)

UNIFORM = {"kind": "uniform", "a": 0.0, "b": 1.0}
FAIR_COIN = {"kind": "bernoulli", "p": 0.5}


def make_config(experiment: str, tmp_path, **overrides) -> ExperimentConfig:
    config = ConfigLoader._create_default_config(experiment)
    config["output_path"] = str(tmp_path / f"{experiment}.csv")
    config.update(overrides)
    ConfigLoader.validate_config(config)
    return ExperimentConfig.from_dict(config)


def binomial_ks(n: int) -> float:
    k = np.arange(n + 1)
    z = (k - 0.5 * n) / math.sqrt(0.25 * n)
    right = stats.binom.cdf(k, n, 0.5)
    left = right - stats.binom.pmf(k, n, 0.5)
    phi = stats.norm.cdf(z)
    return float(max(np.abs(right - phi).max(), np.abs(left - phi).max()))


class TestExperimentConfig:
    def test_unknown_field(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"experiment": "type_decay", "n_grid": [1], "alpha": 2})

    def test_seed_list_handling(self, tmp_path):
        config = make_config("sawtooth_sweep", tmp_path)
        assert len(config.seeds()) == 4
        with pytest.raises(ConfigError, match="single law"):
            config.seed()

    def test_default_target(self):
        assert ExperimentConfig("clt_baseline").target().name == "Unif[0,1]"


class TestSawtoothSweep:
    def test_aligned_uniform_seed(self, tmp_path):
        config = make_config("sawtooth_sweep", tmp_path, seed_distribution=UNIFORM, delta_grid=[0.5, 0.25, 0.1])
        frame = run_sawtooth_sweep(config)
        assert list(frame.columns) == [
            "seed", "delta", "ks_exact", "output_tv", "tv_upper_bound", "renyi_alpha", "renyi_value",
        ]
        assert frame["delta"].tolist() == [0.5, 0.25, 0.1]
        np.testing.assert_allclose(frame["ks_exact"], 0.0, atol=1e-9)
        np.testing.assert_allclose(frame["tv_upper_bound"], 0.0, atol=1e-9)

    def test_rows_respect_the_bound(self, tmp_path):
        seeds = [{"kind": "exp", "lambda": 1.0}, {"kind": "bounded", "a": 0.5, "b": 1.5}]
        frame = run_sawtooth_sweep(make_config("sawtooth_sweep", tmp_path, seed_distribution=seeds, delta_grid=[0.2, 0.1]))
        assert len(frame) == 4
        assert (frame["ks_exact"] <= frame["tv_upper_bound"] + 1e-9).all()
        assert (frame["output_tv"] <= frame["tv_upper_bound"] + 1e-9).all()

    def test_density_free_seed_gets_nan(self, tmp_path):
        frame = run_sawtooth_sweep(
            make_config("sawtooth_sweep", tmp_path, seed_distribution={"kind": "cantor"}, delta_grid=[0.1])
        )
        assert math.isnan(frame["tv_upper_bound"].iloc[0])
        assert 0.0 <= frame["ks_exact"].iloc[0] <= 1.0

    def test_violation_is_raised(self, tmp_path, monkeypatch):
        monkeypatch.setattr("universim.experiments.tv_upper_bound", lambda p, delta: 0.0)
        config = make_config("sawtooth_sweep", tmp_path, seed_distribution={"kind": "neglog"}, delta_grid=[0.1])
        with pytest.raises(InvariantViolation) as excinfo:
            run_sawtooth_sweep(config)
        assert excinfo.value.exit_code == 3
        assert excinfo.value.row["delta"] == 0.1


class TestQuantizedSeed:
    def test_coarse_quantization_is_flagged(self, tmp_path):
        config = make_config(
            "quantized_seed", tmp_path, seed_distribution=UNIFORM, delta_grid=[0.1], quantization_n=10
        )
        row = run_quantized_seed(config).iloc[0]
        assert bool(row["flagged"])
        assert row["smoothness_defect"] == pytest.approx(1.0)
        assert row["ks_quantized"] > 0.9

    def test_fine_quantization_is_not_flagged(self, tmp_path):
        config = make_config(
            "quantized_seed", tmp_path, seed_distribution=UNIFORM, delta_grid=[0.1], quantization_n=100
        )
        row = run_quantized_seed(config).iloc[0]
        assert not bool(row["flagged"])
        assert row["ks_base"] == pytest.approx(0.0, abs=1e-9)
        assert row["ks_quantized"] == pytest.approx(0.1, abs=1e-6)


class TestTypeDecay:
    def test_fair_coin(self, tmp_path):
        config = make_config("type_decay", tmp_path, seed_distribution=FAIR_COIN, n_grid=[1, 2, 3, 4, 5, 6])
        frame = run_type_decay(config)
        expected = [0.5 * 2.0 ** -n for n in range(1, 7)]
        np.testing.assert_allclose(frame["nonuniversal_ks"], expected, rtol=1e-9)
        np.testing.assert_allclose(frame["half_max_prob"], expected, rtol=1e-12)
        assert (frame["universal_ks"] >= frame["nonuniversal_ks"] - 1e-12).all()
        assert (frame["universal_ks"] <= frame["error_bound"]).all()
        assert "greedy_ks" not in frame.columns

    def test_greedy_columns(self, tmp_path):
        greedy = {"kind": "pmf", "support": [0, 1], "probs": [0.5, 0.5]}
        config = make_config("type_decay", tmp_path, n_grid=[1, 2, 3, 4, 5], greedy_target=greedy)
        frame = run_type_decay(config)
        assert frame["greedy_threshold_met"].tolist() == [False, False, False, False, True]
        last = frame.iloc[-1]
        assert last["greedy_bound"] == pytest.approx(0.5 * 0.7 * 0.3 ** 4)
        assert last["greedy_ks"] <= last["greedy_bound"]

    def test_continuous_seed_rejected(self, tmp_path):
        config = make_config("type_decay", tmp_path, seed_distribution=UNIFORM, n_grid=[2])
        with pytest.raises(ConfigError, match="discrete"):
            run_type_decay(config)


class TestMarkovDecay:
    def test_default_chain(self, tmp_path):
        frame = run_markov_decay(make_config("markov_decay", tmp_path, n_grid=[2, 3, 4]))
        assert list(frame.columns) == ["n", "universal_ks", "half_max_path_prob", "error_bound", "min_entropy_rate"]
        np.testing.assert_allclose(frame["min_entropy_rate"], math.log(1.0 / 0.9))
        np.testing.assert_allclose(frame["half_max_path_prob"], [0.5 * 0.9 ** n for n in (2, 3, 4)])
        assert (frame["universal_ks"] >= frame["half_max_path_prob"] - 1e-12).all()

    def test_bad_chain(self, tmp_path):
        markov = {"state_count": 2, "order": 1, "initial_state": [0], "transitions": [[0.5, 0.6], [0.5, 0.5]]}
        with pytest.raises(ConfigError, match="markov"):
            run_markov_decay(make_config("markov_decay", tmp_path, markov=markov, n_grid=[2]))


class TestCltBaseline:
    def test_standardized_binomial(self):
        law = standardized_sum_law(dist.bernoulli(0.5), 4)
        np.testing.assert_allclose(law.atom_values, [-2.0, -1.0, 0.0, 1.0, 2.0])
        np.testing.assert_allclose(law.atom_masses, [1 / 16, 4 / 16, 6 / 16, 4 / 16, 1 / 16])

    def test_non_lattice_seed(self):
        with pytest.raises(PreconditionError):
            standardized_sum_law(dist.pmf([0.0, 1.0, math.sqrt(2.0)], [0.2, 0.3, 0.5]), 3)

    def test_fair_coin_against_oracle(self, tmp_path):
        frame = run_clt_baseline(make_config("clt_baseline", tmp_path, n_grid=[4, 16]))
        assert frame["clt_ks"].iloc[0] == pytest.approx(binomial_ks(4), abs=1e-9)
        assert frame["clt_ks"].iloc[1] == pytest.approx(binomial_ks(16), abs=1e-9)
        assert frame["universal_exact"].tolist() == [True, True]
        assert frame["universal_ks"].iloc[1] < frame["clt_ks"].iloc[1]

    def test_sixteen_fair_coins(self, tmp_path):
        row = run_clt_baseline(make_config("clt_baseline", tmp_path, n_grid=[16])).iloc[0]
        # 1.037e-4 exactly, inside the type-class bound 17 * 2**-17
        assert row["universal_ks"] < 1.1e-4
        assert row["universal_ks"] <= 0.5 * 17 * 0.5 ** 16
        assert row["universal_ks"] * 900 < row["clt_ks"]
        assert row["clt_ks"] == pytest.approx(binomial_ks(16), abs=1e-9)

    def test_cap_switches_to_the_bound(self, tmp_path):
        frame = run_clt_baseline(make_config("clt_baseline", tmp_path, n_grid=[4, 32], universal_cap=1000))
        assert frame["universal_exact"].tolist() == [True, False]
        assert frame["universal_ks"].iloc[1] == pytest.approx(0.5 * 33 ** 2 * 0.5 ** 32)

    def test_continuous_seed_is_quantized(self, tmp_path):
        config = make_config(
            "clt_baseline", tmp_path, seed_distribution=UNIFORM, n_grid=[2], quantization_n=4, universal_cap=100
        )
        frame = run_clt_baseline(config)
        assert frame["universal_exact"].tolist() == [True]
        assert 0.0 < frame["clt_ks"].iloc[0] < 0.5


class TestSqueezeSweep:
    def test_default_sweep(self, tmp_path):
        frame = run_squeeze_sweep(make_config("squeeze_sweep", tmp_path, support=[-5.0, 5.0]))
        assert list(frame.columns) == ["delta", "L_delta", "L", "defect", "bound", "truncated_mass"]
        assert (frame["defect"] <= frame["bound"] + 1e-9).all()
        assert frame["bound"].is_monotonic_decreasing

    def test_g_families(self):
        s = np.array([0.25, 0.75])
        assert g_family({"family": "identity"})(s).tolist() == [0.25, 0.75]
        assert g_family({"family": "constant", "value": 2.0})(s).tolist() == [2.0, 2.0]
        assert g_family({"family": "power", "exponent": 2.0})(s).tolist() == [0.0625, 0.5625]
        assert g_family({"family": "indicator", "threshold": 0.5})(s).tolist() == [1.0, 0.0]
        np.testing.assert_allclose(g_family({"family": "sine"})(s), [1.0, -1.0], atol=1e-12)
        with pytest.raises(ConfigError):
            g_family({"family": "cosine"})


class TestEngine:
    def test_csv_is_reproducible(self, tmp_path):
        config = make_config("type_decay", tmp_path, n_grid=[1, 2, 3, 4])
        first = ExperimentEngine(config).save_results(str(tmp_path / "first.csv"))
        second = ExperimentEngine(config).save_results(str(tmp_path / "second.csv"))
        assert first.read_bytes() == second.read_bytes()
        frame = pd.read_csv(first)
        assert frame["n"].tolist() == [1, 2, 3, 4]

    def test_default_output_path(self, tmp_path):
        config = make_config("markov_decay", tmp_path, n_grid=[2])
        engine = ExperimentEngine(config)
        engine.run()
        assert engine.save_results() == tmp_path / "markov_decay.csv"
        assert (tmp_path / "markov_decay.csv").read_text().startswith("n,universal_ks,")

    def test_histogram(self, tmp_path):
        config = make_config("sawtooth_sweep", tmp_path, seed_distribution=UNIFORM, delta_grid=[0.1])
        path = ExperimentEngine(config).plot_histogram(500)
        assert path.exists()
        assert path.name == "sawtooth_sweep.csv.hist.png"

    def test_histogram_only_for_sawtooth_experiments(self, tmp_path):
        assert ExperimentEngine(make_config("type_decay", tmp_path)).plot_histogram(100) is None

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            ExperimentEngine(ExperimentConfig("bootstrap"))


@pytest.mark.slow
class TestAcceptance:
    def test_default_sawtooth_sweep(self, tmp_path):
        frame = run_sawtooth_sweep(make_config("sawtooth_sweep", tmp_path))
        assert len(frame) == 12
        smooth = frame.dropna()
        assert (smooth["ks_exact"] <= smooth["tv_upper_bound"] + 1e-9).all()

    def test_default_quantized_seed(self, tmp_path):
        frame = run_quantized_seed(make_config("quantized_seed", tmp_path))
        assert len(frame) == 2
        assert not frame["flagged"].any()

    def test_quantized_gaussian_stays_close(self, tmp_path):
        config = make_config("quantized_seed", tmp_path, seed_distribution={"kind": "normal"})
        row = run_quantized_seed(config).iloc[0]
        assert row["ks_base"] <= 0.02
        assert row["ks_quantized"] <= 0.02

    def test_clt_slope(self, tmp_path):
        frame = run_clt_baseline(make_config("clt_baseline", tmp_path))
        slope, _ = np.polyfit(np.log(frame["n"]), np.log(frame["clt_ks"]), 1)
        assert slope == pytest.approx(-0.5, abs=0.1)
        exact = frame[frame["universal_exact"]]
        assert (exact["universal_ks"] < exact["clt_ks"]).all()
