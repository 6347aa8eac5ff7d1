"""
Tests for the law constructors and their evaluators
"""

import math

import numpy as np
import pytest
from scipy import stats

from universim import distributions as dist
from universim.errors import ConfigError, DomainError, PreconditionError, SizeCapError
from universim.metrics import ks_distance


BUILT_IN_LAWS = [
    dist.uniform(-1.0, 2.0),
    dist.normal(0.0, 1.0),
    dist.exponential(2.0),
    dist.neglog(),
    dist.powerlaw(0.5),
    dist.ramp(0.5, 1.5),
    dist.cantor(),
    dist.bernoulli(0.7),
    dist.geometric(0.5),
    dist.poisson(4.0),
    dist.mixture(0.3, dist.point_mass(0.5), dist.uniform(0.0, 1.0)),
    dist.quantize(dist.normal(0.0, 1.0), 100),
]


class TestEvaluators:
    def test_uniform_cdf_and_quantile(self, unit_uniform):
        assert unit_uniform.cdf(0.25) == pytest.approx(0.25)
        assert unit_uniform.cdf(-1.0) == 0.0
        assert unit_uniform.cdf(2.0) == 1.0
        assert dist.quantile_eval(unit_uniform, 0.25) == pytest.approx(0.25)

    @pytest.mark.parametrize("level", [0.0, -0.1, 1.5])
    def test_quantile_outside_unit_interval_raises(self, unit_uniform, level):
        with pytest.raises(DomainError):
            unit_uniform.quantile(level)

    def test_normal_matches_scipy(self, standard_normal):
        x = np.linspace(-4.0, 4.0, 17)
        np.testing.assert_allclose(dist.cdf_eval(standard_normal, x), stats.norm.cdf(x), atol=1e-14)
        assert standard_normal.quantile(0.975) == pytest.approx(1.959963984540054, rel=1e-12)
        assert standard_normal.density(0.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi))

    def test_exponential_quantile_inverts_cdf(self):
        law = dist.exponential(2.0)
        t = np.array([0.1, 0.5, 0.9])
        np.testing.assert_allclose(law.cdf(law.quantile(t)), t, atol=1e-12)

    def test_neglog_cdf(self):
        law = dist.neglog()
        assert law.cdf(1.0) == pytest.approx(1.0)
        assert law.cdf(0.5) == pytest.approx(0.5 - 0.5 * math.log(0.5))
        # no closed-form quantile: bisection on the cdf
        assert law.cdf(law.quantile(0.3)) == pytest.approx(0.3, abs=1e-9)

    def test_powerlaw_density_unbounded(self):
        law = dist.powerlaw(0.5)
        assert math.isinf(law.density_bound)
        assert law.cdf(0.25) == pytest.approx(0.5)

    def test_ramp_quantile(self):
        law = dist.ramp(0.5, 1.5)
        t = np.array([0.2, 0.5, 0.8])
        np.testing.assert_allclose(law.cdf(law.quantile(t)), t, atol=1e-12)
        with pytest.raises(DomainError):
            dist.ramp(1.0, 2.0)

    @pytest.mark.parametrize("law", BUILT_IN_LAWS, ids=lambda law: law.name)
    def test_quantile_is_a_generalized_inverse(self, law):
        t = np.arange(1, 10_001) / 10_000
        assert np.all(np.asarray(law.cdf(law.quantile(t))) >= t - 1e-9)

    def test_scalar_and_array_shapes(self, standard_normal):
        assert isinstance(standard_normal.cdf(0.0), float)
        assert standard_normal.cdf(np.array([0.0, 1.0])).shape == (2,)


class TestCantor:
    def test_middle_third_plateau(self):
        assert dist.cantor_cdf(1.0 / 3.0) == pytest.approx(0.5)
        assert dist.cantor_cdf(0.5) == pytest.approx(0.5)

    def test_quarter_point(self):
        assert dist.cantor_cdf(0.25) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_outside_unit_interval(self):
        np.testing.assert_array_equal(dist.cantor_cdf(np.array([-1.0, 0.0, 1.0, 2.0])), [0.0, 0.0, 1.0, 1.0])

    def test_self_similarity(self):
        x = np.linspace(0.0, 1.0, 2001)
        # rounding of x / 3 is amplified by the 0.63-Holder modulus
        np.testing.assert_allclose(dist.cantor_cdf(x / 3.0), 0.5 * dist.cantor_cdf(x), atol=1e-9)
        np.testing.assert_allclose(dist.cantor_cdf(1.0 - x), 1.0 - dist.cantor_cdf(x), atol=1e-9)

    def test_holder_modulus(self):
        x = np.arange(730) / 729
        c = dist.cantor_cdf(x)
        gap = np.abs(x[:, None] - x[None, :])
        off = gap > 0
        ratio = np.abs(c[:, None] - c[None, :])[off] / gap[off] ** (math.log(2.0) / math.log(3.0))
        assert ratio.max() <= 2.0

    def test_law_is_singular(self):
        law = dist.cantor()
        assert law.class_tag is dist.ClassTag.SINGULAR_CONTINUOUS
        assert not law.has_density
        assert law.quantile(0.5) == pytest.approx(1.0 / 3.0, abs=1e-8)


class TestDiscrete:
    def test_pmf_validation(self):
        with pytest.raises(DomainError):
            dist.DiscretePmf(np.array([0.0, 1.0]), np.array([0.5, 0.6]))
        with pytest.raises(DomainError):
            dist.DiscretePmf(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
        with pytest.raises(DomainError):
            dist.pmf([0.0, 1.0], [-0.5, 1.5])

    def test_one_sided_limits_at_atoms(self, bern07):
        assert bern07.cdf(0.0) == pytest.approx(0.3)
        assert bern07.cdf_left(0.0) == 0.0
        assert bern07.cdf_left(1.0) == pytest.approx(0.3)
        assert bern07.quantile(0.3) == 0.0
        assert bern07.quantile(0.31) == 1.0

    def test_pmf_sorts_and_drops_zero_mass(self):
        law = dist.pmf([2.0, 0.0, 1.0], [0.5, 0.5, 0.0])
        np.testing.assert_array_equal(law.atom_values, [0.0, 2.0])
        assert law.max_atom == pytest.approx(0.5)

    def test_geometric_and_poisson_are_normalized(self):
        geom = dist.geometric(0.5)
        pois = dist.poisson(4.0)
        assert geom.atom_masses.sum() == pytest.approx(1.0)
        assert geom.atom_masses[0] == pytest.approx(0.5, rel=1e-12)
        assert pois.atom_masses.sum() == pytest.approx(1.0)
        assert pois.cdf(4.0) == pytest.approx(stats.poisson.cdf(4, 4.0), rel=1e-10)

    def test_mixture_limits(self, unit_uniform):
        law = dist.mixture(0.5, dist.point_mass(0.5), unit_uniform)
        assert law.class_tag is dist.ClassTag.MIXTURE
        assert law.cdf(0.5) == pytest.approx(0.75)
        assert law.cdf_left(0.5) == pytest.approx(0.25)
        with pytest.raises(PreconditionError):
            dist.mixture(0.5, unit_uniform, unit_uniform)

    def test_pushforward_merges_atoms(self):
        law = dist.pushforward(dist.pmf([-1.0, 1.0], [0.5, 0.5]), abs)
        np.testing.assert_array_equal(law.atom_values, [1.0])
        with pytest.raises(PreconditionError):
            dist.pushforward(dist.uniform(), abs)


class TestQuantize:
    def test_uniform_lattice(self, unit_uniform):
        law = dist.quantize(unit_uniform, 10)
        np.testing.assert_allclose(law.atom_values, np.arange(10) / 10)
        np.testing.assert_allclose(law.atom_masses, np.full(10, 0.1))
        assert law.cdf(0.05) == pytest.approx(0.1)
        assert law.cdf(0.1) == pytest.approx(0.2)
        assert law.cdf_left(0.1) == pytest.approx(0.1)

    def test_quantized_normal_tracks_base(self, standard_normal):
        law = dist.quantize(standard_normal, 1000)
        x = np.linspace(-3.0, 3.0, 13)
        assert np.abs(law.cdf(x) - standard_normal.cdf(x)).max() <= 1e-3 / math.sqrt(2.0 * math.pi) + 1e-12

    @pytest.mark.parametrize(
        "base, n", [(dist.normal(0.0, 1.0), 100), (dist.exponential(1.0), 50), (dist.uniform(0.0, 1.0), 10)]
    )
    def test_ks_within_density_bound_over_n(self, base, n):
        assert ks_distance(dist.quantize(base, n), base) <= base.density_bound / n + 1e-9

    def test_rejects_non_integer_level(self, unit_uniform):
        with pytest.raises(DomainError):
            dist.quantize(unit_uniform, 2.5)


class TestSequences:
    def test_digits_are_lexicographic(self):
        digits = dist.sequence_digits(2, 3, cap=100)
        assert digits.shape == (8, 3)
        assert digits[1].tolist() == [0, 0, 1]
        assert digits[-1].tolist() == [1, 1, 1]

    def test_cap(self):
        with pytest.raises(SizeCapError):
            dist.sequence_digits(2, 3, cap=4)

    def test_product_law(self, bern07):
        law = dist.product_law(bern07, 3)
        assert law.size == 8
        assert law.length == 3
        assert law.max_mass == pytest.approx(0.343)
        assert law.probs.sum() == pytest.approx(1.0)
        assert law.atom_labels()[0] == (0, 0, 0)

    def test_equal_types_have_identical_masses(self, bern07):
        law = dist.product_law(bern07, 4)
        by_label = dict(zip(law.atom_labels(), law.probs))
        assert by_label[(0, 1, 1, 0)] == by_label[(1, 0, 0, 1)]

    def test_symbol_counts(self):
        counts = dist.symbol_counts(np.array([[0, 1, 1], [2, 2, 2]]), 3)
        assert counts.tolist() == [[1, 2, 0], [0, 0, 3]]


class TestLiterals:
    def test_normal_literal(self):
        law = dist.from_literal({"kind": "normal", "mu": 1.0, "sigma": 2.0})
        assert law.cdf(1.0) == pytest.approx(0.5)

    def test_quantized_literal(self):
        law = dist.from_literal({"kind": "quantized", "base": {"kind": "uniform"}, "n": 4})
        assert law.is_discrete
        assert law.atom_values.size == 4

    def test_mixture_literal(self):
        law = dist.from_literal({
            "kind": "mixture",
            "weight": 0.25,
            "discrete": {"kind": "point", "x": 0.0},
            "continuous": {"kind": "exp", "lambda": 1.0},
        })
        assert law.cdf(0.0) == pytest.approx(0.25)

    @pytest.mark.parametrize(
        "literal",
        [
            {"kind": "lognormal"},
            {"kind": "normal", "scale": 1.0},
            {"kind": "pmf", "support": [0, 1]},
            {"kind": "uniform", "a": 1.0, "b": 0.0},
            {"mu": 0.0},
            "normal",
        ],
    )
    def test_bad_literals_are_config_errors(self, literal):
        with pytest.raises(ConfigError):
            dist.from_literal(literal)
