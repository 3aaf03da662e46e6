"""Tests for the target laws and the Monte Carlo CLT harness."""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import special

from linclt.errors import PreconditionError, ReplicateError
from linclt.harness.monte_carlo import (
    SimulationConfig,
    empirical_variance_ratio,
    monte_carlo_clt,
    replicate_values,
    simulate_sn,
    weighted_square_functional,
)
from linclt.harness.normal import (
    MixtureTarget,
    NormalTarget,
    ks_distance,
    mixture_cdf,
    standard_normal_cdf,
    target_cdf,
    target_variance,
)
from linclt.innovations.models import (
    CausalLinearModel,
    CounterexampleCoefficients,
    MdsProductModel,
    NonergodicScaleModel,
    sample_path,
)
from linclt.weights.window import PowerDecayWeights, window_coefficients


@pytest.mark.unit
class TestTargets:
    def test_standard_normal_cdf(self):
        """The normal CDF matches tabulated values."""
        assert standard_normal_cdf(0.0) == 0.5
        assert standard_normal_cdf(-1.96) == pytest.approx(0.0249979, abs=1e-7)

    def test_scaled_component(self):
        """A one-component mixture is a scaled normal."""
        cdf = mixture_cdf([(1.0, 4.0)])
        assert cdf(2.0) == pytest.approx(standard_normal_cdf(1.0))

    def test_invalid_mixture(self):
        """Mixtures need probabilities summing to one and positive variances."""
        with pytest.raises(PreconditionError):
            mixture_cdf([(0.5, 1.0), (0.6, 4.0)])
        with pytest.raises(PreconditionError):
            mixture_cdf([(1.0, 0.0)])
        with pytest.raises(ValidationError):
            MixtureTarget(components=[(0.5, 1.0)])

    def test_target_variance(self):
        """The target variance of a mixture is its mean eta."""
        assert target_variance(MixtureTarget(components=[(0.5, 1.0), (0.5, 4.0)])) == 2.5
        assert target_variance(NormalTarget(variance=3.0)) == 3.0

    def test_ks_distance_of_exact_quantiles(self):
        """Exact midpoint quantiles sit at distance 1/(2m)."""
        m = 1000
        sample = special.ndtri((np.arange(1, m + 1) - 0.5) / m)
        assert ks_distance(sample, standard_normal_cdf) == pytest.approx(0.5 / m, abs=1e-9)

    def test_ks_distance_is_order_free(self):
        """The KS distance ignores sample order."""
        sample = np.array([0.3, -1.2, 2.0, 0.1])
        cdf = target_cdf(NormalTarget(variance=1.0))
        assert ks_distance(sample, cdf) == ks_distance(sample[::-1], cdf)


def _config(model, weights, n=64, replicates=2000, target=None, seed=0):
    return SimulationConfig(
        model=model,
        weights=weights,
        n=n,
        replicates=replicates,
        master_seed=seed,
        target=target or NormalTarget(variance=1.0),
    )


@pytest.mark.unit
class TestReplicates:
    def test_simulate_sn_is_reproducible(self, iid_normal, delta_weights):
        """One seed gives one S_n."""
        assert simulate_sn(iid_normal, delta_weights, 32, seed=5) == simulate_sn(
            iid_normal, delta_weights, 32, seed=5
        )

    def test_workers_do_not_change_values(self, geometric_model, delta_weights):
        """Replicate values do not depend on the worker count."""
        config = _config(geometric_model, delta_weights, n=128, replicates=64, seed=9)
        np.testing.assert_array_equal(
            replicate_values(config, workers=1), replicate_values(config, workers=4)
        )

    def test_failed_replicate_carries_index(self, delta_weights):
        """A failing replicate reports its index."""
        model = CausalLinearModel(coefficients=CounterexampleCoefficients(psi="zero", cutoff=100))
        with pytest.raises(ReplicateError) as excinfo:
            replicate_values(_config(model, delta_weights, n=8, replicates=3))
        assert excinfo.value.index == 0

    def test_variance_ratio_needs_replicates(self, iid_normal, delta_weights):
        """The variance ratio needs enough replicates for a CI."""
        with pytest.raises(PreconditionError):
            empirical_variance_ratio(_config(iid_normal, delta_weights, replicates=10))

    def test_weighted_square_functional(self, iid_normal, delta_weights):
        """For unit-variance i.i.d. innovations the weighted mean square tends to 1."""
        value = weighted_square_functional(iid_normal, delta_weights, 20_000, seed=1)
        assert value == pytest.approx(1.0, abs=0.05)

    def test_weighted_square_functional_of_a_zero_path(self, iid_normal, geometric_weights):
        """An injected path of zeros gives zero; a path of the wrong length is refused."""
        support = np.zeros(len(window_coefficients(geometric_weights, 64).values))
        value = weighted_square_functional(iid_normal, geometric_weights, 64, seed=0, path=support)
        assert value == 0.0
        with pytest.raises(PreconditionError):
            weighted_square_functional(
                iid_normal, geometric_weights, 64, seed=0, path=np.zeros(support.size + 1)
            )

    def test_weighted_square_functional_follows_the_realized_scale(self, delta_weights):
        """On a nonergodic path the functional converges to the square of that path's scale."""
        model = NonergodicScaleModel(scales=[1.0, 2.0], probabilities=[0.5, 0.5])
        n = 100_000
        seen = set()
        for seed in range(20):
            scale = model.scales[model.identify_component(sample_path(model, -n, -1, seed))]
            value = weighted_square_functional(model, delta_weights, n, seed)
            assert value == pytest.approx(scale * scale, abs=0.1)
            seen.add(scale)
        assert 2.0 in seen


@pytest.mark.slow
class TestMonteCarloClt:
    def test_exact_normal_baseline(self, iid_normal, delta_weights):
        """Gaussian partial sums are exactly normal."""
        config = _config(iid_normal, delta_weights, n=1024)
        report = monte_carlo_clt(config)
        assert report.passed
        assert report.ks_distance < 0.05
        assert report.model_dump(by_alias=True)["pass"] is True
        assert "runtime_ms" not in report.deterministic_dict()
        ratio = empirical_variance_ratio(config)
        assert ratio.ratio == pytest.approx(1.0, rel=0.1)

    def test_dependent_innovations(self, geometric_model, delta_weights):
        """Geometric innovations reach the normal law with long-run variance 4."""
        config = _config(geometric_model, delta_weights, n=1024, target=NormalTarget(variance=4.0))
        assert monte_carlo_clt(config, workers=4).passed

    def test_long_memory_weights(self, iid_normal):
        """Long-memory weights keep the CLT for i.i.d. innovations."""
        config = SimulationConfig(
            model=iid_normal,
            weights=PowerDecayWeights(exponent=0.7),
            n=512,
            replicates=2000,
            rel_tail_tol=0.05,
            target=NormalTarget(variance=1.0),
        )
        assert monte_carlo_clt(config, workers=4).passed

    def test_martingale_differences(self, delta_weights):
        """Martingale differences satisfy the CLT with their second moment."""
        model = MdsProductModel()
        target = NormalTarget(variance=model.second_moment)
        config = _config(model, delta_weights, n=512, target=target)
        assert monte_carlo_clt(config).passed

    def test_scale_mixture_separates_from_normal(self, scale_mixture, delta_weights):
        """A nonergodic scale mixture matches its mixture law and not the normal one."""
        mixture = MixtureTarget(components=scale_mixture.eta_components)
        config = _config(scale_mixture, delta_weights, n=256, target=mixture)
        values = replicate_values(config)
        assert ks_distance(values, target_cdf(mixture)) < 0.05
        normal = NormalTarget(variance=target_variance(mixture))
        assert ks_distance(values, target_cdf(normal)) > 0.05
