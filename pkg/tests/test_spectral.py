"""Tests for autocovariances, the long-run variance and exact weighted variances."""

import math

import numpy as np
import pytest

from linclt.errors import MissingCertificateError, PreconditionError
from linclt.innovations.bernoulli import BernoulliMap
from linclt.innovations.counterexample import catalog_psi, counterexample_weights
from linclt.innovations.models import (
    BernoulliShiftModel,
    CausalLinearModel,
    CounterexampleCoefficients,
    GeometricCoefficients,
    TableCoefficients,
)
from linclt.innovations.rng import make_generator
from linclt.spectral.autocov import (
    AutocovarianceFunction,
    SpectralDensity,
    autocov_causal_linear,
    lag_correlations,
    lag_weights,
    long_run_variance,
    model_autocovariance,
    smoothness_ratio,
    unbounded_density_witness,
    variance_ratio_trace,
    weighted_variance,
)
from linclt.weights.window import (
    PowerDecayWeights,
    difference_ratio,
    smoothness_ratios,
    window_coefficients,
)


@pytest.mark.unit
class TestAutocovariance:
    def test_finite_table(self):
        """A finite table has exact, certified autocovariances."""
        gamma = autocov_causal_linear(TableCoefficients(table=[1.0, 0.5]), 3)
        np.testing.assert_allclose(gamma.values, [1.25, 0.5, 0.0, 0.0])
        assert gamma.tail_bound == 0.0
        assert gamma.source == "analytic"
        assert gamma.certified

    def test_geometric_closed_form(self):
        """Both summation routes reproduce the closed form."""
        gamma = autocov_causal_linear(GeometricCoefficients(ratio=0.5), 64)
        k = np.arange(65, dtype=float)
        np.testing.assert_allclose(gamma.values, 0.5**k / 0.75, rtol=1e-10, atol=1e-15)
        assert gamma.source == "truncated-series"
        assert gamma.at(-2) == gamma.at(2)
        assert gamma.at(1000) == 0.0

    def test_negative_lag_count(self):
        """A negative lag count is refused."""
        with pytest.raises(PreconditionError):
            autocov_causal_linear(GeometricCoefficients(ratio=0.5), -1)

    def test_iid_is_white(self, iid_normal):
        """I.i.d. innovations are white."""
        gamma = model_autocovariance(iid_normal, 8)
        np.testing.assert_array_equal(gamma.values, np.eye(9)[0])

    def test_bernoulli_linear_map(self):
        """The linear Bernoulli shift has its closed-form autocovariance."""
        model = BernoulliShiftModel(map=BernoulliMap(name="linear"))
        gamma = model_autocovariance(model, 10)
        assert gamma.at(0) == pytest.approx(1.0 / 12.0)
        assert gamma.at(3) == pytest.approx(1.0 / 96.0)
        assert long_run_variance(gamma).value == pytest.approx(0.25, abs=1e-3)

    def test_bernoulli_without_closed_form(self):
        """Maps without a closed form raise a missing certificate."""
        model = BernoulliShiftModel(map=BernoulliMap(name="oscillating"))
        with pytest.raises(MissingCertificateError):
            model_autocovariance(model, 4)


@pytest.mark.unit
class TestLongRunVariance:
    def test_geometric_long_run_variance(self, geometric_model):
        """The geometric long-run variance is 4 within its error bound."""
        lrv = long_run_variance(model_autocovariance(geometric_model, 64))
        assert lrv.bounded
        assert abs(lrv.value - 4.0) <= lrv.error_bound + 1e-12
        assert lrv.partial_sums[0][0] == 1

    def test_counterexample_is_possibly_unbounded(self):
        """The counterexample has no certified long-run variance."""
        model = CausalLinearModel(coefficients=CounterexampleCoefficients(psi="zero", cutoff=100))
        gamma = model_autocovariance(model, 32)
        assert not gamma.certified
        lrv = long_run_variance(gamma)
        assert lrv.value is None
        assert not lrv.bounded
        assert "possibly unbounded" in lrv.notes

    def test_witness_grows_with_blocks(self):
        """The density witness grows with each completed block."""
        construction = counterexample_weights(catalog_psi("zero"), 1000)
        witness = unbounded_density_witness(construction)
        values = [v for _, v in witness]
        assert values == sorted(values)
        u0 = construction.u[0]
        assert values[-1] >= u0 * construction.completed_blocks / 2

    def test_spectral_density_of_white_noise(self, iid_normal):
        """White noise has a flat density."""
        density = SpectralDensity(gamma=model_autocovariance(iid_normal, 4))
        np.testing.assert_allclose(density.evaluate(np.linspace(-3, 3, 7)), 1 / (2 * math.pi))
        assert density.sup_bound() == pytest.approx(1 / (2 * math.pi))

    def test_spectral_density_within_sup_bound(self, geometric_model):
        """On a 1024-point grid |f| stays inside the absolute-summability bound."""
        density = SpectralDensity(gamma=model_autocovariance(geometric_model, 128))
        bound = density.sup_bound()
        values = density.evaluate(np.linspace(-math.pi, math.pi, 1024))
        assert np.all(values <= bound * (1 + 1e-12))
        assert np.all(values >= -bound * (1 + 1e-12))
        # nonnegative covariances put the supremum at zero frequency
        assert values.max() <= 4.0 / (2 * math.pi) * (1 + 1e-10)

    def test_spectral_density_at_zero(self, geometric_model):
        """2 pi f(0) is the long-run variance."""
        density = SpectralDensity(gamma=model_autocovariance(geometric_model, 64))
        assert 2 * math.pi * density.evaluate(0.0) == pytest.approx(4.0, rel=1e-10)


@pytest.mark.unit
class TestWeightedVariance:
    def test_two_term_sum(self, geometric_model):
        """Two unit weights give the two-term bilinear form."""
        gamma = model_autocovariance(geometric_model, 8)
        # 2 gamma(0) + 2 gamma(1) = 8/3 + 4/3
        assert weighted_variance(gamma, np.ones(2)) == pytest.approx(4.0)

    def test_empty_weights(self, iid_normal):
        """Empty weight arrays are refused."""
        with pytest.raises(PreconditionError):
            weighted_variance(model_autocovariance(iid_normal, 2), np.array([]))

    def test_uncertified_lags(self):
        """Lags beyond an uncertified covariance are refused."""
        gamma = AutocovarianceFunction(
            values=np.array([1.0, 0.5]), tail_bound=math.inf, source="truncated-series"
        )
        with pytest.raises(PreconditionError):
            weighted_variance(gamma, np.ones(5))

    def test_lag_weights_agree_across_methods(self):
        """Direct and convolution lag weights agree."""
        d = make_generator(3).standard_normal(300)
        w = lag_weights(d, 120)
        direct = [np.dot(d[: len(d) - m], d[m:]) for m in range(121)]
        np.testing.assert_allclose(w, direct, rtol=1e-9, atol=1e-9)

    def test_lag_correlations_of_a_block(self):
        """A block of ones has triangular lag correlations."""
        np.testing.assert_allclose(lag_correlations(np.ones(4), 4), [1, 0.75, 0.5, 0.25, 0])

    @pytest.mark.parametrize(
        "model",
        [
            CausalLinearModel(coefficients=GeometricCoefficients(ratio=0.5)),
            CausalLinearModel(coefficients=TableCoefficients(table=[1.0, -0.7, 0.2])),
            BernoulliShiftModel(map=BernoulliMap(name="linear")),
            BernoulliShiftModel(map=BernoulliMap(name="square")),
            BernoulliShiftModel(map=BernoulliMap(name="jump")),
        ],
        ids=["geometric", "table", "bernoulli-linear", "bernoulli-square", "bernoulli-jump"],
    )
    def test_analytic_covariances_are_positive_semidefinite(self, model):
        """Every analytic autocovariance gives a nonnegative quadratic form."""
        gamma = model_autocovariance(model, 64)
        rng = make_generator(11, 3)
        for _ in range(100):
            d = rng.standard_normal(int(rng.integers(1, 65)))
            assert weighted_variance(gamma, d) >= -1e-9

    def test_bilinear_bound_on_random_instances(self):
        """The bilinear form lies between zero and the absolute-sum bound."""
        rng = make_generator(77, 2)
        for _ in range(100):
            rho = float(rng.uniform(0.05, 0.95))
            model = CausalLinearModel(coefficients=GeometricCoefficients(ratio=rho))
            gamma = model_autocovariance(model, 64)
            d = rng.standard_normal(int(rng.integers(1, 50)))
            abs_sum = gamma.values[0] + 2 * (np.sum(np.abs(gamma.values[1:])) + gamma.tail_bound)
            assert 0.0 <= weighted_variance(gamma, d) <= np.sum(d * d) * abs_sum * (1 + 1e-12)


@pytest.mark.unit
class TestVarianceRatioTrace:
    def test_iid_ratio_is_one(self, iid_normal, delta_weights):
        """For i.i.d. innovations the ratio is exactly one."""
        gamma = model_autocovariance(iid_normal, 4)
        points = variance_ratio_trace(delta_weights, gamma, [10, 100])
        for point in points:
            assert point.ratio == pytest.approx(1.0)
            assert point.rel_err == pytest.approx(0.0, abs=1e-12)

    def test_geometric_converges_to_four(self, geometric_model, delta_weights):
        """The geometric ratio approaches 4 as n grows."""
        gamma = model_autocovariance(geometric_model, 128)
        points = variance_ratio_trace(delta_weights, gamma, [16, 256, 4096])
        errors = [p.rel_err for p in points]
        assert errors[0] > errors[1] > errors[2]
        assert points[-1].ratio == pytest.approx(4.0, rel=0.02)

    def test_long_memory_weights_with_iid(self, iid_normal):
        """Long-memory weights keep the ratio at one for i.i.d. innovations."""
        gamma = model_autocovariance(iid_normal, 4)
        points = variance_ratio_trace(
            PowerDecayWeights(exponent=0.7), gamma, [64, 256], rel_tail_tol=0.05
        )
        assert all(p.ratio == pytest.approx(1.0) for p in points)


@pytest.mark.unit
class TestSmoothnessRatio:
    def test_block(self):
        """A block of ones of length m has ratio 2/m."""
        assert smoothness_ratio(np.ones(4)) == pytest.approx(0.5)

    def test_window(self, delta_weights):
        """Window coefficients are accepted directly."""
        assert smoothness_ratio(window_coefficients(delta_weights, 8)) == pytest.approx(0.25)

    def test_long_memory_window_shares_the_kernel(self):
        """The array form and the window form use one difference-ratio kernel."""
        w = window_coefficients(PowerDecayWeights(exponent=0.7), 1 << 12, rel_tail_tol=0.05)
        assert w.truncated
        r1 = smoothness_ratios(w).r1
        assert smoothness_ratio(w) == r1
        assert difference_ratio(w.values, open_right=True, norm_sq=w.bn_sq) == r1
        # as a bare array the support is closed on the right and normalized by its own mass
        assert smoothness_ratio(w.values) == difference_ratio(w.values)
        assert smoothness_ratio(w.values) >= r1

    def test_zero_array(self):
        """A zero array has no ratio."""
        with pytest.raises(PreconditionError):
            smoothness_ratio(np.zeros(3))
