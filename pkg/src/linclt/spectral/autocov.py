"""Autocovariances, spectral density, long-run variance and exact weighted variances."""

import logging
import math
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import signal

from linclt.errors import CertificationError, MissingCertificateError, PreconditionError
from linclt.innovations.counterexample import CounterexampleWeights
from linclt.innovations.models import (
    BernoulliShiftModel,
    CoefficientSequence,
    InnovationModel,
    truncation_depth,
)
from linclt.weights.window import (
    WeightSequence,
    WindowCoefficients,
    difference_ratio,
    smoothness_ratios,
    window_coefficients,
)

logger = logging.getLogger(__name__)

# Lag weights are formed by direct dot products up to this many lags.
DIRECT_LAGS = 64


class AutocovarianceFunction(BaseModel):
    """gamma(0..k_max) with a certified bound on sum_{k > k_max} |gamma(k)|."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    tail_bound: float
    inner_error: float = 0.0
    source: Literal["analytic", "truncated-series"]

    @property
    def k_max(self) -> int:
        return len(self.values) - 1

    @property
    def certified(self) -> bool:
        return math.isfinite(self.tail_bound)

    def at(self, k: int) -> float:
        k = abs(k)
        return float(self.values[k]) if k <= self.k_max else 0.0


def autocov_causal_linear(u: CoefficientSequence, k_max: int) -> AutocovarianceFunction:
    """
    gamma(k) = sum_j u_{k+j} u_j for 0 <= k <= k_max.

    Infinite sequences are materialized to k_max plus the sampling depth;
    the omitted inner terms are bounded by Cauchy-Schwarz against the
    certified square tail.

    Args:
        u: Projection coefficients of the causal linear model.
        k_max: Largest lag computed.

    Returns:
        gamma(0..k_max) with a bound on sum_{k > k_max} |gamma(k)|.

    Raises:
        PreconditionError: k_max is negative.
        CertificationError: the square tail of u is not certified.
    """
    if k_max < 0:
        raise PreconditionError(f"k_max must be nonnegative, got {k_max}")
    finite = u.length is not None
    negligible_tail = True
    if finite:
        m = u.length
    else:
        try:
            m = k_max + truncation_depth(u)
        except CertificationError:
            m = _materialized_length(u)
            negligible_tail = False
            if m <= k_max:
                raise
    v = u.values(m)
    full = signal.correlate(v, v, mode="full")
    values = np.zeros(k_max + 1)
    available = min(k_max + 1, m)
    values[:available] = full[m - 1 : m - 1 + available]
    values[0] = math.fsum(v * v)

    tail_at_m = u.tail_sq(m)
    if not math.isfinite(tail_at_m):
        raise CertificationError(f"square tail of {u.kind} coefficients is not certified")
    inner_error = 0.0
    if tail_at_m > 0.0:
        inner_error = math.sqrt(u.tail_sq(max(m - k_max, 0)) * tail_at_m)
    if negligible_tail:
        values[0] += tail_at_m

    if finite:
        tail_bound = math.fsum(full[m + k_max :]) if m - 1 > k_max else 0.0
    else:
        # sum_{k > K} gamma(k) <= (sum_i u_i) (sum_{i > K} u_i) for nonnegative u
        tail_bound = u.tail_abs(0) * u.tail_abs(k_max + 1)
    return AutocovarianceFunction(
        values=values,
        tail_bound=tail_bound,
        inner_error=inner_error,
        source="analytic" if finite else "truncated-series",
    )


def _materialized_length(u: CoefficientSequence) -> int:
    construction = getattr(u, "construction", None)
    if isinstance(construction, CounterexampleWeights):
        return construction.length
    raise CertificationError(f"square tail of {u.kind} coefficients is not certified")


def model_autocovariance(model: InnovationModel, k_max: int) -> AutocovarianceFunction:
    """
    Autocovariance of an innovation model from its analytic structure.

    Raises:
        MissingCertificateError: the model has no closed-form autocovariance.
    """
    if isinstance(model, BernoulliShiftModel):
        closed = model.map.autocovariance(k_max)
        if closed is None:
            raise MissingCertificateError(
                f"no closed-form autocovariance for map {model.map.label}"
            )
        values, tail = closed
        return AutocovarianceFunction(values=values, tail_bound=tail, source="analytic")
    return autocov_causal_linear(model.projection_coefficients(), k_max)


class SpectralDensity(BaseModel):
    """f(lambda) = (1/2pi)[gamma(0) + 2 sum_k gamma(k) cos(k lambda)]."""

    model_config = ConfigDict(frozen=True)

    gamma: AutocovarianceFunction

    def evaluate(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        k = np.arange(1, self.gamma.k_max + 1, dtype=float)
        series = np.cos(np.multiply.outer(lam, k)) @ self.gamma.values[1:]
        return (self.gamma.values[0] + 2.0 * series) / (2.0 * math.pi)

    def sup_bound(self) -> float:
        """(1/2pi)(gamma(0) + 2 sum |gamma(k)|), including the certified tail."""
        abs_sum = math.fsum(np.abs(self.gamma.values[1:])) + self.gamma.tail_bound
        return (abs(self.gamma.values[0]) + 2.0 * abs_sum) / (2.0 * math.pi)


class LongRunVariance(BaseModel):
    """2 pi f(0), or the possibly-unbounded outcome with a partial-sum trace."""

    value: Optional[float]
    error_bound: float
    bounded: bool
    partial_sums: List[Tuple[int, float]]
    notes: str = ""


def _partial_sum_trace(gamma: AutocovarianceFunction) -> List[Tuple[int, float]]:
    cumulative = gamma.values[0] + 2.0 * np.concatenate(([0.0], np.cumsum(gamma.values[1:])))
    trace = []
    k = 1
    while k <= gamma.k_max:
        trace.append((k, float(cumulative[k])))
        k *= 2
    if not trace or trace[-1][0] != gamma.k_max:
        trace.append((gamma.k_max, float(cumulative[gamma.k_max])))
    return trace


def long_run_variance(gamma: AutocovarianceFunction) -> LongRunVariance:
    """gamma(0) + 2 sum_{k >= 1} gamma(k) with error at most twice the tail bound."""
    trace = _partial_sum_trace(gamma)
    if not gamma.certified:
        return LongRunVariance(
            value=None,
            error_bound=math.inf,
            bounded=False,
            partial_sums=trace,
            notes="possibly unbounded spectral density: sum |gamma(k)| not certified",
        )
    value = float(gamma.values[0] + 2.0 * math.fsum(gamma.values[1:]))
    error = 2.0 * gamma.tail_bound + (2 * gamma.k_max + 1) * gamma.inner_error
    return LongRunVariance(value=value, error_bound=error, bounded=True, partial_sums=trace)


def unbounded_density_witness(
    construction: CounterexampleWeights,
) -> List[Tuple[int, float]]:
    """
    Lower bounds on sum_{k < n_{k+1}} gamma(k) at every completed block end.

    For nonnegative u, sum_k gamma(k) >= u_0 sum_k u_k, and each block adds
    more than u_0 / 2.
    """
    cumulative = np.cumsum(construction.u)
    u0 = float(construction.u[0])
    return [(right, u0 * float(cumulative[right - 1])) for right in construction.breakpoints[1:]]


def lag_weights(d: np.ndarray, max_lag: int) -> np.ndarray:
    """w(m) = sum_j d_j d_{j+m} for 0 <= m <= max_lag."""
    d = np.asarray(d, dtype=float)
    max_lag = min(max_lag, len(d) - 1)
    if max_lag <= DIRECT_LAGS:
        w = np.array([np.dot(d[: len(d) - m], d[m:]) for m in range(max_lag + 1)])
    else:
        full = signal.correlate(d, d, mode="full")
        w = full[len(d) - 1 : len(d) + max_lag]
    w[0] = math.fsum(d * d)
    return w


def weighted_variance(gamma: AutocovarianceFunction, d: np.ndarray) -> float:
    """
    E(sum_j d_j xi_j)^2 = sum_m w(m) gamma(m) with lag weights w.

    Raises:
        PreconditionError: d is empty, or lags beyond k_max are needed while the
            covariance tail is not certified.
    """
    d = np.asarray(d, dtype=float)
    if d.size == 0:
        raise PreconditionError("weight array is empty")
    needed = len(d) - 1
    if needed > gamma.k_max and not gamma.certified:
        raise PreconditionError(
            f"lag {needed} exceeds k_max {gamma.k_max} and the covariance tail is uncertified"
        )
    nonzero = np.flatnonzero(gamma.values)
    last = int(nonzero[-1]) if nonzero.size else 0
    lags = min(needed, last)
    w = lag_weights(d, lags)
    g = gamma.values[: lags + 1]
    return float(w[0] * g[0] + 2.0 * math.fsum(w[1:] * g[1:]))


def lag_correlations(d: np.ndarray, max_lag: int) -> np.ndarray:
    """A_k = sum_j d_j d_{j+k} / sum_j d_j^2 for 0 <= k <= max_lag."""
    d = np.asarray(d, dtype=float)
    w = lag_weights(d, max_lag)
    out = np.zeros(max_lag + 1)
    out[: len(w)] = w / w[0]
    return out


class RatioPoint(BaseModel):
    n: int
    ratio: float
    target: Optional[float]
    rel_err: Optional[float]


def variance_ratio_trace(
    a: WeightSequence,
    gamma: AutocovarianceFunction,
    n_list: List[int],
    rel_tail_tol: float = 1e-3,
) -> List[RatioPoint]:
    """
    Exact Var(S_n) / b_n^2 for every n in ``n_list``.

    The certified window support is handled exactly; the estimated mass
    beyond it enters with the long-run variance.

    Args:
        a: Coefficient sequence.
        gamma: Autocovariance of the innovations.
        n_list: Window lengths.
        rel_tail_tol: Tail tolerance of each window.

    Returns:
        One point per n with the ratio, its target and the relative error.
    """
    lrv = long_run_variance(gamma)
    points = []
    for n in n_list:
        w = window_coefficients(a, n, rel_tail_tol)
        stored = weighted_variance(gamma, w.values)
        if w.truncated and lrv.value is not None:
            ratio = (stored + lrv.value * w.tail_estimate) / w.bn_sq
        else:
            ratio = stored / w.stored_sq
        rel_err = abs(ratio - lrv.value) / abs(lrv.value) if lrv.value else None
        points.append(RatioPoint(n=n, ratio=ratio, target=lrv.value, rel_err=rel_err))
        logger.debug("variance ratio at n=%d: %.6g", n, ratio)
    return points


def smoothness_ratio(d: Union[np.ndarray, WindowCoefficients]) -> float:
    """
    (1/sum d_j^2) sum |d_j - d_{j-1}|^2 for a zero-extended array.

    Raises:
        PreconditionError: the array is identically zero.
    """
    if isinstance(d, WindowCoefficients):
        return smoothness_ratios(d).r1
    return difference_ratio(d)
