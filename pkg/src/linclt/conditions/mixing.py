"""Mixing-coefficient conditions: the quantile integral, its moment form and a Rio probe."""

import logging
import math
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate

from linclt.conditions.reports import ConditionReport, dyadic_trace
from linclt.errors import PreconditionError
from linclt.innovations.models import (
    IidModel,
    InnovationModel,
    MdsProductModel,
    NonergodicScaleModel,
    sample_path,
)

logger = logging.getLogger(__name__)

ALPHA_CEILING = 0.25
ENVELOPE_CEILING = 1.0


class ConstantQuantile(BaseModel):
    """Q(u) = level, that is |xi_0| = level almost surely."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["constant"] = "constant"
    level: float = Field(default=1.0, gt=0.0)

    def __call__(self, u: float) -> float:
        return self.level

    def integral_sq(self, x: float) -> float:
        return self.level**2 * x

    @property
    def power(self) -> float:
        return 1.0


class PowerQuantile(BaseModel):
    """Q(u) = u^{-s} with s < 1/2, so that Q^2 is integrable at 0."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["power"] = "power"
    exponent: float = Field(ge=0.0, lt=0.5)

    def __call__(self, u: float) -> float:
        return u ** (-self.exponent)

    def integral_sq(self, x: float) -> float:
        return x ** (1.0 - 2.0 * self.exponent) / (1.0 - 2.0 * self.exponent)

    @property
    def power(self) -> float:
        """int_0^x Q^2 is proportional to x to this power."""
        return 1.0 - 2.0 * self.exponent


QuantileSpec = Annotated[Union[ConstantQuantile, PowerQuantile], Field(discriminator="kind")]


class AlphaSequence(BaseModel):
    """Mixing coefficients alpha(k), k >= 1, supplied analytically."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: str
    family: Literal["alpha-bar", "alpha"] = "alpha-bar"

    def values(self, k: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def power_tail(self, k_last: int, e: float, w: float = 0.0) -> Tuple[float, float]:
        """Lower and upper bounds on sum_{k > k_last} k^w alpha(k)^e."""
        raise NotImplementedError

    def term_decay(self, e: float, w: float = 0.0) -> Optional[float]:
        """Exponent r with k^w alpha(k)^e proportional to k^{-r}, when alpha is a power law."""
        return None

    def diverges(self, e: float, w: float = 0.0) -> bool:
        """True when sum k^w alpha(k)^e is certified infinite."""
        decay = self.term_decay(e, w)
        return decay is not None and decay <= 1.0 and bool(self.values(np.array([1]))[0] > 0)


class GeometricAlpha(AlphaSequence):
    """alpha(k) = scale * ratio^k."""

    kind: Literal["geometric"] = "geometric"
    scale: float = Field(default=0.25, ge=0.0)
    ratio: float = Field(gt=0.0, lt=1.0)

    def values(self, k: np.ndarray) -> np.ndarray:
        return self.scale * self.ratio ** np.asarray(k, dtype=float)

    def power_tail(self, k_last: int, e: float, w: float = 0.0) -> Tuple[float, float]:
        q = self.ratio**e * ((k_last + 2.0) / (k_last + 1.0)) ** w
        first = (k_last + 1.0) ** w * (self.scale * self.ratio ** (k_last + 1)) ** e
        return 0.0, first / (1.0 - q)


class PowerAlpha(AlphaSequence):
    """alpha(k) = scale * k^{-exponent}."""

    kind: Literal["power"] = "power"
    scale: float = Field(default=1.0, ge=0.0)
    exponent: float = Field(gt=0.0)

    def values(self, k: np.ndarray) -> np.ndarray:
        return self.scale * np.asarray(k, dtype=float) ** (-self.exponent)

    def term_decay(self, e: float, w: float = 0.0) -> Optional[float]:
        return self.exponent * e - w

    def power_tail(self, k_last: int, e: float, w: float = 0.0) -> Tuple[float, float]:
        decay = self.exponent * e - w
        if decay <= 1.0:
            return math.inf, math.inf
        c = self.scale**e / (decay - 1.0)
        return c * (k_last + 1.0) ** (1.0 - decay), c * float(k_last) ** (1.0 - decay)


class MDependentAlpha(AlphaSequence):
    """alpha(k) = level for k <= m and 0 afterwards."""

    kind: Literal["m-dependent"] = "m-dependent"
    m: int = Field(ge=0)
    level: float = Field(default=0.25, ge=0.0)

    def values(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k)
        return np.where(k <= self.m, self.level, 0.0)

    def power_tail(self, k_last: int, e: float, w: float = 0.0) -> Tuple[float, float]:
        if k_last >= self.m:
            return 0.0, 0.0
        k = np.arange(k_last + 1, self.m + 1, dtype=float)
        exact = math.fsum(k**w * self.level**e)
        return exact, exact


class TableAlpha(AlphaSequence):
    """Finitely many nonzero coefficients alpha(1), alpha(2), ..."""

    kind: Literal["table"] = "table"
    table: List[float]

    def values(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        padded = np.concatenate((np.asarray(self.table, dtype=float), [0.0]))
        return padded[np.minimum(k - 1, len(self.table))]

    def power_tail(self, k_last: int, e: float, w: float = 0.0) -> Tuple[float, float]:
        rest = np.asarray(self.table[k_last:], dtype=float)
        k = np.arange(k_last + 1, k_last + 1 + len(rest), dtype=float)
        exact = math.fsum(k**w * rest**e)
        return exact, exact


AlphaSpec = Annotated[
    Union[GeometricAlpha, PowerAlpha, MDependentAlpha, TableAlpha],
    Field(discriminator="kind"),
]


def _check_alpha(alpha: AlphaSequence, k_cap: int) -> np.ndarray:
    values = alpha.values(np.arange(1, k_cap + 1))
    if np.any(values < 0) or np.any(values > ENVELOPE_CEILING):
        raise PreconditionError("mixing coefficients must lie in [0, 1]")
    if np.any(np.diff(values) > 0):
        raise PreconditionError("mixing coefficients must be nonincreasing")
    return values


def _family_note(alpha: AlphaSequence, values: np.ndarray) -> str:
    if alpha.family == "alpha":
        note = "coefficients supplied as alpha(k); ergodicity is assumed, not verified"
    else:
        note = "coefficients supplied as alpha-bar(k)"
    if np.any(values > ALPHA_CEILING):
        note += "; values above 1/4 are read as an envelope of the coefficients"
    return note


def mixingale_integral(
    q: Union[ConstantQuantile, PowerQuantile], alpha: AlphaSequence, k_cap: int = 10_000
) -> ConditionReport:
    """
    sum_{k >= 1} int_0^{alpha(k)} Q^2(u) du, one adaptive quadrature per term.

    The remainder beyond ``k_cap`` uses the analytic form of alpha and the
    power law of int_0^x Q^2; the reported value adds the midpoint of its
    bounds.

    Args:
        q: Quantile function of |xi_0|.
        alpha: Nonincreasing mixing envelope.
        k_cap: Terms integrated numerically before the analytic remainder.

    Returns:
        Partial sums over k with the remainder bounds in the notes.

    Raises:
        PreconditionError: alpha leaves [0, 1] or increases.
    """
    values = _check_alpha(alpha, k_cap)
    terms = np.zeros(k_cap)
    for i, a in enumerate(values):
        if a > 0.0:
            terms[i], _ = integrate.quad(lambda u: q(u) ** 2, 0.0, float(a))
    cumulative = np.cumsum(terms)
    trace = dyadic_trace(cumulative)

    # int_0^x Q^2 = c x^e for both quantile families
    e = q.power
    c = q.integral_sq(1.0)
    if alpha.diverges(e):
        return ConditionReport(
            condition_id="eq13-mixingale",
            verdict="violated",
            partial_sums=trace,
            notes=(
                f"terms are c k^(-{alpha.term_decay(e):.4g}) with exponent at most 1, "
                "a divergent p-series; " + _family_note(alpha, values)
            ),
            coefficient_family=alpha.family,
        )
    lower, upper = alpha.power_tail(k_cap, e)
    value = float(cumulative[-1]) + c * 0.5 * (lower + upper)
    return ConditionReport(
        condition_id="eq13-mixingale",
        verdict="satisfied",
        value=value,
        partial_sums=trace,
        notes=(
            f"remainder beyond k={k_cap} in [{c * lower:.3g}, {c * upper:.3g}]; "
            + _family_note(alpha, values)
        ),
        coefficient_family=alpha.family,
    )


def moment_form_sufficient(t: float, alpha: AlphaSequence, k_cap: int = 10_000) -> ConditionReport:
    """
    sum_k k^{2/(t-2)} alpha(k), sufficient for the quantile condition when E|xi_0|^t < inf.

    Raises:
        PreconditionError: t <= 2, or alpha leaves [0, 1] or increases.
    """
    if t <= 2.0:
        raise PreconditionError(f"moment order must exceed 2, got {t}")
    values = _check_alpha(alpha, k_cap)
    w = 2.0 / (t - 2.0)
    k = np.arange(1, k_cap + 1, dtype=float)
    cumulative = np.cumsum(k**w * values)
    trace = dyadic_trace(cumulative)
    if alpha.diverges(1.0, w):
        return ConditionReport(
            condition_id="moment-form",
            verdict="violated",
            partial_sums=trace,
            notes=(
                f"terms decay like k^(-{alpha.term_decay(1.0, w):.4g}), "
                "at most k^-1, so the partial sums grow without bound"
            ),
            coefficient_family=alpha.family,
        )
    lower, upper = alpha.power_tail(k_cap, 1.0, w)
    return ConditionReport(
        condition_id="moment-form",
        verdict="satisfied",
        value=float(cumulative[-1]) + 0.5 * (lower + upper),
        partial_sums=trace,
        notes=f"k^{w:.4g} weights; remainder beyond k={k_cap} at most {upper:.3g}",
        coefficient_family=alpha.family,
    )


class RioPoint(BaseModel):
    j: int
    k: int
    lhs: float
    std_error: float
    rhs: float

    @property
    def holds(self) -> bool:
        return abs(self.lhs) <= self.rhs + 4.0 * self.std_error


class RioProbe(BaseModel):
    points: List[RioPoint]

    @property
    def holds(self) -> bool:
        return all(p.holds for p in self.points)


DEFAULT_LAGS = [(0, 1), (0, 2), (0, 3), (1, 0), (1, 1), (2, 1)]


def rio_bound_probe(
    model: InnovationModel,
    alpha: AlphaSequence,
    seed: int,
    path_length: int = 200_000,
    lags: Optional[List[Tuple[int, int]]] = None,
) -> RioProbe:
    """
    Compare |E(xi_k E(xi_0 | F_{-j}))| with int_0^{alpha(k + j)} Q^2(u) du.

    Only martingale-difference models are probed: E(xi_0 | F_{-j}) vanishes
    for j >= 1 and equals xi_0 for j = 0, so the left side is a lag covariance
    estimated from one seeded path. Q^2 is integrated empirically as the mean
    of xi^2 over the largest fraction alpha of |xi|.

    Raises:
        PreconditionError: the model is not a martingale-difference model, or a
            lag pair has k + j = 0.
    """
    if not isinstance(model, (IidModel, MdsProductModel, NonergodicScaleModel)):
        raise PreconditionError(f"{model.kind} innovations are not martingale differences")
    lags = lags or DEFAULT_LAGS
    path = sample_path(model, 0, path_length - 1, seed)
    ordered_sq = np.sort(path * path)[::-1]
    cumulative_sq = np.concatenate(([0.0], np.cumsum(ordered_sq)))

    points = []
    for j, k in lags:
        if k + j < 1:
            raise PreconditionError("the mixing lag k + j must be positive")
        level = float(alpha.values(np.array([k + j]))[0])
        top = int(math.ceil(level * path_length))
        rhs = float(cumulative_sq[top]) / path_length
        if j >= 1:
            lhs, se = 0.0, 0.0
        else:
            products = path[k:] * path[: path_length - k]
            lhs = float(np.mean(products))
            se = float(np.std(products, ddof=1) / math.sqrt(len(products)))
        points.append(RioPoint(j=j, k=k, lhs=lhs, std_error=se, rhs=rhs))
    logger.debug("rio probe on %s: %d lag pairs", model.kind, len(points))
    return RioProbe(points=points)
