"""Target laws for S_n / b_n: a centered normal or a finite scale mixture of normals."""

import math
from typing import Annotated, Callable, List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special, stats

from linclt.errors import PreconditionError

Components = List[Tuple[float, float]]


def standard_normal_cdf(x: np.ndarray) -> np.ndarray:
    """Phi(x) via the Cephes ``ndtr`` routine (relative error near machine precision)."""
    return special.ndtr(x)


def _validate(components: Components) -> None:
    if not components:
        raise PreconditionError("a mixture needs at least one component")
    if any(w < 0 for w, _ in components):
        raise PreconditionError("mixture weights must be nonnegative")
    if any(v <= 0 for _, v in components):
        raise PreconditionError("component variances must be positive")
    if abs(math.fsum(w for w, _ in components) - 1.0) > 1e-12:
        raise PreconditionError("mixture weights must sum to 1")


def mixture_cdf(components: Components) -> Callable[[np.ndarray], np.ndarray]:
    """
    Return x -> sum_i w_i Phi(x / sqrt(v_i)), the law of sqrt(eta) N.

    Raises:
        PreconditionError: weights negative or not summing to 1, or a
            variance is not positive.
    """
    _validate(components)
    weights = np.array([w for w, _ in components])
    scales = np.sqrt(np.array([v for _, v in components]))

    def cdf(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return standard_normal_cdf(np.multiply.outer(x, 1.0 / scales)) @ weights

    return cdf


class NormalTarget(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["normal"] = "normal"
    variance: float = Field(gt=0.0)

    @property
    def components(self) -> Components:
        return [(1.0, self.variance)]


class MixtureTarget(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["mixture"] = "mixture"
    components: Components

    @model_validator(mode="after")
    def _check_components(self) -> "MixtureTarget":
        try:
            _validate(self.components)
        except PreconditionError as exc:
            raise ValueError(str(exc)) from exc
        return self


TargetSpec = Annotated[Union[NormalTarget, MixtureTarget], Field(discriminator="kind")]


def target_cdf(target: Union[NormalTarget, MixtureTarget]) -> Callable[[np.ndarray], np.ndarray]:
    return mixture_cdf(target.components)


def target_variance(target: Union[NormalTarget, MixtureTarget]) -> float:
    return math.fsum(w * v for w, v in target.components)


def ks_distance(sample: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Two-sided Kolmogorov-Smirnov distance sup |F_m - F| of a sample against ``cdf``."""
    result = stats.ks_1samp(np.sort(np.asarray(sample, dtype=float)), cdf, method="asymp")
    return float(result.statistic)
