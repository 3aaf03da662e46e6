"""Stationary innovation models with samplers and their analytic conditional structure."""

import logging
import math
from functools import cached_property
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import signal

from linclt.errors import CertificationError, MissingCertificateError, PreconditionError
from linclt.innovations.bernoulli import BernoulliMap
from linclt.innovations.counterexample import (
    CounterexampleWeights,
    PsiName,
    catalog_psi,
    counterexample_weights,
)
from linclt.innovations.rng import make_generator

logger = logging.getLogger(__name__)

# Each sampled xi_k is truncated with an L2 error below 1e-10.
TRUNCATION_SQ = 1e-20
MAX_DEPTH = 1 << 22


# --------------------------------------------------------------------------
# Coefficient sequences u_0, u_1, ... of causal linear innovations
# --------------------------------------------------------------------------


class CoefficientSequence(BaseModel):
    """Nonnegative square-summable coefficients u_i, i >= 0."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: str

    @property
    def length(self) -> Optional[int]:
        """Number of possibly nonzero coefficients, None when infinite."""
        return None

    def values(self, m: int) -> np.ndarray:
        """First ``m`` coefficients."""
        raise NotImplementedError

    def tail_sq(self, m: int) -> float:
        """Upper bound on sum_{i >= m} u_i^2."""
        raise NotImplementedError

    def tail_abs(self, m: int) -> float:
        """Upper bound on sum_{i >= m} u_i; infinite when none is certified."""
        return math.inf


class TableCoefficients(CoefficientSequence):
    kind: Literal["table"] = "table"
    table: List[float]

    @model_validator(mode="after")
    def _check_table(self) -> "TableCoefficients":
        if not self.table:
            raise ValueError("coefficient table is empty")
        if any(v < 0 for v in self.table):
            raise ValueError("coefficients must be nonnegative")
        return self

    @property
    def length(self) -> Optional[int]:
        return len(self.table)

    def values(self, m: int) -> np.ndarray:
        out = np.zeros(m)
        k = min(m, len(self.table))
        out[:k] = self.table[:k]
        return out

    def tail_sq(self, m: int) -> float:
        rest = np.asarray(self.table[m:], dtype=float)
        return math.fsum(rest * rest)

    def tail_abs(self, m: int) -> float:
        return math.fsum(self.table[m:])


class GeometricCoefficients(CoefficientSequence):
    kind: Literal["geometric"] = "geometric"
    ratio: float = Field(gt=0.0, lt=1.0)

    def values(self, m: int) -> np.ndarray:
        return self.ratio ** np.arange(m, dtype=float)

    def tail_sq(self, m: int) -> float:
        return self.ratio ** (2 * m) / (1.0 - self.ratio**2)

    def tail_abs(self, m: int) -> float:
        return self.ratio**m / (1.0 - self.ratio)


class CounterexampleCoefficients(CoefficientSequence):
    """Block coefficients u_j = 1/n_{k+1} built from a catalog psi sequence."""

    kind: Literal["counterexample"] = "counterexample"
    psi: PsiName = "inverse-log"
    cutoff: int = Field(default=1_000_000, ge=3)

    @cached_property
    def construction(self) -> CounterexampleWeights:
        return counterexample_weights(catalog_psi(self.psi), self.cutoff)

    def values(self, m: int) -> np.ndarray:
        u = self.construction.u
        if m > len(u):
            raise CertificationError(
                f"counterexample coefficients are materialized only up to {len(u)}"
            )
        return u[:m].copy()

    def tail_sq(self, m: int) -> float:
        u = self.construction.u
        rest = u[m:]
        return math.fsum(rest * rest) + self.construction.tail_sq_bound()


CoefficientSpec = Annotated[
    Union[TableCoefficients, GeometricCoefficients, CounterexampleCoefficients],
    Field(discriminator="kind"),
]


def truncation_depth(u: CoefficientSequence) -> int:
    """Smallest depth D with sum_{i >= D} u_i^2 below the sampling tolerance."""
    if u.length is not None:
        return u.length
    depth = 1
    while depth <= MAX_DEPTH:
        if u.tail_sq(depth) <= TRUNCATION_SQ:
            lo, hi = depth // 2, depth
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if u.tail_sq(mid) <= TRUNCATION_SQ:
                    hi = mid
                else:
                    lo = mid
            return hi
        depth *= 2
    raise CertificationError(
        f"truncation depth for {u.kind} coefficients cannot be certified"
    )


# --------------------------------------------------------------------------
# Innovation models
# --------------------------------------------------------------------------


class Certificates(BaseModel):
    """Which quantities a model exposes in closed form."""

    autocov: bool
    projection_norms: bool
    cond_exp_norms: bool
    gamma_j: bool


ALL_CERTIFIED = Certificates(
    autocov=True, projection_norms=True, cond_exp_norms=True, gamma_j=True
)


class InnovationModel(BaseModel):
    """Base class for the stationary sequences (xi_k)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: str

    @property
    def certificates(self) -> Certificates:
        return ALL_CERTIFIED

    @property
    def second_moment(self) -> float:
        """E xi_0^2."""
        raise NotImplementedError

    def projection_coefficients(self) -> CoefficientSequence:
        """
        Coefficients u_i = ||P_{-i} xi_0||_2 of the causal representation.

        For models whose conditional structure is that of a causal linear
        sequence, E[xi_k E(xi_0 | F_{-j})] = sum_{i >= j} u_{k+i} u_i.

        Raises:
            MissingCertificateError: no analytic conditional structure.
        """
        return TableCoefficients(table=[math.sqrt(self.second_moment)])

    def sample(self, lo: int, hi: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class IidModel(InnovationModel):
    kind: Literal["iid"] = "iid"
    distribution: Literal["normal", "rademacher", "uniform"] = "normal"

    @property
    def second_moment(self) -> float:
        return 1.0

    def sample(self, lo: int, hi: int, rng: np.random.Generator) -> np.ndarray:
        size = hi - lo + 1
        if self.distribution == "normal":
            return rng.standard_normal(size)
        if self.distribution == "rademacher":
            return np.where(rng.random(size) < 0.5, -1.0, 1.0)
        root3 = math.sqrt(3.0)
        return rng.uniform(-root3, root3, size)


class MdsProductModel(InnovationModel):
    """xi_k = Z_k h(Z_{k-1}) with Z i.i.d. standard normal."""

    kind: Literal["mds-product"] = "mds-product"
    h_knots: Optional[List[float]] = None
    h_values: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check_table(self) -> "MdsProductModel":
        if (self.h_knots is None) != (self.h_values is None):
            raise ValueError("h_knots and h_values must be given together")
        if self.h_knots is not None:
            if len(self.h_knots) != len(self.h_values or []) or len(self.h_knots) < 2:
                raise ValueError("h table needs matching knots and values, at least two")
            if any(b <= a for a, b in zip(self.h_knots, self.h_knots[1:])):
                raise ValueError("h_knots must be strictly increasing")
        return self

    def h(self, z: np.ndarray) -> np.ndarray:
        if self.h_knots is None:
            return 1.0 + 0.5 * np.tanh(z)
        return np.interp(z, self.h_knots, self.h_values)

    @cached_property
    def second_moment(self) -> float:
        nodes, weights = hermegauss(80)
        return float(weights @ self.h(nodes) ** 2 / math.sqrt(2.0 * math.pi))

    def sample(self, lo: int, hi: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(hi - lo + 2)
        return z[1:] * self.h(z[:-1])


class CausalLinearModel(InnovationModel):
    """xi_k = sum_{i >= 0} u_i Y_{k-i} with Y i.i.d. standard normal."""

    kind: Literal["causal-linear"] = "causal-linear"
    coefficients: CoefficientSpec

    @property
    def second_moment(self) -> float:
        return self.coefficients.tail_sq(0)

    def projection_coefficients(self) -> CoefficientSequence:
        return self.coefficients

    def sample(self, lo: int, hi: int, rng: np.random.Generator) -> np.ndarray:
        depth = truncation_depth(self.coefficients)
        u = self.coefficients.values(depth)
        y = rng.standard_normal(hi - lo + depth)
        return signal.convolve(y, u, mode="valid")


class BernoulliShiftModel(InnovationModel):
    """xi_n = g(Y_n) - E g(Y_0) with Y_n = sum_{k >= 0} 2^{-k-1} eps_{n-k}."""

    kind: Literal["bernoulli-shift"] = "bernoulli-shift"
    map: BernoulliMap
    bit_depth: int = Field(default=64, ge=8, le=64)

    @property
    def certificates(self) -> Certificates:
        analytic = self.map.autocovariance(0) is not None
        return Certificates(
            autocov=analytic,
            projection_norms=False,
            cond_exp_norms=False,
            gamma_j=False,
        )

    @property
    def second_moment(self) -> float:
        closed = self.map.autocovariance(0)
        if closed is None:
            raise MissingCertificateError(f"no closed-form variance for {self.map.label}")
        return float(closed[0][0])

    def projection_coefficients(self) -> CoefficientSequence:
        raise MissingCertificateError(
            f"no analytic conditional structure for map {self.map.label}"
        )

    def sample(self, lo: int, hi: int, rng: np.random.Generator) -> np.ndarray:
        depth = self.bit_depth
        # bits are drawn from the newest index backwards, so a larger depth
        # only appends older bits and keeps the shared ones
        draws = rng.random(hi - lo + depth)
        bits = (draws < 0.5).astype(float)[::-1]
        weights = 2.0 ** -(np.arange(depth, dtype=float) + 1.0)
        y = signal.convolve(bits, weights, mode="valid", method="direct")
        y = y + 2.0 ** -(depth + 1)
        return self.map(y) - self.map.mean


class NonergodicScaleModel(InnovationModel):
    """xi_k = V Z_k with V drawn once per path from a finite scale mixture."""

    kind: Literal["nonergodic-scale"] = "nonergodic-scale"
    scales: List[float]
    probabilities: List[float]

    @model_validator(mode="after")
    def _check_mixture(self) -> "NonergodicScaleModel":
        if not self.scales or len(self.scales) != len(self.probabilities):
            raise ValueError("scales and probabilities must have equal, nonzero length")
        if any(v <= 0 for v in self.scales):
            raise ValueError("scales must be positive")
        if any(p < 0 for p in self.probabilities):
            raise ValueError("probabilities must be nonnegative")
        if abs(math.fsum(self.probabilities) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        return self

    @property
    def second_moment(self) -> float:
        return math.fsum(p * v * v for p, v in zip(self.probabilities, self.scales))

    @property
    def eta_components(self) -> List[Tuple[float, float]]:
        """Law of eta as (probability, value) pairs."""
        return [(p, v * v) for p, v in zip(self.probabilities, self.scales)]

    def sample(self, lo: int, hi: int, rng: np.random.Generator) -> np.ndarray:
        scale = self.scales[int(rng.choice(len(self.scales), p=self.probabilities))]
        return scale * rng.standard_normal(hi - lo + 1)

    def identify_component(self, path: np.ndarray) -> int:
        """Index of the scale whose variance is closest to the path's sample variance."""
        variance = float(np.mean(np.asarray(path) ** 2))
        gaps = [abs(variance - v * v) for v in self.scales]
        return int(np.argmin(gaps))


ModelSpec = Annotated[
    Union[
        IidModel,
        MdsProductModel,
        CausalLinearModel,
        BernoulliShiftModel,
        NonergodicScaleModel,
    ],
    Field(discriminator="kind"),
]


def sample_path(model: InnovationModel, lo: int, hi: int, seed: int) -> np.ndarray:
    """
    Sample xi_lo, ..., xi_hi (inclusive) from the stream keyed by ``seed``.

    Args:
        model: Innovation model.
        lo: First index.
        hi: Last index.
        seed: Key of the random stream.

    Returns:
        Array of length hi - lo + 1.

    Raises:
        PreconditionError: the range is empty.
        CertificationError: the model's truncation depth cannot be certified.
    """
    if hi < lo:
        raise PreconditionError(f"empty index range [{lo}, {hi}]")
    path = model.sample(lo, hi, make_generator(seed))
    logger.debug("sampled %s path of length %d", model.kind, len(path))
    return path
