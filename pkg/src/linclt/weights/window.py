"""Window coefficients of a linear process and the smoothness functionals on them."""

import logging
import math
from typing import Annotated, Dict, List, Literal, NamedTuple, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from linclt.errors import CertificationError, PreconditionError

logger = logging.getLogger(__name__)

# Support is doubled at most this many times while certifying the tail.
MAX_DOUBLINGS = 24
MAX_SUPPORT = 1 << 26
INEQUALITY_SLACK = 1e-9
WU_MAX_LENGTH = 64


class WeightSequence(BaseModel):
    """Coefficients (a_j) of a linear process, queryable at any integer index."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: str

    @property
    def support_start(self) -> int:
        """First index that may carry a nonzero coefficient."""
        return 0

    @property
    def support_end(self) -> Optional[int]:
        """Last index with a nonzero coefficient, None for infinite support."""
        return None

    def evaluate(self, idx: np.ndarray) -> np.ndarray:
        """Return a_j for every j in ``idx``."""
        raise NotImplementedError

    def coefficient(self, j: int) -> float:
        return float(self.evaluate(np.array([j]))[0])

    def tail_bounds(self, n: int, last: int) -> Tuple[float, float]:
        """Lower and upper bounds on sum_{j > last} b_{n,j}^2."""
        return 0.0, 0.0

    def window_sums(self, n: int, j_lo: int, j_hi: int) -> np.ndarray:
        """
        Sliding sums b_{n,j} = a_{j+1} + ... + a_{j+n} for j_lo <= j <= j_hi.

        Differences of extended-precision prefix sums; exact enough when the
        coefficients do not decay over the window range.

        Args:
            n: Window length.
            j_lo: First window index.
            j_hi: Last window index.

        Returns:
            Array of length j_hi - j_lo + 1.
        """
        coeffs = self.evaluate(np.arange(j_lo + 1, j_hi + n + 1))
        prefix = np.concatenate(([0.0], np.cumsum(coeffs, dtype=np.longdouble)))
        return (prefix[n:] - prefix[:-n]).astype(float)


class FiniteSupportWeights(WeightSequence):
    kind: Literal["finite-support"] = "finite-support"
    offset: int = 0
    values: List[float]

    @model_validator(mode="after")
    def _check_values(self) -> "FiniteSupportWeights":
        if not self.values:
            raise ValueError("finite-support weights need at least one value")
        return self

    @property
    def support_start(self) -> int:
        return self.offset

    @property
    def support_end(self) -> Optional[int]:
        return self.offset + len(self.values) - 1

    def evaluate(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        table = np.asarray(self.values, dtype=float)
        pos = idx - self.offset
        inside = (pos >= 0) & (pos < len(table))
        out = np.zeros(idx.shape, dtype=float)
        out[inside] = table[pos[inside]]
        return out


class PartialSumDeltaWeights(WeightSequence):
    """a_0 = 1 and every other coefficient zero, so S_n is a plain partial sum."""

    kind: Literal["partial-sum-delta"] = "partial-sum-delta"

    @property
    def support_end(self) -> Optional[int]:
        return 0

    def evaluate(self, idx: np.ndarray) -> np.ndarray:
        return (np.asarray(idx) == 0).astype(float)


class GeometricWeights(WeightSequence):
    kind: Literal["geometric"] = "geometric"
    ratio: float = Field(gt=0.0, lt=1.0)

    def evaluate(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        out = np.zeros(idx.shape, dtype=float)
        pos = idx >= 0
        out[pos] = self.ratio ** idx[pos].astype(float)
        return out

    def tail_bounds(self, n: int, last: int) -> Tuple[float, float]:
        # b_{n,j} = rho^{j+1} (1 - rho^n) / (1 - rho) for j >= 0
        rho = self.ratio
        scale = ((1.0 - rho**n) / (1.0 - rho)) ** 2
        exact = scale * rho ** (2 * (last + 2)) / (1.0 - rho * rho)
        return exact, exact

    def window_sums(self, n: int, j_lo: int, j_hi: int) -> np.ndarray:
        # closed form; prefix differences cancel once rho^j drops below eps
        log_rho = math.log(self.ratio)
        j = np.arange(j_lo, j_hi + 1, dtype=float)
        out = np.empty(j.shape, dtype=float)
        inside = j >= 0
        out[inside] = np.power(self.ratio, j[inside] + 1.0) * (-math.expm1(log_rho * n))
        # j < 0: the window starts at a_0 and ends at a_{j+n}
        out[~inside] = -np.expm1(log_rho * np.maximum(j[~inside] + n + 1.0, 0.0))
        return out / (1.0 - self.ratio)


class PowerDecayWeights(WeightSequence):
    """a_j = (1 + j)^(-beta) for j >= 0; long-range dependent when beta <= 1."""

    kind: Literal["power-decay"] = "power-decay"
    exponent: float = Field(gt=0.5)

    def evaluate(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        out = np.zeros(idx.shape, dtype=float)
        pos = idx >= 0
        out[pos] = (1.0 + idx[pos].astype(float)) ** (-self.exponent)
        return out

    def tail_bounds(self, n: int, last: int) -> Tuple[float, float]:
        # n (j + n + 1)^-beta <= b_{n,j} <= n (j + 2)^-beta, then integral bounds
        power = 1.0 - 2.0 * self.exponent
        denom = 2.0 * self.exponent - 1.0
        lower = n * n * (last + n + 2.0) ** power / denom
        upper = n * n * (last + 2.0) ** power / denom
        return lower, upper

    def window_sums(self, n: int, j_lo: int, j_hi: int) -> np.ndarray:
        # suffix sums accumulated from the small far end keep relative accuracy
        coeffs = self.evaluate(np.arange(j_lo + 1, j_hi + n + 1))
        suffix = np.concatenate((np.cumsum(coeffs[::-1], dtype=np.longdouble)[::-1], [0.0]))
        return (suffix[:-n] - suffix[n:]).astype(float)


WeightSpec = Annotated[
    Union[
        FiniteSupportWeights,
        PartialSumDeltaWeights,
        GeometricWeights,
        PowerDecayWeights,
    ],
    Field(discriminator="kind"),
]


class WindowCoefficients(BaseModel):
    """b_{n,j} = a_{j+1} + ... + a_{j+n} over a certified finite support."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: str
    n: int
    j_lo: int
    values: np.ndarray
    stored_sq: float
    tail_estimate: float
    tail_bound: float
    bn_sq: float

    @property
    def j_hi(self) -> int:
        return self.j_lo + len(self.values) - 1

    @property
    def support(self) -> Tuple[int, int]:
        return self.j_lo, self.j_hi

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.j_lo, self.j_hi + 1)

    @property
    def truncated(self) -> bool:
        """True when mass beyond the stored support was estimated, not zero."""
        return self.tail_estimate > 0.0

    def value(self, j: int) -> float:
        if self.j_lo <= j <= self.j_hi:
            return float(self.values[j - self.j_lo])
        return 0.0

def window_coefficients(
    a: WeightSequence, n: int, rel_tail_tol: float = 1e-3
) -> WindowCoefficients:
    """
    Compute the window coefficients of ``a`` at level ``n``.

    The right end of the support is doubled until the omitted squared mass,
    relative to b_n^2, is certified below ``rel_tail_tol``.

    Args:
        a: Coefficient sequence.
        n: Window length, at least 1.
        rel_tail_tol: Largest certified share of b_n^2 left outside the stored support.

    Returns:
        The stored b_{n,j}, their squared mass and the certified tail.

    Raises:
        PreconditionError: n < 1 or the tolerance is outside (0, 1).
        CertificationError: the tail could not be certified within the cap.
    """
    if n < 1:
        raise PreconditionError(f"n must be positive, got {n}")
    if not 0.0 < rel_tail_tol < 1.0:
        raise PreconditionError(f"rel_tail_tol must lie in (0, 1), got {rel_tail_tol}")

    j_lo = a.support_start - n
    end = a.support_end
    if end is not None:
        values = a.window_sums(n, j_lo, end - 1)
        stored = math.fsum(values * values)
        return WindowCoefficients(
            kind=a.kind,
            n=n,
            j_lo=j_lo,
            values=values,
            stored_sq=stored,
            tail_estimate=0.0,
            tail_bound=0.0,
            bn_sq=stored,
        )

    j_hi = max(a.support_start, 0) + n
    for _ in range(MAX_DOUBLINGS):
        if j_hi - j_lo + 1 > MAX_SUPPORT:
            break
        values = a.window_sums(n, j_lo, j_hi)
        stored = math.fsum(values * values)
        lower, upper = a.tail_bounds(n, j_hi)
        if stored > 0.0 and upper / (stored + lower) <= rel_tail_tol:
            estimate = 0.5 * (lower + upper)
            bn_sq = stored + estimate
            logger.debug(
                "certified %s window at n=%d with support [%d, %d]",
                a.kind,
                n,
                j_lo,
                j_hi,
            )
            return WindowCoefficients(
                kind=a.kind,
                n=n,
                j_lo=j_lo,
                values=values,
                stored_sq=stored,
                tail_estimate=estimate,
                tail_bound=upper / bn_sq,
                bn_sq=bn_sq,
            )
        j_hi = 2 * j_hi + 1

    raise CertificationError(
        f"truncation not certified for {a.kind} weights at n={n} "
        f"(tolerance {rel_tail_tol})"
    )


def difference_energy(values: np.ndarray, open_right: bool = False) -> Tuple[float, float]:
    """
    Return sum |d_j - d_{j-1}|^2 and sum |d_j^2 - d_{j-1}^2| for a zero-extended array.

    With ``open_right`` the array is taken to continue smoothly past its last
    entry, so no jump to zero is counted there.
    """
    tail = [] if open_right else [0.0]
    padded = np.concatenate(([0.0], values, tail))
    diffs = np.diff(padded)
    sq_diffs = np.diff(padded * padded)
    return math.fsum(diffs * diffs), math.fsum(np.abs(sq_diffs))


class SmoothnessRatios(NamedTuple):
    r1: float
    r2: float


def difference_ratio(
    values: np.ndarray, open_right: bool = False, norm_sq: Optional[float] = None
) -> float:
    """
    Squared first-difference energy of ``values`` relative to a squared norm.

    Args:
        values: Finite real sequence, zero-extended on the left.
        open_right: Whether the sequence continues past its last entry.
        norm_sq: Normalizer; defaults to the sum of squares of ``values``.

    Returns:
        sum |d_j - d_{j-1}|^2 / norm_sq.

    Raises:
        PreconditionError: the normalizer is zero.
    """
    values = np.asarray(values, dtype=float)
    if norm_sq is None:
        norm_sq = math.fsum(values * values)
    if norm_sq == 0.0:
        raise PreconditionError("difference ratio of a zero array is undefined")
    energy, _ = difference_energy(values, open_right=open_right)
    return energy / norm_sq


def smoothness_ratios(w: WindowCoefficients) -> SmoothnessRatios:
    """Normalized squared first differences of b_{n,.} and of b_{n,.}^2."""
    _, sq_energy = difference_energy(w.values, open_right=w.truncated)
    return SmoothnessRatios(
        r1=difference_ratio(w.values, open_right=w.truncated, norm_sq=w.bn_sq),
        r2=sq_energy / w.bn_sq,
    )


class BlockAverages(BaseModel):
    """Block means c_{n,k} over I_k = {(k-1)p+1, ..., kp} and their deviations."""

    p: int
    c: Dict[int, float]
    s1: float
    s2: float
    mass_ratio: float


def block_averages(w: WindowCoefficients, p: int) -> BlockAverages:
    """
    Average the window coefficients over consecutive blocks of size ``p``.

    Index j lies in block k = ceil(j / p). The stored support is zero-padded to
    whole blocks on both ends.

    Args:
        w: Window coefficients at some level n.
        p: Block size.

    Returns:
        Block means c_{n,k} with the deviations s1, s2 and the block mass ratio.

    Raises:
        PreconditionError: p < 1.
    """
    if p < 1:
        raise PreconditionError(f"block size must be positive, got {p}")
    k_first = -((-w.j_lo) // p)
    k_last = -((-w.j_hi) // p)
    start = (k_first - 1) * p + 1
    length = (k_last - k_first + 1) * p
    padded = np.zeros(length)
    padded[w.j_lo - start : w.j_lo - start + len(w.values)] = w.values

    blocks = padded.reshape(-1, p)
    means = blocks.mean(axis=1)
    dev = blocks - means[:, None]
    sq_dev = blocks * blocks - (means * means)[:, None]
    s1 = math.fsum((dev * dev).ravel()) / w.bn_sq
    s2 = math.fsum(np.abs(sq_dev).ravel()) / w.bn_sq
    mass = p * math.fsum(means * means) / w.bn_sq
    c = {k_first + i: float(m) for i, m in enumerate(means)}
    return BlockAverages(p=p, c=c, s1=s1, s2=s2, mass_ratio=mass)


class WuInequality(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def wu_inequality(a_seq: np.ndarray, psi: np.ndarray) -> WuInequality:
    """
    Evaluate sum a_n psi_n <= 3 sum n^{-1/2} psi_n (sum_{k>=n} a_k^2)^{1/2}.

    Both sequences are indexed from 1 and extended by zeros.
    """
    a_seq = np.asarray(a_seq, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if a_seq.shape != psi.shape:
        raise PreconditionError("a_seq and psi must have the same length")
    if np.any(a_seq < 0) or np.any(psi < 0):
        raise PreconditionError("both sequences must be nonnegative")
    if np.any(np.diff(psi) > 0):
        raise PreconditionError("psi must be nonincreasing")

    index = np.arange(1, len(a_seq) + 1, dtype=float)
    tails = np.cumsum((a_seq * a_seq)[::-1])[::-1]
    lhs = math.fsum(a_seq * psi)
    rhs = 3.0 * math.fsum(psi * np.sqrt(tails) / np.sqrt(index))
    return WuInequality(lhs=lhs, rhs=rhs, holds=lhs <= rhs + INEQUALITY_SLACK)


class WuTrials(NamedTuple):
    instances: int
    held: int
    worst_ratio: float


def wu_inequality_trials(
    rng: np.random.Generator, instances: int, max_length: int = WU_MAX_LENGTH
) -> WuTrials:
    """
    Check the weighted-sum inequality on random nonnegative instances.

    Each instance draws a length in [1, max_length], exponential a_n and a
    sorted uniform psi_n.

    Args:
        rng: Source of the random instances.
        instances: Number of instances to draw.
        max_length: Largest sequence length.

    Returns:
        Counts of drawn and satisfied instances, and the largest lhs / rhs seen.
    """
    held = 0
    worst = 0.0
    for _ in range(instances):
        length = int(rng.integers(1, max_length + 1))
        a_seq = rng.exponential(size=length)
        psi = np.sort(rng.random(length))[::-1]
        result = wu_inequality(a_seq, psi)
        held += result.holds
        if result.rhs > 0.0:
            worst = max(worst, result.lhs / result.rhs)
    return WuTrials(instances=instances, held=held, worst_ratio=worst)
