"""Catalog of maps g on (0, 1) driving the Bernoulli shift Y_n = sum_k 2^{-k-1} eps_{n-k}."""

import logging
import math
from functools import cached_property
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate

from linclt.errors import CertificationError, PreconditionError

logger = logging.getLogger(__name__)

MapName = Literal["linear", "square", "jump", "oscillating", "log-singular"]

MAP_LABELS: Dict[str, str] = {
    "linear": "x - 1/2",
    "square": "x^2",
    "jump": "1{x<1/2} - 1/2",
    "oscillating": "x^{-p}[1+log(2/x)]^{-a} sin(1/x)",
    "log-singular": "x^{-1/2}[1+log(2/x)]^{-1}",
}

# Dyadic cells are enumerated explicitly up to this level.
MAX_CELL_LEVEL = 18
QUADRATURE_RTOL = 1e-8


class BernoulliMap(BaseModel):
    """A catalog map g together with whatever closed forms are known for it."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: MapName
    p: float = Field(default=0.4, ge=0.0, le=0.5)
    a: float = Field(default=1.0, ge=0.0)

    @property
    def label(self) -> str:
        return MAP_LABELS[self.name]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.name == "linear":
            return x - 0.5
        if self.name == "square":
            return x * x
        if self.name == "jump":
            return np.where(x < 0.5, 0.5, -0.5)
        if self.name == "oscillating":
            return x ** (-self.p) * (1.0 + np.log(2.0 / x)) ** (-self.a) * np.sin(1.0 / x)
        return x ** (-0.5) / (1.0 + np.log(2.0 / x))

    @cached_property
    def mean(self) -> float:
        """E g(U) for U uniform on (0, 1)."""
        if self.name in ("linear", "jump"):
            return 0.0
        if self.name == "square":
            return 1.0 / 3.0
        if self.name == "oscillating":
            # substitute t = 1/x and integrate against sin(t) on [1, inf)
            value, _ = integrate.quad(
                lambda t: t ** (self.p - 2.0) * (1.0 + math.log(2.0 * t)) ** (-self.a),
                1.0,
                np.inf,
                weight="sin",
                wvar=1.0,
            )
            return float(value)
        # x = s^2 removes the square-root singularity
        value, _ = integrate.quad(lambda s: 2.0 / (1.0 + math.log(2.0 / (s * s))), 0.0, 1.0)
        return float(value)

    @property
    def lipschitz_constant(self) -> Optional[float]:
        return {"linear": 1.0, "square": 2.0}.get(self.name)

    @property
    def dyadic_level(self) -> Optional[int]:
        """Level n from which g is constant on dyadic cells of length 2^{-n}."""
        return 1 if self.name == "jump" else None

    @property
    def breakpoints(self) -> List[float]:
        return [0.5] if self.name == "jump" else []

    def projection_norm_closed_form(self, n: int) -> Optional[float]:
        """||g(Y) - E(g(Y) | first n bits)||_2 when known in closed form."""
        h = 2.0**-n
        if self.name == "linear":
            return h / math.sqrt(12.0)
        if self.name == "square":
            return h * math.sqrt(max(1.0 / 9.0 - h * h / 45.0, 0.0))
        if self.name == "jump":
            return 0.0 if n >= 1 else 0.5
        return None

    def autocovariance(self, k_max: int) -> Optional[Tuple[np.ndarray, float]]:
        """Values gamma(0..k_max) and a bound on sum_{k > k_max} |gamma(k)|, if analytic."""
        k = np.arange(k_max + 1, dtype=float)
        half = 2.0**-k
        if self.name == "linear":
            return half / 12.0, 2.0**-k_max / 12.0
        if self.name == "square":
            values = half * half * 4.0 / 45.0 + half * (1.0 - half) / 12.0
            tail = 4.0 / 45.0 * 4.0**-k_max / 3.0 + 2.0**-k_max / 12.0
            return values, tail
        if self.name == "jump":
            values = np.zeros(k_max + 1)
            values[0] = 0.25
            return values, 0.0
        return None

    def shell_upper_bound(self, m: np.ndarray, t: float) -> Optional[np.ndarray]:
        """
        Upper bounds U_m on the shell contributions of the double integral.

        Available for Lipschitz maps, the jump map and the oscillating map with
        p < 1/2.
        """
        m = np.asarray(m, dtype=float)
        lo = 2.0 ** (-m - 1.0)
        hi = 2.0**-m
        loglog = loglog_factor(lo) ** t
        lip = self.lipschitz_constant
        if lip is not None:
            # D(d) <= lip^2 d^2
            return lip * lip * loglog * (hi * hi - lo * lo)
        if self.name == "jump":
            # D(d) <= d: the shifted indicators differ on a set of length min(d, 1 - d)
            return 2.0 * loglog * (hi - lo)
        if self.name != "oscillating" or self.p >= 0.5:
            return None
        q = 0.5 - self.p
        k_near = 4.0 * 2.0 ** (1.0 - 2.0 * self.p) / (1.0 - 2.0 * self.p)
        k_far = (1.0 + self.p + self.a) ** 2 / (2.0 * self.p + 3.0)
        near_diag = 2.0 * (k_near + k_far) * loglog * (hi**q - lo**q) / q
        # away from the diagonal D(d) <= 4 int g^2
        far = 2.0 * 4.0 / (1.0 - 2.0 * self.p) * math.log(2.0) * loglog
        return np.where(m >= 2, near_diag, far)

    def shell_lower_bound(self, m: np.ndarray, t: float) -> Optional[np.ndarray]:
        """Certified positive lower bounds L_m on shell contributions, m >= 2."""
        if self.name != "log-singular":
            return None
        m = np.asarray(m, dtype=float)
        # D(d) >= 1 / (4 (1 + log(32/d))) on the shell, and the loglog factor is >= 1
        bound = 0.5 * math.log(2.0) / (1.0 + (m + 6.0) * math.log(2.0))
        return np.where(m >= 2, bound, 0.0)


def loglog_factor(d: np.ndarray) -> np.ndarray:
    """log log(1/d) for d < e^{-e}, clamped to 1 nearer the boundary."""
    d = np.asarray(d, dtype=float)
    out = np.ones_like(d)
    small = d < math.exp(-math.e)
    out[small] = np.log(np.log(1.0 / d[small]))
    return out


def _cell_variance(g: BernoulliMap, n: int, points: int) -> float:
    h = 2.0**-n
    nodes, weights = leggauss(points)
    x = (np.arange(2**n, dtype=float)[:, None] + 0.5 * (nodes + 1.0)) * h
    vals = g(x)
    w = 0.5 * weights
    means = vals @ w
    dev = vals - means[:, None]
    return math.fsum((dev * dev) @ w) * h


def bernoulli_dyadic_projection_norm(
    g: BernoulliMap, n: int, quadrature_points: int = 16
) -> float:
    """
    Return ||g(Y_0) - E(g(Y_0) | eps_0, ..., eps_{1-n})||_2.

    The conditional expectation is the mean of g over the dyadic cell of
    length 2^{-n} selected by the bits; the norm integrates the within-cell
    variance with Gauss-Legendre rules of ``quadrature_points`` and twice as
    many nodes per cell.

    Args:
        g: Catalog map.
        n: Number of conditioning bits.
        quadrature_points: Gauss-Legendre nodes per cell in the coarse rule.

    Returns:
        The L2 norm of the projection remainder.

    Raises:
        PreconditionError: n < 1.
        CertificationError: the two rules disagree, or n is beyond the cell
            enumeration cap and g has no closed form.
    """
    if n < 1:
        raise PreconditionError(f"n must be positive, got {n}")
    if quadrature_points < 2:
        raise PreconditionError("at least two quadrature points are needed")
    if n > MAX_CELL_LEVEL:
        closed = g.projection_norm_closed_form(n)
        if closed is None:
            raise CertificationError(
                f"dyadic level {n} exceeds cell cap {MAX_CELL_LEVEL} for map {g.label}"
            )
        return closed
    if g.dyadic_level is not None and n >= g.dyadic_level:
        return 0.0

    coarse = _cell_variance(g, n, quadrature_points)
    fine = _cell_variance(g, n, 2 * quadrature_points)
    if abs(coarse - fine) > QUADRATURE_RTOL * max(coarse, fine) + 1e-15:
        raise CertificationError(
            f"quadrature did not converge for {g.label} at n={n}: {coarse!r} vs {fine!r}"
        )
    return math.sqrt(max(fine, 0.0))
