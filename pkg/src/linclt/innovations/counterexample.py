"""Coefficients of a causal linear innovation with unbounded spectral density.

Given a nonincreasing null sequence psi, break points n_1 = 1 < n_2 < ... are
chosen with n_{k+1} - n_k > n_{k+1} / 2 and psi_j <= 1/k^2 for j >= n_k, and the
coefficients are u_j = 1/n_{k+1} on [n_k, n_{k+1}). Each block adds more than
1/2 to sum u_j, while sum u_j^2 stays finite.
"""

import logging
import math
from typing import Callable, Dict, List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from linclt.errors import CertificationError, PreconditionError

logger = logging.getLogger(__name__)

PsiName = Literal["inverse-log", "inverse-sqrt", "zero"]

PSI_CATALOG: Dict[str, Tuple[str, Callable[[np.ndarray], np.ndarray]]] = {
    "inverse-log": ("1/log(n+2)", lambda n: 1.0 / np.log(n + 2.0)),
    "inverse-sqrt": ("(n+1)^(-1/2)", lambda n: 1.0 / np.sqrt(n + 1.0)),
    "zero": ("0", lambda n: np.zeros(np.shape(n))),
}


class CounterexampleWeights(BaseModel):
    """Materialized break points and coefficients of the construction."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    breakpoints: List[int]
    u: np.ndarray
    cutoff: int
    psi_values: np.ndarray

    @property
    def completed_blocks(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def length(self) -> int:
        """Number of materialized coefficients u_0 .. u_{n_K - 1}."""
        return len(self.u)

    def block_sums(self) -> List[Tuple[int, float]]:
        """Sum of u_j over each completed block, keyed by the block's right end."""
        return [
            (right, (right - left) / right)
            for left, right in zip(self.breakpoints[:-1], self.breakpoints[1:])
        ]

    def tail_sq_bound(self) -> float:
        """Upper bound on sum_{i >= n_K} u_i^2 for every continuation of the construction."""
        # each later block contributes < 1/n_{k+1} and n_{k+1} > 2 n_k
        return 1.0 / self.breakpoints[-1]

    def psi(self, j: int) -> float:
        return float(self.psi_values[j - 1])

    def violations(self) -> List[str]:
        """Invariants that fail on the materialized range (empty when all hold)."""
        failures = []
        for k, (left, right) in enumerate(
            zip(self.breakpoints[:-1], self.breakpoints[1:]), start=1
        ):
            if not right - left > right / 2:
                failures.append(f"gap condition fails between n_{k} and n_{k + 1}")
            if not np.allclose(self.u[left:right], 1.0 / right, rtol=0, atol=0):
                failures.append(f"u is not 1/n_{k + 1} on block {k}")
        for k, start in enumerate(self.breakpoints, start=1):
            if np.max(self.psi_values[start - 1 :], initial=0.0) > 1.0 / k**2:
                failures.append(f"psi exceeds 1/{k}^2 beyond n_{k}")
        return failures


def counterexample_weights(
    psi: Callable[[np.ndarray], np.ndarray], cutoff: int
) -> CounterexampleWeights:
    """
    Build the counterexample coefficients for ``psi`` up to index ``cutoff``.

    Blocks are added while their right end stays within the cutoff. The first
    block is extended down to j = 0 so that u_0 is defined.

    Args:
        psi: Nonincreasing null sequence, evaluated on index arrays.
        cutoff: Largest index that may be materialized.

    Returns:
        Break points n_k, the coefficients u_0..u_{n_K - 1} and the psi values used.

    Raises:
        PreconditionError: psi is negative or increasing on [1, cutoff], or the
            level needed for the second break point is never reached.
    """
    if cutoff < 3:
        raise PreconditionError(f"cutoff must be at least 3, got {cutoff}")
    values = np.asarray(psi(np.arange(1, cutoff + 1, dtype=float)), dtype=float)
    if np.any(values < 0):
        raise PreconditionError("psi must be nonnegative")
    if np.any(np.diff(values) > 0):
        raise PreconditionError("psi must be nonincreasing on the inspected range")
    if values[0] > 1.0:
        raise PreconditionError("psi_1 exceeds level 1/1^2 required at n_1 = 1")

    breakpoints = [1]
    descending = -values
    while True:
        k = len(breakpoints)
        level = 1.0 / (k + 1) ** 2
        first = int(np.searchsorted(descending, -level, side="left")) + 1
        if first > cutoff:
            logger.debug("level 1/%d^2 not reached before cutoff %d", k + 1, cutoff)
            break
        candidate = max(2 * breakpoints[-1] + 1, first)
        if candidate > cutoff:
            break
        breakpoints.append(candidate)

    if len(breakpoints) < 2:
        raise PreconditionError(
            f"level 1/2^2 not reached before cutoff {cutoff}; no block completed"
        )

    u = np.empty(breakpoints[-1])
    u[: breakpoints[1]] = 1.0 / breakpoints[1]
    for left, right in zip(breakpoints[1:-1], breakpoints[2:]):
        u[left:right] = 1.0 / right

    weights = CounterexampleWeights(
        breakpoints=breakpoints, u=u, cutoff=cutoff, psi_values=values
    )
    failures = weights.violations()
    if failures:
        raise CertificationError("; ".join(failures))
    logger.info(
        "built %d blocks up to n=%d (sum u = %.4f)",
        weights.completed_blocks,
        breakpoints[-1],
        math.fsum(u),
    )
    return weights


def catalog_psi(name: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return PSI_CATALOG[name][1]
    except KeyError:
        raise PreconditionError(f"unknown psi sequence {name!r}") from None
