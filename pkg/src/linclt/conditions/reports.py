"""Condition reports: a verdict, a value and the partial sums that back it."""

import math
from typing import List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

ConditionId = Literal[
    "eq2-gamma",
    "eq2-cesaro",
    "eq4-projective",
    "eq4-psi-weighted",
    "eq5-maxwell-woodroofe",
    "eq5-psi-weighted",
    "eq9-functional-iid",
    "eq11-bernoulli-integral",
    "eq13-mixingale",
    "moment-form",
]
Verdict = Literal["satisfied", "violated", "inconclusive"]


class ConditionReport(BaseModel):
    """
    Outcome of one sufficient-condition check.

    ``satisfied`` always comes with a finite certified value and ``violated``
    with a divergence witness in ``notes``; everything else is inconclusive.
    """

    condition_id: ConditionId
    verdict: Verdict
    value: Optional[float] = None
    partial_sums: List[Tuple[int, float]] = Field(default_factory=list)
    notes: str = ""
    coefficient_family: Optional[Literal["alpha-bar", "alpha"]] = None
    related: List["ConditionReport"] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "satisfied"


def dyadic_trace(cumulative: Sequence[float], start: int = 1) -> List[Tuple[int, float]]:
    """Sample a cumulative array at indices start, 2 start, 4 start, ... and the last one."""
    trace = []
    last = start + len(cumulative) - 1
    idx = start
    while idx <= last:
        trace.append((idx, float(cumulative[idx - start])))
        idx *= 2
    if trace and trace[-1][0] != last:
        trace.append((last, float(cumulative[-1])))
    return trace


def finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def inconclusive(
    condition_id: ConditionId,
    notes: str,
    partial_sums: Optional[List[Tuple[int, float]]] = None,
) -> ConditionReport:
    return ConditionReport(
        condition_id=condition_id,
        verdict="inconclusive",
        partial_sums=partial_sums or [],
        notes=notes,
    )
