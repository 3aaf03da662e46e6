"""Projective conditions evaluated from a model's causal coefficients u_i = ||P_{-i} xi_0||_2."""

import logging
import math
from typing import List, Literal, Optional, Tuple

import numpy as np
from scipy import signal

from linclt.conditions.reports import (
    ConditionReport,
    dyadic_trace,
    finite_or_none,
    inconclusive,
)
from linclt.errors import CertificationError, MissingCertificateError
from linclt.innovations.bernoulli import BernoulliMap, bernoulli_dyadic_projection_norm
from linclt.innovations.models import (
    CoefficientSequence,
    CounterexampleCoefficients,
    GeometricCoefficients,
    InnovationModel,
    truncation_depth,
)
from linclt.weights.window import wu_inequality

logger = logging.getLogger(__name__)

NO_STRUCTURE = "inconclusive: no analytic conditional structure"
Route = Literal["projection", "direct"]


def _coefficients(model: InnovationModel) -> Optional[CoefficientSequence]:
    try:
        return model.projection_coefficients()
    except MissingCertificateError:
        return None


def _materialize(u: CoefficientSequence, extra: int) -> Tuple[np.ndarray, float]:
    """
    Materialize u to a length covering ``extra`` indices plus a negligible tail.

    Returns the array and a bound on sum_{i >= len} u_i (infinite when the
    sequence is not summable or the tail is not certified).
    """
    if u.length is not None:
        return u.values(u.length), 0.0
    if isinstance(u, CounterexampleCoefficients):
        return u.construction.u, math.inf
    depth = truncation_depth(u)
    m = extra + 2 * depth
    return u.values(m), u.tail_abs(m)


def _divergence_note(u: CounterexampleCoefficients) -> str:
    blocks = u.construction.completed_blocks
    return (
        f"sum u_i diverges: each of the {blocks} completed blocks adds more than 1/2, "
        f"so partial sums exceed {blocks / 2:.1f} and grow without bound"
    )


def gamma_sequence(model: InnovationModel, j_max: int, route: Route = "projection") -> np.ndarray:
    """
    Gamma_0 .. Gamma_{j_max} with Gamma_j = sum_k |E[xi_k E(xi_0 | F_{-j})]|.

    The projection route sums u_i (sum_{l >= i} u_l) over i >= j; the direct
    route sums the lag products sum_{i >= j} u_{k+i} u_i over k. Entries are
    infinite when sum u_i diverges.

    Raises:
        MissingCertificateError: the model has no analytic conditional structure.
    """
    u = _coefficients(model)
    if u is None:
        raise MissingCertificateError(NO_STRUCTURE)
    v, tail = _materialize(u, j_max)
    if not math.isfinite(tail):
        return np.full(j_max + 1, math.inf)

    padded = np.zeros(max(len(v), j_max + 1))
    padded[: len(v)] = v
    if route == "projection":
        suffix = np.cumsum(padded[::-1])[::-1] + tail
        gam = np.cumsum((padded * suffix)[::-1])[::-1]
        return gam[: j_max + 1].copy()

    out = np.zeros(j_max + 1)
    for j in range(j_max + 1):
        a = padded[j:]
        if not np.any(a):
            continue
        lags = signal.correlate(a, a, mode="full", method="direct")[len(a) - 1 :]
        out[j] = math.fsum(lags)
    return out


def gamma_j(model: InnovationModel, j: int, route: Route = "projection") -> float:
    """Gamma_j; see :func:`gamma_sequence`."""
    return float(gamma_sequence(model, j, route)[j])


def cesaro_gamma(model: InnovationModel, p: int) -> float:
    """(1/p) sum_{j=1}^p Gamma_j."""
    gam = gamma_sequence(model, p)
    return math.fsum(gam[1 : p + 1]) / p


def gamma_report(model: InnovationModel, j_max: int = 20) -> ConditionReport:
    u = _coefficients(model)
    if u is None:
        return inconclusive("eq2-gamma", NO_STRUCTURE)
    gam = gamma_sequence(model, j_max)
    trace = [(j, float(g)) for j, g in enumerate(gam)]
    if isinstance(u, CounterexampleCoefficients):
        return ConditionReport(
            condition_id="eq2-gamma",
            verdict="violated",
            notes=f"Gamma_j >= u_j sum_(l>=j) u_l is infinite; {_divergence_note(u)}",
        )
    return ConditionReport(
        condition_id="eq2-gamma",
        verdict="satisfied",
        value=float(gam[-1]),
        partial_sums=trace,
        notes="Gamma_j is the tail of the convergent series sum_i u_i sum_(l>=i) u_l",
    )


def cesaro_report(model: InnovationModel, max_exponent: int = 10) -> ConditionReport:
    u = _coefficients(model)
    if u is None:
        return inconclusive("eq2-cesaro", NO_STRUCTURE)
    if isinstance(u, CounterexampleCoefficients):
        return ConditionReport(
            condition_id="eq2-cesaro",
            verdict="violated",
            notes=f"every Gamma_j is infinite; {_divergence_note(u)}",
        )
    p_max = 2**max_exponent
    gam = gamma_sequence(model, p_max)
    means = np.cumsum(gam[1:]) / np.arange(1, p_max + 1)
    trace = [(2**e, float(means[2**e - 1])) for e in range(1, max_exponent + 1)]
    return ConditionReport(
        condition_id="eq2-cesaro",
        verdict="satisfied",
        value=trace[-1][1],
        partial_sums=trace,
        notes="Gamma_j is nonincreasing with limit 0, so its Cesaro means vanish",
    )


def projective_sum(model: InnovationModel) -> ConditionReport:
    """sum_{i >= 1} ||P_{-i} xi_0||_2 from the model's causal coefficients."""
    u = _coefficients(model)
    if u is None:
        return inconclusive("eq4-projective", NO_STRUCTURE)
    if isinstance(u, CounterexampleCoefficients):
        return _counterexample_projective(u)

    v, tail = _materialize(u, 0)
    if not math.isfinite(tail):
        return inconclusive("eq4-projective", "tail of sum u_i is not certified")
    terms = v[1:]
    if terms.size == 0:
        return ConditionReport(condition_id="eq4-projective", verdict="satisfied", value=0.0)
    value = math.fsum(terms) + tail
    wu = wu_inequality(terms, np.ones_like(terms))
    return ConditionReport(
        condition_id="eq4-projective",
        verdict="satisfied",
        value=value,
        partial_sums=dyadic_trace(np.cumsum(terms)),
        notes=(
            f"certified tail {tail:.3g}; sum u_n <= 3 sum n^(-1/2) (sum_(k>=n) u_k^2)^(1/2) "
            f"gives {wu.lhs:.6g} <= {wu.rhs:.6g}"
        ),
    )


def _block_trace(u: CounterexampleCoefficients, weighted: bool) -> List[Tuple[int, float]]:
    c = u.construction
    terms = c.u[1:] * (c.psi_values[: len(c.u) - 1] if weighted else 1.0)
    cumulative = np.cumsum(terms)
    return [(right - 1, float(cumulative[right - 2])) for right in c.breakpoints[1:]]


def _counterexample_projective(u: CounterexampleCoefficients) -> ConditionReport:
    c = u.construction
    blocks = c.completed_blocks
    weighted_trace = _block_trace(u, weighted=True)
    psi_weighted = ConditionReport(
        condition_id="eq4-psi-weighted",
        verdict="satisfied",
        value=weighted_trace[-1][1],
        partial_sums=weighted_trace,
        notes=(
            "psi_n <= 1/k^2 on block k and each block sums u to at most 1, "
            f"so the remainder after block {blocks} is at most {1.0 / blocks:.3g}"
        ),
    )
    return ConditionReport(
        condition_id="eq4-projective",
        verdict="violated",
        partial_sums=_block_trace(u, weighted=False),
        notes=_divergence_note(u),
        related=[psi_weighted],
    )


def _square_tails(u: CoefficientSequence, n_max: int) -> np.ndarray:
    """Upper bounds on sum_{i >= n} u_i^2 for n = 0 .. n_max."""
    if isinstance(u, GeometricCoefficients):
        n = np.arange(n_max + 1, dtype=float)
        return u.ratio ** (2.0 * n) / (1.0 - u.ratio**2)
    if isinstance(u, CounterexampleCoefficients):
        v = u.construction.u
        extra = u.construction.tail_sq_bound()
    else:
        v, _ = _materialize(u, n_max)
        extra = u.tail_sq(len(v))
    padded = np.zeros(max(len(v), n_max + 1))
    padded[: len(v)] = v
    tails = np.cumsum((padded * padded)[::-1])[::-1] + extra
    return tails[: n_max + 1]


def maxwell_woodroofe_sum(model: InnovationModel, n_cap: int = 4096) -> ConditionReport:
    """sum_{n >= 1} n^(-1/2) ||E(xi_n | F_0)||_2 with ||E(xi_n | F_0)||_2^2 = sum_{i >= n} u_i^2."""
    u = _coefficients(model)
    if u is None:
        return inconclusive("eq5-maxwell-woodroofe", NO_STRUCTURE)
    if isinstance(u, CounterexampleCoefficients):
        return _counterexample_maxwell_woodroofe(u, n_cap)

    tails = _square_tails(u, n_cap)
    n = np.arange(1, n_cap + 1, dtype=float)
    terms = np.sqrt(tails[1:]) / np.sqrt(n)
    if isinstance(u, GeometricCoefficients):
        rho = u.ratio
        remainder = (
            rho ** (n_cap + 1) / math.sqrt(n_cap + 1) / ((1.0 - rho) * math.sqrt(1.0 - rho * rho))
        )
    elif u.length is not None:
        remainder = 0.0 if u.length <= n_cap + 1 else math.inf
    else:
        remainder = math.inf
    if not math.isfinite(remainder):
        return inconclusive(
            "eq5-maxwell-woodroofe",
            "no analytic envelope for the square tail beyond n_cap",
            dyadic_trace(np.cumsum(terms)),
        )
    return ConditionReport(
        condition_id="eq5-maxwell-woodroofe",
        verdict="satisfied",
        value=math.fsum(terms) + remainder,
        partial_sums=dyadic_trace(np.cumsum(terms)),
        notes=f"remainder beyond n={n_cap} at most {remainder:.3g}",
    )


def _counterexample_maxwell_woodroofe(
    u: CounterexampleCoefficients, n_cap: int
) -> ConditionReport:
    c = u.construction
    last = c.length - 1
    tails = _square_tails(u, last)
    n = np.arange(1, last + 1, dtype=float)
    terms = np.sqrt(tails[1:]) / np.sqrt(n)
    weighted = c.psi_values[:last] * terms

    blocks = c.completed_blocks
    remainder = 2.0 * math.sqrt(2.0) / blocks
    weighted_cumulative = np.cumsum(weighted)
    psi_weighted = ConditionReport(
        condition_id="eq5-psi-weighted",
        verdict="satisfied",
        value=float(weighted_cumulative[-1]),
        partial_sums=[(r - 1, float(weighted_cumulative[r - 2])) for r in c.breakpoints[1:]],
        notes=(
            "block k contributes at most 2 sqrt(2)/k^2 since psi_n <= 1/k^2 and "
            f"sum_(i>=n_k) u_i^2 <= 2/n_(k+1); remainder at most {remainder:.3g}"
        ),
    )

    shown = min(n_cap, last)
    wu = wu_inequality(c.u[1 : shown + 1], np.ones(shown))
    return ConditionReport(
        condition_id="eq5-maxwell-woodroofe",
        verdict="violated",
        partial_sums=dyadic_trace(np.cumsum(terms[:shown])),
        notes=(
            f"sum_(n<={shown}) u_n = {wu.lhs:.4g} <= {wu.rhs:.4g} <= 3 x the partial sum; "
            f"{_divergence_note(u)}, hence so does this sum"
        ),
        related=[psi_weighted],
    )


def functional_iid_sum(g: BernoulliMap, n_cap: int = 40) -> ConditionReport:
    """sum_n n^(-1/2) ||xi_0 - E(xi_0 | first n bits)||_2 for the Bernoulli shift of g."""
    terms: List[float] = []
    for n in range(1, n_cap + 1):
        try:
            norm = bernoulli_dyadic_projection_norm(g, n)
        except CertificationError as exc:
            logger.info("stopping functional sum for %s at n=%d: %s", g.label, n, exc)
            return inconclusive(
                "eq9-functional-iid",
                f"norm at n={n} not certified ({exc})",
                dyadic_trace(np.cumsum(terms)) if terms else None,
            )
        terms.append(norm / math.sqrt(n))

    trace = dyadic_trace(np.cumsum(terms))
    lip = g.lipschitz_constant
    if g.dyadic_level is not None and g.dyadic_level <= n_cap:
        remainder = 0.0
    elif lip is not None:
        # within-cell variance of a lip-Lipschitz map is at most lip^2 h^2 / 12
        remainder = lip * 2.0**-n_cap / (math.sqrt(12.0) * math.sqrt(n_cap + 1))
    else:
        return inconclusive(
            "eq9-functional-iid",
            "no geometric envelope; monotone-tail extrapolation only",
            trace,
        )
    return ConditionReport(
        condition_id="eq9-functional-iid",
        verdict="satisfied",
        value=finite_or_none(math.fsum(terms) + remainder),
        partial_sums=trace,
        notes=f"geometric envelope bounds the remainder beyond n={n_cap} by {remainder:.3g}",
    )
