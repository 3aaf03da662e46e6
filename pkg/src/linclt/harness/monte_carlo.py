"""Monte Carlo images of the CLT: replicated S_n / b_n against the target law."""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from linclt.errors import LincltError, PreconditionError, ReplicateError
from linclt.harness.normal import TargetSpec, ks_distance, target_cdf
from linclt.innovations.models import InnovationModel, ModelSpec, sample_path
from linclt.innovations.rng import replicate_seed
from linclt.weights.window import (
    WeightSequence,
    WeightSpec,
    WindowCoefficients,
    window_coefficients,
)

logger = logging.getLogger(__name__)

DEFAULT_KS_THRESHOLD = 0.05
MIN_VARIANCE_REPLICATES = 30


class SimulationConfig(BaseModel):
    """Everything a replicated simulation depends on."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    model: ModelSpec
    weights: WeightSpec
    n: int = Field(ge=1)
    replicates: int = Field(ge=1)
    master_seed: int = 0
    rel_tail_tol: float = Field(default=1e-3, gt=0.0, lt=1.0)
    target: TargetSpec
    ks_threshold: float = Field(default=DEFAULT_KS_THRESHOLD, gt=0.0, le=1.0)


class CltReport(BaseModel):
    empirical_mean: float
    empirical_variance: float = Field(ge=0.0)
    ks_distance: float = Field(ge=0.0, le=1.0)
    target: TargetSpec
    passed: bool = Field(serialization_alias="pass")
    n: int
    replicates: int
    runtime_ms: int

    def deterministic_dict(self) -> Dict[str, Any]:
        """JSON-ready fields that depend only on the configuration and seed."""
        return self.model_dump(mode="json", by_alias=True, exclude={"runtime_ms"})


def simulate_sn(
    model: InnovationModel,
    weights: WeightSequence,
    n: int,
    seed: int,
    rel_tail_tol: float = 1e-3,
    window: Optional[WindowCoefficients] = None,
) -> float:
    """
    S_n = sum_j b_{n,j} xi_j over the certified window support.

    ``window`` may be passed to reuse coefficients across replicates.

    Args:
        model: Innovation model.
        weights: Coefficient sequence.
        n: Window length.
        seed: Seed of the sampled path.
        rel_tail_tol: Tail tolerance of the window.
        window: Precomputed window coefficients for ``weights`` at ``n``.

    Returns:
        One draw of S_n.
    """
    w = window or window_coefficients(weights, n, rel_tail_tol)
    path = sample_path(model, w.j_lo, w.j_hi, seed)
    return float(np.dot(w.values, path))


def replicate_values(config: SimulationConfig, workers: int = 1) -> np.ndarray:
    """
    Normalized values S_n / b_n for every replicate, in replicate order.

    Replicate i uses the stream keyed by (master_seed, i), so the values do
    not depend on ``workers``.

    Raises:
        ReplicateError: a replicate failed; carries its index.
    """
    window = window_coefficients(config.weights, config.n, config.rel_tail_tol)
    scale = math.sqrt(window.stored_sq)

    def run(index: int) -> float:
        seed = replicate_seed(config.master_seed, index)
        try:
            return simulate_sn(config.model, config.weights, config.n, seed, window=window)
        except LincltError as exc:
            raise ReplicateError(index, exc) from exc

    indices = range(config.replicates)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run, indices))
    else:
        values = [run(i) for i in indices]
    return np.asarray(values) / scale


def monte_carlo_clt(config: SimulationConfig, workers: int = 1) -> CltReport:
    """
    Compare the empirical law of S_n / b_n with the configured target.

    Args:
        config: Model, weights, level, replicate count and target.
        workers: Threads drawing replicates; the result does not depend on it.

    Returns:
        KS distance, the pass flag and the replicate summary.

    Raises:
        ReplicateError: a replicate failed; carries its index.
    """
    started = time.perf_counter()
    values = replicate_values(config, workers)
    runtime_ms = int(round((time.perf_counter() - started) * 1000))
    return clt_report(config, values, runtime_ms)


def clt_report(config: SimulationConfig, values: np.ndarray, runtime_ms: int = 0) -> CltReport:
    """Summarize replicate values of S_n / b_n against the configured target."""
    ks = ks_distance(values, target_cdf(config.target))
    variance = float(np.var(values, ddof=1)) if len(values) > 1 else 0.0
    logger.info(
        "%d replicates of S_n/b_n at n=%d: KS %.4f (threshold %.3f)",
        config.replicates,
        config.n,
        ks,
        config.ks_threshold,
    )
    return CltReport(
        empirical_mean=float(np.mean(values)),
        empirical_variance=variance,
        ks_distance=ks,
        target=config.target,
        passed=ks < config.ks_threshold,
        n=config.n,
        replicates=config.replicates,
        runtime_ms=runtime_ms,
    )


class VarianceRatio(NamedTuple):
    ratio: float
    ci_halfwidth: float


def empirical_variance_ratio(config: SimulationConfig, workers: int = 1) -> VarianceRatio:
    """
    Sample variance of S_n / b_n with a normal-theory 95% half-width.

    Raises:
        PreconditionError: fewer than 30 replicates.
    """
    if config.replicates < MIN_VARIANCE_REPLICATES:
        raise PreconditionError(
            f"at least {MIN_VARIANCE_REPLICATES} replicates are needed, got {config.replicates}"
        )
    return variance_ratio(replicate_values(config, workers))


def variance_ratio(values: np.ndarray) -> VarianceRatio:
    """Sample variance of normalized replicate values and its 95% half-width."""
    if len(values) < MIN_VARIANCE_REPLICATES:
        raise PreconditionError(
            f"at least {MIN_VARIANCE_REPLICATES} replicates are needed, got {len(values)}"
        )
    ratio = float(np.var(values, ddof=1))
    half = 1.96 * ratio * math.sqrt(2.0 / (len(values) - 1))
    return VarianceRatio(ratio=ratio, ci_halfwidth=half)


def weighted_square_functional(
    model: InnovationModel,
    weights: WeightSequence,
    n: int,
    seed: int,
    rel_tail_tol: float = 1e-3,
    path: Optional[np.ndarray] = None,
) -> float:
    """
    (1/b_n^2) sum_j b_{n,j}^2 xi_j^2 along one path.

    Args:
        model: Innovation model the path is sampled from.
        weights: Coefficient sequence defining b_{n,.}.
        n: Window length.
        seed: Master seed of the sampled path.
        rel_tail_tol: Tail tolerance passed to the window computation.
        path: Innovations over the window support to use instead of sampling.

    Returns:
        The weighted mean square of the path.

    Raises:
        PreconditionError: ``path`` does not cover the window support.
    """
    w = window_coefficients(weights, n, rel_tail_tol)
    if path is None:
        path = sample_path(model, w.j_lo, w.j_hi, seed)
    else:
        path = np.asarray(path, dtype=float)
        if path.shape != w.values.shape:
            raise PreconditionError(
                f"path of length {path.size} does not cover support {w.support}"
            )
    sq = w.values * w.values
    return float(np.dot(sq, path * path) / w.stored_sq)
