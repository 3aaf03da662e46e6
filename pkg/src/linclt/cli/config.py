"""Experiment configuration files."""

import os
from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from linclt.conditions.mixing import AlphaSpec, QuantileSpec
from linclt.conditions.reports import ConditionId, Verdict
from linclt.errors import LincltError
from linclt.harness.normal import TargetSpec
from linclt.innovations.bernoulli import BernoulliMap
from linclt.innovations.counterexample import PsiName
from linclt.innovations.models import ModelSpec
from linclt.weights.window import WeightSpec

OUT_DIR_ENV = "LINCLT_OUT_DIR"
DEFAULT_OUT_DIR = "results"

ExperimentKind = Literal["variance-trace", "clt", "conditions", "counterexample", "lemmas"]


class ConfigError(LincltError):
    """The configuration file could not be read or validated."""


class Tolerances(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ks_threshold: float = Field(default=0.05, gt=0.0, le=1.0)
    rel_tail_tol: float = Field(default=1e-3, gt=0.0, lt=1.0)
    ratio_rel_tol: float = Field(default=0.05, gt=0.0)
    # Monte Carlo variance ratio: accepted within max(CI half-width, this share of the target).
    variance_ratio_rel_tol: float = Field(default=0.03, gt=0.0)
    smoothness_max: float = Field(default=0.02, gt=0.0)


class ExperimentConfig(BaseModel):
    """One experiment: what to run, on which model and weights, and what counts as a pass."""

    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentKind
    name: str = "experiment"
    model: Optional[ModelSpec] = None
    weights: Optional[WeightSpec] = None
    n: int = Field(default=1024, ge=1)
    n_list: List[int] = Field(default_factory=list)
    replicates: int = Field(default=2000, ge=1)
    seed: int = 0
    target: Optional[TargetSpec] = None
    separation_target: Optional[TargetSpec] = None
    check_variance_ratio: bool = False
    k_max: int = Field(default=256, ge=1)

    map: Optional[BernoulliMap] = None
    shell_t: float = 2.0
    shells: int = Field(default=30, ge=1)
    quantile: Optional[QuantileSpec] = None
    alpha: Optional[AlphaSpec] = None
    moment_t: Optional[float] = None
    k_cap: int = Field(default=10_000, ge=1)
    n_cap: int = Field(default=4096, ge=1)
    bit_cap: int = Field(default=40, ge=1)

    psi: PsiName = "inverse-log"
    cutoff: int = Field(default=1_000_000, ge=3)

    block_size: int = Field(default=8, ge=1)
    wu_instances: int = Field(default=100, ge=0)

    expected_verdicts: Dict[ConditionId, Verdict] = Field(default_factory=dict)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    output_dir: Optional[Path] = None

    @model_validator(mode="after")
    def _check_required(self) -> "ExperimentConfig":
        missing = []
        if self.experiment in ("variance-trace", "clt") and self.model is None:
            missing.append("model")
        if self.experiment in ("variance-trace", "clt", "lemmas") and self.weights is None:
            missing.append("weights")
        if self.experiment == "clt" and self.target is None:
            missing.append("target")
        if self.experiment in ("variance-trace", "lemmas") and not self.n_list:
            missing.append("n_list")
        if self.experiment == "conditions" and not (self.model or self.map or self.alpha):
            missing.append("model, map or alpha")
        if missing:
            raise ValueError(f"{self.experiment} experiments need: {', '.join(missing)}")
        return self


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for error in exc.errors():
        loc = ".".join(str(part) for part in error["loc"]) or "<root>"
        lines.append(f"{loc}: {error['msg']}")
    return "\n".join(lines)


def load_config(path: Path) -> ExperimentConfig:
    """
    Parse and validate a JSON experiment configuration.

    Args:
        path: Path to the JSON file.

    Returns:
        The validated configuration.

    Raises:
        ConfigError: unreadable file, malformed JSON or a field-level problem;
            the message names the offending field or JSON position.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        return ExperimentConfig.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration {path}:\n{_format_errors(exc)}") from exc


def resolve_output_dir(config: ExperimentConfig, override: Optional[Path]) -> Path:
    """Command-line flag, then the config file, then $LINCLT_OUT_DIR, then ./results."""
    if override is not None:
        return override
    if config.output_dir is not None:
        return config.output_dir
    return Path(os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR))
