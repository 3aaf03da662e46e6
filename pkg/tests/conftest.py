"""Pytest configuration and fixtures for linclt tests."""

import json
from pathlib import Path
from typing import Any, Callable, Dict

import pytest

from linclt.innovations.models import (
    CausalLinearModel,
    GeometricCoefficients,
    IidModel,
    NonergodicScaleModel,
)
from linclt.weights.window import GeometricWeights, PartialSumDeltaWeights


@pytest.fixture
def iid_normal() -> IidModel:
    """Standard normal i.i.d. innovations."""
    return IidModel(distribution="normal")


@pytest.fixture
def geometric_model() -> CausalLinearModel:
    """Causal linear innovations with u_i = 0.5^i."""
    return CausalLinearModel(coefficients=GeometricCoefficients(ratio=0.5))


@pytest.fixture
def scale_mixture() -> NonergodicScaleModel:
    """V Z_k with V in {0.5, 3} chosen with equal probability."""
    return NonergodicScaleModel(scales=[0.5, 3.0], probabilities=[0.5, 0.5])


@pytest.fixture
def delta_weights() -> PartialSumDeltaWeights:
    return PartialSumDeltaWeights()


@pytest.fixture
def geometric_weights() -> GeometricWeights:
    return GeometricWeights(ratio=0.6)


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[Dict[str, Any]], Path]:
    """Write an experiment configuration to a JSON file and return its path."""

    def write(document: Dict[str, Any], name: str = "experiment.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return write
