"""Signed neuron splitting for growing neural networks."""

from .engine import GrowthConfig, GrowthTrace, grow
from .errors import (
    InvalidInputError,
    NeuronNotFoundError,
    ParseError,
    PreconditionViolated,
    PropertyViolation,
    S3DError,
)
from .model import Dataset, MlpNetwork, OptimizerConfig
from .splitting import NeuronSplitReport, apply_split, split_reports

__all__ = [
    "Dataset",
    "GrowthConfig",
    "GrowthTrace",
    "InvalidInputError",
    "MlpNetwork",
    "NeuronNotFoundError",
    "NeuronSplitReport",
    "OptimizerConfig",
    "ParseError",
    "PreconditionViolated",
    "PropertyViolation",
    "S3DError",
    "apply_split",
    "grow",
    "split_reports",
]
