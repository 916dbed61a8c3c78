"""Simulation and transience criteria for the nonhomogeneous frog model on the integers."""

__version__ = "0.1.0"

from .model import DriftSpec, FrogCountSpec, LambdaSpec, ModelConfig, drift_at, ratio_at, validate_config
from .pgf import DistributionSpec

__all__ = [
    "DistributionSpec",
    "DriftSpec",
    "FrogCountSpec",
    "LambdaSpec",
    "ModelConfig",
    "drift_at",
    "ratio_at",
    "validate_config",
]
