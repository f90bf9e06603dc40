"""Saliency-guided hierarchical visual tracker."""

from ._accel import backend_name
from .particle import AffineState, InvalidStateError
from .tracker import ConfigError, StepDiagnostics, Tracker, TrackerConfig

__all__ = [
    "AffineState",
    "ConfigError",
    "InvalidStateError",
    "StepDiagnostics",
    "Tracker",
    "TrackerConfig",
    "backend_name",
]
__version__ = "0.1.0"
