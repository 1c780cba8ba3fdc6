"""Simulated tactile page turning: page physics, finger servo, stage machine and shape control."""
from .errors import (ConfigError, ContactLost, DegenerateInput, NonConvergence, PageflipError,
                     PoseLimit, TrialLimit)
from .physics.kernel import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "ContactLost", "DegenerateInput", "NonConvergence", "PageflipError",
    "PoseLimit", "TrialLimit", "__version__",
]
