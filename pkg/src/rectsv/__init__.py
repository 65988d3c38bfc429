"""Constructive machinery for moment-free lower bounds on the smallest
singular value of random rectangular matrices, plus a seeded Monte Carlo
harness for checking the tail behaviour at desk scale."""

from rectsv.errors import (
    ConfigurationError,
    DetectionError,
    PreconditionError,
    ResourceLimitError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DetectionError",
    "PreconditionError",
    "ResourceLimitError",
]
