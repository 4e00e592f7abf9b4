"""Exact simulation and analysis of parity-encoded QAOA on spin glasses."""

from . import analytic, engine, fast, layout, optimizer, rcc, rng, runner, schedule, sk
from .engine import ResourceLimitError

__version__ = "0.1.0"

__all__ = [
    "analytic",
    "engine",
    "fast",
    "layout",
    "optimizer",
    "rcc",
    "rng",
    "runner",
    "schedule",
    "sk",
    "ResourceLimitError",
    "__version__",
]
