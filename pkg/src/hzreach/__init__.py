"""Reachability analysis of nonlinear discrete-time systems with hybrid zonotopes."""
from . import query, sets, sos, sus
from ._accel import USING_NUMBA
from .errors import (
    ConfigError,
    DomainNotCovered,
    DomainViolation,
    HZError,
    Indeterminate,
)
from .sets import HalfSpace, HybridZonotope, Interval

__version__ = "0.1.0"

__all__ = [
    "HybridZonotope",
    "Interval",
    "HalfSpace",
    "sets",
    "sos",
    "sus",
    "query",
    "HZError",
    "ConfigError",
    "DomainNotCovered",
    "DomainViolation",
    "Indeterminate",
    "USING_NUMBA",
]
