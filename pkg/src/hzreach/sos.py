"""Special-ordered-set (SOS) approximations of scalar functions as hybrid zonotopes.

An SOS approximation is a vertex matrix ``V`` (columns ``(x_i, f(x_i))``)
and a 0/1 incidence matrix ``M`` whose columns pick the vertices of each
simplex.  :func:`sos_to_hybzono` turns the pair into an exact hybrid
zonotope; :func:`envelope` bloats it by a verified error bound so the true
graph of ``f`` is enclosed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import sets
from .errors import EvaluationFailure, NegativeDelta, TooFewVertices, UnsortedBreakpoints
from .sets import HalfSpace, HybridZonotope, Interval

__all__ = [
    "SosApproximation",
    "EnclosedFunction",
    "build_sos_1d",
    "sos_to_hybzono",
    "sos_error_bound",
    "envelope",
    "enclose_1d",
    "interp_1d",
    "sat",
    "sat_breakpoints",
    "NAMED_FUNCTIONS",
]

DEFAULT_SAMPLES_PER_SEGMENT = 10_000
SAFETY_FACTOR = 1.05


@dataclass(frozen=True, eq=False)
class SosApproximation:
    vmat: np.ndarray
    incidence: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vmat, dtype=float))
        m = np.atleast_2d(np.asarray(self.incidence, dtype=float))
        if m.shape[0] != v.shape[1]:
            raise ValueError(f"incidence has {m.shape[0]} rows but there are {v.shape[1]} vertices")
        if not np.all((m == 0) | (m == 1)):
            raise ValueError("incidence entries must be 0 or 1")
        dim = v.shape[0] - 1
        if np.any(m.sum(axis=0) != dim + 1):
            raise ValueError(f"every simplex needs exactly {dim + 1} vertices")
        if np.any(m.sum(axis=1) == 0):
            raise ValueError("every vertex must belong to at least one simplex")
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "vmat", v)
        object.__setattr__(self, "incidence", m)

    @property
    def dim(self) -> int:
        """Dimension of the function's domain."""
        return self.vmat.shape[0] - 1

    @property
    def n_vertices(self) -> int:
        return self.vmat.shape[1]

    @property
    def n_simplexes(self) -> int:
        return self.incidence.shape[1]


@dataclass(frozen=True, eq=False)
class EnclosedFunction:
    """Graph enclosure of a scalar function over an interval domain."""

    graph_set: HybridZonotope
    domain: Interval
    error_bound: float
    sos: SosApproximation | None = None
    name: str = ""


def build_sos_1d(breakpoints, values) -> SosApproximation:
    x = np.asarray(breakpoints, dtype=float).reshape(-1)
    y = np.asarray(values, dtype=float).reshape(-1)
    if x.size != y.size:
        raise ValueError(f"{x.size} breakpoints but {y.size} values")
    if x.size < 2:
        raise TooFewVertices(f"need at least 2 vertices, got {x.size}")
    if np.any(np.diff(x) <= 0):
        raise UnsortedBreakpoints("breakpoints must be strictly increasing")
    nv = x.size
    m = np.zeros((nv, nv - 1))
    idx = np.arange(nv - 1)
    m[idx, idx] = 1.0
    m[idx + 1, idx] = 1.0
    return SosApproximation(np.vstack([x, y]), m)


def sos_to_hybzono(s: SosApproximation) -> HybridZonotope:
    """Exact hybrid-zonotope form of an SOS approximation.

    Continuous factors encode the convex weights ``lam = (xi_c + 1)/2`` and
    binary factors the simplex selector ``delta = (xi_b + 1)/2``; the
    constraints ``sum(lam) = 1``, ``sum(delta) = 1`` and ``lam <= M delta``
    confine the weights to one simplex.
    """
    nv, N = s.n_vertices, s.n_simplexes
    q = HybridZonotope(
        0.5 * np.vstack([np.eye(nv), np.zeros((N, nv))]),
        0.5 * np.vstack([np.zeros((nv, N)), np.eye(N)]),
        0.5 * np.ones(nv + N),
        np.vstack([np.ones((1, nv)), np.zeros((1, nv))]),
        np.vstack([np.zeros((1, N)), np.ones((1, N))]),
        np.array([2.0 - nv, 2.0 - N]),
    )
    # lam - M delta <= 0, one row at a time
    r = np.hstack([np.eye(nv), -s.incidence])
    d = q
    for j in range(nv):
        d = sets.halfspace_intersection(d, r[j : j + 1], HalfSpace([1.0], 0.0))
    return sets.linear_map(np.hstack([s.vmat, np.zeros((s.dim + 1, N))]), d)


def interp_1d(s: SosApproximation, x) -> np.ndarray:
    if s.dim != 1:
        raise ValueError("interp_1d needs a 1-D SOS approximation")
    return np.interp(x, s.vmat[0], s.vmat[1])


def sos_error_bound(f: Callable, s: SosApproximation, samples_per_segment: int = DEFAULT_SAMPLES_PER_SEGMENT) -> float:
    """Sampled maximum of ``|f - interp|`` over every segment, times 1.05."""
    if s.dim != 1:
        raise ValueError("sos_error_bound supports 1-D approximations only")
    xs = s.vmat[0]
    t = np.linspace(0.0, 1.0, max(int(samples_per_segment), 2))
    grid = (xs[:-1, None] + np.diff(xs)[:, None] * t[None, :]).reshape(-1)
    try:
        fx = np.asarray(f(grid), dtype=float)
    except Exception as exc:  # noqa: BLE001 - any failure of the user callable
        raise EvaluationFailure(f"function evaluation failed: {exc}") from exc
    if fx.shape != grid.shape or not np.all(np.isfinite(fx)):
        raise EvaluationFailure("function returned non-finite or mis-shaped values")
    err = np.abs(fx - interp_1d(s, grid)).max()
    return float(err * SAFETY_FACTOR)


def envelope(zsos: HybridZonotope, delta: float) -> HybridZonotope:
    """Minkowski sum with ``[-delta, delta]`` in the last (output) coordinate."""
    if delta < 0:
        raise NegativeDelta(f"delta must be nonnegative, got {delta}")
    g = np.zeros((zsos.n, 1))
    g[-1, 0] = delta
    return sets.minkowski_sum(zsos, HybridZonotope.build(gc=g, c=np.zeros(zsos.n)))


def enclose_1d(f: Callable | None, breakpoints, values=None, delta: float | None = None, name: str = "",
               samples_per_segment: int = DEFAULT_SAMPLES_PER_SEGMENT) -> EnclosedFunction:
    """Tabulate ``f`` on ``breakpoints`` and wrap it in a verified envelope.

    With ``values`` given the table is used as-is; ``delta`` defaults to the
    sampled bound when ``f`` is available and to 0 otherwise.
    """
    x = np.asarray(breakpoints, dtype=float)
    if values is None:
        if f is None:
            raise ValueError("need either a function or a table of values")
        values = np.asarray(f(x), dtype=float)
    s = build_sos_1d(x, values)
    if delta is None:
        delta = sos_error_bound(f, s, samples_per_segment) if f is not None else 0.0
    z = envelope(sos_to_hybzono(s), delta)
    return EnclosedFunction(z, Interval([x[0]], [x[-1]]), float(delta), s, name)


def sat(s, lo=-1.0, hi=1.0):
    return np.clip(s, lo, hi)


def sat_breakpoints(smin: float, smax: float, lo: float, hi: float) -> np.ndarray:
    """Breakpoints of ``clip(., lo, hi)`` over ``[smin, smax]``: the ends plus interior kinks."""
    pts = [smin] + [k for k in (lo, hi) if smin < k < smax] + [smax]
    return np.array(pts, dtype=float)


NAMED_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "tanh": np.tanh}
