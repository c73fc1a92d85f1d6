"""Hybrid zonotopes and the closed-form operations they are closed under.

A hybrid zonotope ``<Gc, Gb, c, Ac, Ab, b>`` is the set

    { Gc xc + Gb xb + c  |  xc in [-1, 1]^ng, xb in {-1, 1}^nb, Ac xc + Ab xb = b }.

All operations are pure and return new objects; the factor ordering of the
result is always "first operand's factors, then second operand's factors".
Callers that build witnesses (see :mod:`hzreach.sus`) rely on that ordering.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteEntry

__all__ = [
    "HybridZonotope",
    "Interval",
    "HalfSpace",
    "validate",
    "interval_to_zonotope",
    "point",
    "linear_map",
    "minkowski_sum",
    "generalized_intersection",
    "halfspace_intersection",
    "cartesian_product",
    "to_json",
    "from_json",
    "to_dict",
    "from_dict",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _mat(a, rows, cols):
    if a is None:
        return np.zeros((rows, cols))
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((rows, cols))
    return np.atleast_2d(a)


@dataclass(frozen=True, eq=False)
class HybridZonotope:
    gc: np.ndarray
    gb: np.ndarray
    center: np.ndarray
    ac: np.ndarray
    ab: np.ndarray
    bvec: np.ndarray

    def __post_init__(self):
        for name in ("gc", "gb", "center", "ac", "ab", "bvec"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        validate(self)

    @classmethod
    def build(cls, gc=None, gb=None, c=None, ac=None, ab=None, b=None):
        """Construct from possibly-missing blocks, inferring empty shapes."""
        if c is None:
            raise DimensionMismatch("center is required")
        c = np.asarray(c, dtype=float).reshape(-1)
        n = c.size
        gc = _mat(gc, n, 0)
        gb = _mat(gb, n, 0)
        b = np.zeros(0) if b is None else np.asarray(b, dtype=float).reshape(-1)
        nc = b.size
        ac = _mat(ac, nc, gc.shape[1])
        ab = _mat(ab, nc, gb.shape[1])
        return cls(gc, gb, c, ac, ab, b)

    @property
    def n(self) -> int:
        return self.center.shape[0]

    @property
    def ng(self) -> int:
        return self.gc.shape[1]

    @property
    def nb(self) -> int:
        return self.gb.shape[1]

    @property
    def nc(self) -> int:
        return self.bvec.shape[0]

    @property
    def complexity(self) -> tuple[int, int, int]:
        return (self.ng, self.nb, self.nc)

    def point_from_factors(self, xc, xb) -> np.ndarray:
        return self.gc @ np.asarray(xc, float) + self.gb @ np.asarray(xb, float) + self.center

    def constraint_residual(self, xc, xb) -> np.ndarray:
        return self.ac @ np.asarray(xc, float) + self.ab @ np.asarray(xb, float) - self.bvec

    def __repr__(self):
        return f"HybridZonotope(n={self.n}, ng={self.ng}, nb={self.nb}, nc={self.nc})"


def validate(z: HybridZonotope) -> None:
    """Raise if ``z`` violates a dimensional invariant or holds a non-finite entry."""
    if z.center.ndim != 1:
        raise DimensionMismatch(f"center must be a vector, got shape {z.center.shape}")
    n = z.center.shape[0]
    nc = z.bvec.shape[0] if z.bvec.ndim == 1 else -1
    if z.bvec.ndim != 1:
        raise DimensionMismatch(f"bvec must be a vector, got shape {z.bvec.shape}")
    for name in ("gc", "gb", "ac", "ab"):
        if getattr(z, name).ndim != 2:
            raise DimensionMismatch(f"{name} must be a matrix, got shape {getattr(z, name).shape}")
    if z.gc.shape[0] != n:
        raise DimensionMismatch(f"gc has {z.gc.shape[0]} rows, expected n={n}")
    if z.gb.shape[0] != n:
        raise DimensionMismatch(f"gb has {z.gb.shape[0]} rows, expected n={n}")
    if z.ac.shape[0] != nc:
        raise DimensionMismatch(f"ac has {z.ac.shape[0]} rows, bvec has length {nc}")
    if z.ab.shape[0] != nc:
        raise DimensionMismatch(f"ab has {z.ab.shape[0]} rows, bvec has length {nc}")
    if z.ac.shape[1] != z.gc.shape[1]:
        raise DimensionMismatch(f"ac has {z.ac.shape[1]} columns, gc has {z.gc.shape[1]}")
    if z.ab.shape[1] != z.gb.shape[1]:
        raise DimensionMismatch(f"ab has {z.ab.shape[1]} columns, gb has {z.gb.shape[1]}")
    for name in ("gc", "gb", "center", "ac", "ab", "bvec"):
        if not np.all(np.isfinite(getattr(z, name))):
            raise NonFiniteEntry(f"{name} contains non-finite entries")


@dataclass(frozen=True, eq=False)
class Interval:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _frozen(np.atleast_1d(np.asarray(self.lo, dtype=float)))
        hi = _frozen(np.atleast_1d(np.asarray(self.hi, dtype=float)))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch(f"interval bounds have shapes {lo.shape} and {hi.shape}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise NonFiniteEntry("interval bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("interval requires lo <= hi elementwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, n: int) -> "Interval":
        return cls(-np.ones(n), np.ones(n))

    @property
    def n(self) -> int:
        return self.lo.shape[0]

    @property
    def mid(self) -> np.ndarray:
        return (self.lo + self.hi) / 2

    @property
    def radius(self) -> np.ndarray:
        return (self.hi - self.lo) / 2

    def contains(self, other: "Interval", tol: float = 0.0) -> bool:
        return bool(np.all(other.lo >= self.lo - tol) and np.all(other.hi <= self.hi + tol))

    def contains_point(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def product(self, other: "Interval") -> "Interval":
        return Interval(np.concatenate([self.lo, other.lo]), np.concatenate([self.hi, other.hi]))

    def __getitem__(self, idx) -> "Interval":
        return Interval(np.atleast_1d(self.lo[idx]), np.atleast_1d(self.hi[idx]))

    def __repr__(self):
        return f"Interval(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


@dataclass(frozen=True, eq=False)
class HalfSpace:
    """The set ``{x : normal @ x <= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = _frozen(np.atleast_1d(np.asarray(self.normal, dtype=float)))
        if a.ndim != 1 or not np.any(a != 0):
            raise ValueError("half-space normal must be a nonzero vector")
        if not (np.all(np.isfinite(a)) and np.isfinite(self.offset)):
            raise NonFiniteEntry("half-space data must be finite")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))


def interval_to_zonotope(iv: Interval) -> HybridZonotope:
    return HybridZonotope.build(gc=np.diag(iv.radius), c=iv.mid)


def point(p) -> HybridZonotope:
    """Singleton set ``{p}`` (no generators)."""
    return HybridZonotope.build(c=np.asarray(p, dtype=float).reshape(-1))


def _blkdiag(a, b):
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]))
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def linear_map(r, z: HybridZonotope) -> HybridZonotope:
    r = np.atleast_2d(np.asarray(r, dtype=float))
    if r.shape[1] != z.n:
        raise DimensionMismatch(f"map has {r.shape[1]} columns, set has dimension {z.n}")
    return HybridZonotope(r @ z.gc, r @ z.gb, r @ z.center, z.ac, z.ab, z.bvec)


def minkowski_sum(z: HybridZonotope, w: HybridZonotope) -> HybridZonotope:
    if z.n != w.n:
        raise DimensionMismatch(f"Minkowski sum of sets in R^{z.n} and R^{w.n}")
    return HybridZonotope(
        np.hstack([z.gc, w.gc]),
        np.hstack([z.gb, w.gb]),
        z.center + w.center,
        _blkdiag(z.ac, w.ac),
        _blkdiag(z.ab, w.ab),
        np.concatenate([z.bvec, w.bvec]),
    )


def generalized_intersection(z: HybridZonotope, y: HybridZonotope, r) -> HybridZonotope:
    """``{x in z | r x in y}``."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    if r.shape != (y.n, z.n):
        raise DimensionMismatch(f"intersection map must be {y.n}x{z.n}, got {r.shape[0]}x{r.shape[1]}")
    ac = np.vstack([_blkdiag(z.ac, y.ac), np.hstack([r @ z.gc, -y.gc])])
    ab = np.vstack([_blkdiag(z.ab, y.ab), np.hstack([r @ z.gb, -y.gb])])
    return HybridZonotope(
        np.hstack([z.gc, np.zeros((z.n, y.ng))]),
        np.hstack([z.gb, np.zeros((z.n, y.nb))]),
        z.center,
        ac,
        ab,
        np.concatenate([z.bvec, y.bvec, y.center - r @ z.center]),
    )


def halfspace_intersection(z: HybridZonotope, r, h: HalfSpace) -> HybridZonotope:
    """``{x in z | h.normal @ (r x) <= h.offset}`` via one bounded slack factor."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    if r.shape[1] != z.n or r.shape[0] != h.normal.shape[0]:
        raise DimensionMismatch(
            f"half-space in R^{h.normal.shape[0]} under a {r.shape[0]}x{r.shape[1]} map of a set in R^{z.n}"
        )
    ar = h.normal @ r
    row_c = ar @ z.gc
    row_b = ar @ z.gb
    rhs = h.offset - ar @ z.center
    # slack s = rhs - row.xi lies in [0, dm]; dm < 0 means the set is empty and
    # the clamped constraint is then infeasible, which is the right answer
    dm = max(rhs + np.abs(row_c).sum() + np.abs(row_b).sum(), 0.0)
    ac = np.zeros((z.nc + 1, z.ng + 1))
    ac[: z.nc, : z.ng] = z.ac
    ac[z.nc, : z.ng] = row_c
    ac[z.nc, z.ng] = dm / 2
    ab = np.vstack([z.ab, row_b[None, :]])
    return HybridZonotope(
        np.hstack([z.gc, np.zeros((z.n, 1))]),
        z.gb,
        z.center,
        ac,
        ab,
        np.concatenate([z.bvec, [rhs - dm / 2]]),
    )


def cartesian_product(z: HybridZonotope, y: HybridZonotope) -> HybridZonotope:
    return HybridZonotope(
        _blkdiag(z.gc, y.gc),
        _blkdiag(z.gb, y.gb),
        np.concatenate([z.center, y.center]),
        _blkdiag(z.ac, y.ac),
        _blkdiag(z.ab, y.ab),
        np.concatenate([z.bvec, y.bvec]),
    )


FORMAT_VERSION = 1


def to_dict(z: HybridZonotope) -> dict:
    # nested lists hold exact binary64 values; json writes repr(), which round-trips
    return {
        "format_version": FORMAT_VERSION,
        "n": z.n,
        "gc": z.gc.tolist(),
        "gb": z.gb.tolist(),
        "c": z.center.tolist(),
        "ac": z.ac.tolist(),
        "ab": z.ab.tolist(),
        "b": z.bvec.tolist(),
    }


def from_dict(d: dict) -> HybridZonotope:
    c = np.asarray(d["c"], dtype=float).reshape(-1)
    n = c.size
    b = np.asarray(d.get("b", []), dtype=float).reshape(-1)

    def block(key, rows, cols_hint=None):
        a = np.asarray(d.get(key, []), dtype=float)
        if a.size == 0:
            return np.zeros((rows, cols_hint or 0))
        return np.atleast_2d(a)

    gc = block("gc", n)
    gb = block("gb", n)
    ac = block("ac", b.size, gc.shape[1])
    ab = block("ab", b.size, gb.shape[1])
    return HybridZonotope(gc, gb, c, ac, ab, b)


def to_json(z: HybridZonotope, **kwargs) -> str:
    return json.dumps(to_dict(z), **kwargs)


def from_json(text: str) -> HybridZonotope:
    return from_dict(json.loads(text))
