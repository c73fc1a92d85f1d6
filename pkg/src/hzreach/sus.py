"""State-update sets and successor sets of discrete-time nonlinear systems.

The open-loop state-update set holds every triple ``(x, u, x+)`` with
``x+ = f(x, u)`` over a box domain ``X x U``; the closed-loop one holds every
pair ``(x, x+)`` under a feedback law.  Successor sets are then one
generalized intersection and one projection away, so iterating them grows
the representation linearly in the number of steps.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import query, sets
from .errors import DimensionMismatch, DomainNotCovered, DomainViolation, NonScalarArgument
from .milp import DEFAULT_NODE_LIMIT
from .sets import HybridZonotope, Interval
from .sos import EnclosedFunction, enclose_1d, sat, sat_breakpoints

__all__ = [
    "NonlinearTerm",
    "SystemModel",
    "StateUpdateSet",
    "StateInputMap",
    "SaturatedLinearLaw",
    "ReachRecord",
    "build_open_loop_sus",
    "build_state_input_map",
    "close_loop",
    "successor_open",
    "successor_closed",
    "reach",
    "output_range",
    "check_domain",
]


@dataclass(frozen=True, eq=False)
class NonlinearTerm:
    """``gain * func(arg @ (x, u))`` added to the affine part of the dynamics."""

    gain: np.ndarray
    arg: np.ndarray
    func: EnclosedFunction
    evaluate: Callable | None = None


@dataclass(frozen=True, eq=False)
class SystemModel:
    amat: np.ndarray
    bmat: np.ndarray
    state_domain: Interval
    input_domain: Interval
    nonlinear_terms: tuple = ()

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.amat, dtype=float))
        b = np.asarray(self.bmat, dtype=float)
        if b.ndim == 1:
            b = b.reshape(a.shape[0], -1)
        object.__setattr__(self, "amat", a)
        object.__setattr__(self, "bmat", b)
        object.__setattr__(self, "nonlinear_terms", tuple(self.nonlinear_terms))
        n, nu = self.n, self.nu
        if a.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {a.shape}")
        if b.shape[0] != n:
            raise DimensionMismatch(f"B has {b.shape[0]} rows, expected {n}")
        if self.state_domain.n != n or self.input_domain.n != nu:
            raise DimensionMismatch("state/input domains do not match A and B")
        for t in self.nonlinear_terms:
            if np.asarray(t.gain).shape != (n,):
                raise DimensionMismatch(f"term gain must have length {n}")
            if np.asarray(t.arg).shape != (n + nu,):
                raise DimensionMismatch(f"term argument row must have length {n + nu}")

    @property
    def n(self) -> int:
        return self.amat.shape[0]

    @property
    def nu(self) -> int:
        return self.bmat.shape[1]

    def step(self, x, u) -> np.ndarray:
        """Exact one-step map, for trajectory oracles."""
        x = np.asarray(x, dtype=float)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = self.amat @ x + self.bmat @ u
        xu = np.concatenate([x, u])
        for t in self.nonlinear_terms:
            if t.evaluate is None:
                raise ValueError("term has no evaluable function")
            out = out + np.asarray(t.gain) * float(t.evaluate(float(np.asarray(t.arg) @ xu)))
        return out


@dataclass(frozen=True, eq=False)
class StateUpdateSet:
    set: HybridZonotope
    kind: str  # "open" | "closed"
    domain_bounds: Interval
    dims: tuple

    def __post_init__(self):
        n, nu = self.dims
        expected = 2 * n + nu if self.kind == "open" else 2 * n
        if self.kind not in ("open", "closed"):
            raise ValueError(f"kind must be 'open' or 'closed', got {self.kind!r}")
        if self.set.n != expected:
            raise DimensionMismatch(f"{self.kind}-loop state-update set must live in R^{expected}, got R^{self.set.n}")


@dataclass(frozen=True, eq=False)
class StateInputMap:
    set: HybridZonotope
    domain_bounds: Interval

    def __post_init__(self):
        if self.set.n != self.domain_bounds.n + self.nu_hint:
            raise DimensionMismatch("state-input map dimension does not equal n + n_u")

    @property
    def nu_hint(self) -> int:
        return self.set.n - self.domain_bounds.n


@dataclass(frozen=True, eq=False)
class SaturatedLinearLaw:
    """``u = clip(K x, lo, hi)`` for a single input."""

    gain: np.ndarray
    limits: tuple

    def __call__(self, x) -> np.ndarray:
        return np.atleast_1d(sat(float(np.asarray(self.gain) @ np.asarray(x, float)), *self.limits))

    def enclosure(self, x_domain: Interval) -> EnclosedFunction:
        lo, hi = _affine_range(np.asarray(self.gain, float), x_domain)
        if hi - lo <= 0:
            lo, hi = lo - 1.0, hi + 1.0
        bps = sat_breakpoints(lo, hi, *self.limits)
        return enclose_1d(lambda s: sat(s, *self.limits), bps, delta=0.0, name="sat")


@dataclass
class ReachRecord:
    step: int
    set: HybridZonotope
    complexity: tuple
    wall_time: float
    check_time: float = 0.0
    extra: dict = field(default_factory=dict)


def _affine_range(row, box: Interval):
    row = np.asarray(row, dtype=float)
    mid = float(row @ box.mid)
    rad = float(np.abs(row) @ box.radius)
    return mid - rad, mid + rad


def output_range(func: EnclosedFunction, node_limit: int = DEFAULT_NODE_LIMIT):
    """Exact range of the last coordinate of ``func.graph_set``."""
    z = func.graph_set
    e = np.zeros(z.n)
    e[-1] = 1.0
    return -query.support(z, -e, node_limit), query.support(z, e, node_limit)


def _check_covered(row, box: Interval, func: EnclosedFunction, what: str):
    lo, hi = _affine_range(row, box)
    tol = 1e-9 * (1.0 + abs(lo) + abs(hi))
    if lo < func.domain.lo[0] - tol or hi > func.domain.hi[0] + tol:
        raise DomainNotCovered(
            f"{what} ranges over [{lo:.6g}, {hi:.6g}] but its enclosure covers "
            f"[{func.domain.lo[0]:.6g}, {func.domain.hi[0]:.6g}]"
        )


def build_open_loop_sus(m: SystemModel) -> StateUpdateSet:
    """Over-approximate ``{(x, u, f(x, u)) : (x, u) in X x U}``.

    One slack coordinate per nonlinear term: the box ``X x U`` is lifted with
    the slacks, each slack is sized to the exact output range of its
    enclosure, the pair (term argument, slack) is intersected with the
    enclosure's graph, and a final map assembles ``A x + B u + sum gain * slack``.
    """
    n, nu = m.n, m.nu
    nt = len(m.nonlinear_terms)
    dom = m.state_domain.product(m.input_domain)
    for j, t in enumerate(m.nonlinear_terms):
        if t.func.graph_set.n != 2:
            raise NonScalarArgument(f"term {j}: enclosure must be a graph over a scalar argument")
        _check_covered(t.arg, dom, t.func, f"argument of term {j}")
    p = sets.interval_to_zonotope(dom)
    if nt:
        lift = np.vstack([np.eye(n + nu), np.zeros((nt, n + nu))])
        p = sets.linear_map(lift, p)
        ranges = np.array([output_range(t.func) for t in m.nonlinear_terms])
        g = np.zeros((n + nu + nt, nt))
        c = np.zeros(n + nu + nt)
        for j in range(nt):
            g[n + nu + j, j] = (ranges[j, 1] - ranges[j, 0]) / 2
            c[n + nu + j] = (ranges[j, 1] + ranges[j, 0]) / 2
        p = sets.minkowski_sum(p, HybridZonotope.build(gc=g, c=c))
        for j, t in enumerate(m.nonlinear_terms):
            r = np.zeros((2, n + nu + nt))
            r[0, : n + nu] = t.arg
            r[1, n + nu + j] = 1.0
            p = sets.generalized_intersection(p, t.func.graph_set, r)
    final = np.zeros((2 * n + nu, n + nu + nt))
    final[: n + nu, : n + nu] = np.eye(n + nu)
    final[n + nu :, :n] = m.amat
    final[n + nu :, n : n + nu] = m.bmat
    for j, t in enumerate(m.nonlinear_terms):
        final[n + nu :, n + nu + j] = t.gain
    psi = sets.linear_map(final, p)
    return StateUpdateSet(psi, "open", dom, (n, nu))


def build_state_input_map(gain, pwl: EnclosedFunction, x_domain: Interval) -> StateInputMap:
    """Graph ``{(x, u) : u in pwl(K x), x in x_domain}`` of a scalar feedback law."""
    k = np.atleast_1d(np.asarray(gain, dtype=float)).reshape(-1)
    n = x_domain.n
    if k.shape[0] != n:
        raise DimensionMismatch(f"gain has length {k.shape[0]}, state dimension is {n}")
    _check_covered(k, x_domain, pwl, "K x")
    lift = np.vstack([np.eye(n), k[None, :], np.zeros((1, n))])
    p = sets.linear_map(lift, sets.interval_to_zonotope(x_domain))
    ulo, uhi = output_range(pwl)
    g = np.zeros((n + 2, 1))
    g[n + 1, 0] = (uhi - ulo) / 2
    c = np.zeros(n + 2)
    c[n + 1] = (uhi + ulo) / 2
    p = sets.minkowski_sum(p, HybridZonotope.build(gc=g, c=c))
    r = np.zeros((2, n + 2))
    r[0, n] = 1.0
    r[1, n + 1] = 1.0
    p = sets.generalized_intersection(p, pwl.graph_set, r)
    proj = np.zeros((n + 1, n + 2))
    proj[:n, :n] = np.eye(n)
    proj[n, n + 1] = 1.0
    return StateInputMap(sets.linear_map(proj, p), x_domain)


def close_loop(psi: StateUpdateSet, theta: StateInputMap, node_limit: int = DEFAULT_NODE_LIMIT) -> StateUpdateSet:
    if psi.kind != "open":
        raise ValueError("close_loop needs an open-loop state-update set")
    n, nu = psi.dims
    if theta.set.n != n + nu:
        raise DimensionMismatch(f"state-input map lives in R^{theta.set.n}, expected R^{n + nu}")
    r = np.hstack([np.eye(n + nu), np.zeros((n + nu, n))])
    inter = sets.generalized_intersection(psi.set, theta.set, r)
    sel = np.zeros((2 * n, 2 * n + nu))
    sel[:n, :n] = np.eye(n)
    sel[n:, n + nu :] = np.eye(n)
    phi = sets.linear_map(sel, inter)
    # domain of the closed loop: states of the map whose inputs lie in the open-loop domain
    dom_set = sets.generalized_intersection(theta.set, sets.interval_to_zonotope(psi.domain_bounds), np.eye(n + nu))
    x_part = sets.linear_map(np.hstack([np.eye(n), np.zeros((n, nu))]), dom_set)
    return StateUpdateSet(phi, "closed", query.interval_hull(x_part, node_limit), (n, 0))


def check_domain(z: HybridZonotope, box: Interval, step=None, node_limit: int = DEFAULT_NODE_LIMIT):
    """Raise :class:`DomainViolation` unless the interval hull of ``z`` lies in ``box``."""
    if not query.hull_within(z, box, node_limit=node_limit):
        raise DomainViolation(
            f"argument set is not contained in the state-update set domain {box!r}"
            + ("" if step is None else f" at step {step}"),
            step=step,
        )


def successor_open(psi: StateUpdateSet, rk: HybridZonotope, uk: HybridZonotope, check: bool = True,
                   node_limit: int = DEFAULT_NODE_LIMIT) -> HybridZonotope:
    if psi.kind != "open":
        raise ValueError("successor_open needs an open-loop state-update set")
    n, nu = psi.dims
    if rk.n != n or uk.n != nu:
        raise DimensionMismatch(f"expected sets in R^{n} and R^{nu}, got R^{rk.n} and R^{uk.n}")
    ru = sets.cartesian_product(rk, uk)
    if check:
        check_domain(ru, psi.domain_bounds, node_limit=node_limit)
    r = np.hstack([np.eye(n + nu), np.zeros((n + nu, n))])
    inter = sets.generalized_intersection(psi.set, ru, r)
    return sets.linear_map(np.hstack([np.zeros((n, n + nu)), np.eye(n)]), inter)


def successor_closed(phi: StateUpdateSet, rk: HybridZonotope, check: bool = True,
                     node_limit: int = DEFAULT_NODE_LIMIT, step=None) -> HybridZonotope:
    if phi.kind != "closed":
        raise ValueError("successor_closed needs a closed-loop state-update set")
    n = phi.dims[0]
    if rk.n != n:
        raise DimensionMismatch(f"expected a set in R^{n}, got R^{rk.n}")
    if check:
        check_domain(rk, phi.domain_bounds, step=step, node_limit=node_limit)
    inter = sets.generalized_intersection(phi.set, rk, np.hstack([np.eye(n), np.zeros((n, n))]))
    return sets.linear_map(np.hstack([np.zeros((n, n)), np.eye(n)]), inter)


def reach(phi: StateUpdateSet, r0: HybridZonotope, steps: int, check: bool = True, reduce: bool = False,
          node_limit: int = DEFAULT_NODE_LIMIT) -> list[ReachRecord]:
    """Iterate closed-loop successors; record ``k, R_k``, its complexity and timing.

    With ``check`` every ``R_k`` fed into a successor computation is first
    verified to lie in the state-update set's domain.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    records = [ReachRecord(0, r0, r0.complexity, 0.0)]
    rk = r0
    for k in range(steps):
        if check:
            t0 = time.perf_counter()
            check_domain(rk, phi.domain_bounds, step=k, node_limit=node_limit)
            records[-1].check_time = time.perf_counter() - t0
        t0 = time.perf_counter()
        rk = successor_closed(phi, rk, check=False)
        if reduce:
            rk = query.reduce_trivial(rk)
        records.append(ReachRecord(k + 1, rk, rk.complexity, time.perf_counter() - t0))
    return records
