"""Set queries answered in factor space: emptiness, membership, support, leaves.

Every query that needs a search goes through :func:`hzreach.milp.solve_mixed`.
If the search stops at its node limit the query raises
:class:`~hzreach.errors.Indeterminate` rather than guess.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import sets
from .errors import CapExceeded, Indeterminate
from .lp import lp_solve
from .milp import DEFAULT_NODE_LIMIT, MilpProblem, MilpResult, milp_solve, solve_mixed
from .sets import HybridZonotope, Interval

__all__ = [
    "Leaf",
    "is_empty",
    "contains_point",
    "support",
    "support_bound",
    "interval_hull",
    "hull_within",
    "leaf_enumerate",
    "count_nonempty_leaves",
    "reduce_trivial",
    "empty_set",
    "grid_membership_export",
    "grid_to_csv",
    "CONTAINMENT_TOL",
]

CONTAINMENT_TOL = 1e-6


def _factor_lp(z: HybridZonotope):
    a_eq = np.hstack([z.ac, z.ab])
    n = z.ng + z.nb
    return a_eq, z.bvec.copy(), -np.ones(n), np.ones(n), np.arange(z.ng, n)


def _require(res: MilpResult, what: str):
    if res.status == "node_limit":
        raise Indeterminate(f"{what}: node limit reached after {res.nodes_explored} nodes (bound {res.bound:.6g})")


def is_empty(z: HybridZonotope, node_limit: int = DEFAULT_NODE_LIMIT) -> bool:
    a_eq, b, lo, hi, binary = _factor_lp(z)
    res = solve_mixed(np.zeros(lo.size), a_eq, b, lo, hi, binary, node_limit=node_limit)
    _require(res, "emptiness")
    return res.status == "infeasible"


def _membership_system(z: HybridZonotope, x, tol: float):
    """Factor system with ``G xi + e = x - c`` appended, ``e`` in [-tol, tol]."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != z.n:
        raise ValueError(f"point has dimension {x.shape[0]}, set has {z.n}")
    nf = z.ng + z.nb
    top = np.hstack([z.ac, z.ab, np.zeros((z.nc, z.n))])
    bottom = np.hstack([z.gc, z.gb, np.eye(z.n)])
    a_eq = np.vstack([top, bottom])
    b = np.concatenate([z.bvec, x - z.center])
    lo = np.concatenate([-np.ones(nf), -tol * np.ones(z.n)])
    hi = np.concatenate([np.ones(nf), tol * np.ones(z.n)])
    return a_eq, b, lo, hi, np.arange(z.ng, nf)


def contains_point(z: HybridZonotope, x, tol: float = CONTAINMENT_TOL, node_limit: int = DEFAULT_NODE_LIMIT,
                   return_witness: bool = False):
    """True iff some admissible factor maps to within ``tol`` (infinity norm) of ``x``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    a_eq, b, lo, hi, binary = _membership_system(z, x, tol)
    res = solve_mixed(np.zeros(lo.size), a_eq, b, lo, hi, binary, node_limit=node_limit)
    _require(res, "containment")
    inside = res.status != "infeasible"
    if return_witness:
        w = None if not inside else res.witness[: z.ng + z.nb]
        return inside, w
    return inside


def _support_problem(z: HybridZonotope, d):
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.shape[0] != z.n:
        raise ValueError(f"direction has dimension {d.shape[0]}, set has {z.n}")
    obj = np.concatenate([d @ z.gc, d @ z.gb])
    return MilpProblem(obj, z, "max"), float(d @ z.center)


def support(z: HybridZonotope, d, node_limit: int = DEFAULT_NODE_LIMIT, return_result: bool = False,
            branching: str = "most_fractional"):
    """``max d @ x`` over ``z``; ``-inf`` for the empty set."""
    prob, offset = _support_problem(z, d)
    res = milp_solve(prob, node_limit=node_limit, branching=branching)
    _require(res, "support")
    value = -np.inf if res.status == "infeasible" else res.value + offset
    if return_result:
        return value, res
    return value


def support_bound(z: HybridZonotope, d, threshold: float, node_limit: int = DEFAULT_NODE_LIMIT,
                  branching: str = "most_fractional", return_result: bool = False):
    """Decide ``support(z, d) <= threshold`` without computing the support exactly."""
    prob, offset = _support_problem(z, d)
    res = milp_solve(prob, node_limit=node_limit, decide=threshold - offset, branching=branching)
    _require(res, "support bound")
    if res.status == "infeasible":
        ok = True
    elif res.status == "cutoff":
        ok = not res.extra["decided"]
    else:
        ok = res.value <= threshold - offset
    return (ok, res) if return_result else ok


def interval_hull(z: HybridZonotope, node_limit: int = DEFAULT_NODE_LIMIT, branching: str = "most_fractional") -> Interval:
    lo = np.empty(z.n)
    hi = np.empty(z.n)
    for i in range(z.n):
        e = np.zeros(z.n)
        e[i] = 1.0
        hi[i] = support(z, e, node_limit, branching=branching)
        lo[i] = -support(z, -e, node_limit, branching=branching)
    if not np.all(np.isfinite(lo)):
        raise ValueError("interval hull of an empty set")
    return Interval(lo, hi)


def hull_within(z: HybridZonotope, box: Interval, tol: float = 1e-9, node_limit: int = DEFAULT_NODE_LIMIT) -> bool:
    """Decide ``interval_hull(z) ⊆ box`` with 2n threshold queries."""
    if box.n != z.n:
        raise ValueError(f"box has dimension {box.n}, set has {z.n}")
    for i in range(z.n):
        e = np.zeros(z.n)
        e[i] = 1.0
        if not support_bound(z, e, box.hi[i] + tol, node_limit):
            return False
        if not support_bound(z, -e, -box.lo[i] + tol, node_limit):
            return False
    return True


@dataclass(frozen=True, eq=False)
class Leaf:
    assignment: np.ndarray
    set: HybridZonotope


def fix_binaries(z: HybridZonotope, xb) -> HybridZonotope:
    """The constrained zonotope obtained by fixing every binary factor."""
    xb = np.asarray(xb, dtype=float)
    return HybridZonotope(
        z.gc, np.zeros((z.n, 0)), z.center + z.gb @ xb, z.ac, np.zeros((z.nc, 0)), z.bvec - z.ab @ xb
    )


def _lp_feasible(a_eq, b, lo, hi) -> bool:
    if a_eq.shape[0] == 0:
        return True
    return lp_solve(np.zeros(lo.size), a_eq, b, lo, hi).optimal


def _walk_leaves(z: HybridZonotope, cap: int, collect: bool):
    """Branch-and-prune over binaries in index order; LP infeasibility prunes."""
    a_eq, b, lo, hi, binary = _factor_lp(z)
    found = []
    count = 0
    stack = [(lo.copy(), hi.copy(), 0)]
    while stack:
        nlo, nhi, depth = stack.pop()
        fixed = nlo == nhi
        free = ~fixed
        rhs = b - a_eq[:, fixed] @ nlo[fixed]
        if not _lp_feasible(a_eq[:, free], rhs, nlo[free], nhi[free]):
            continue
        if depth == binary.size:
            count += 1
            if collect:
                found.append(nlo[binary].copy())
            if count > cap:
                raise CapExceeded(f"more than {cap} nonempty leaves", count)
            continue
        j = binary[depth]
        for v in (1.0, -1.0):
            clo, chi = nlo.copy(), nhi.copy()
            clo[j] = chi[j] = v
            stack.append((clo, chi, depth + 1))
    return count, found


def leaf_enumerate(z: HybridZonotope, cap: int = 4096) -> list[Leaf]:
    """All binary assignments whose constrained zonotope is nonempty.

    When ``2**nb <= cap`` every assignment is tested directly; otherwise the
    branch-and-prune walk is used and stops with :class:`CapExceeded` after
    ``cap`` leaves.
    """
    if z.nb == 0:
        return [Leaf(np.zeros(0), z)] if not _cz_empty(z) else []
    if z.nb < 63 and 2 ** z.nb <= cap:
        leaves = []
        for bits in itertools.product((-1.0, 1.0), repeat=z.nb):
            xb = np.array(bits)
            cz = fix_binaries(z, xb)
            if not _cz_empty(cz):
                leaves.append(Leaf(xb, cz))
        return leaves
    _, found = _walk_leaves(z, cap, collect=True)
    return [Leaf(xb, fix_binaries(z, xb)) for xb in found]


def _cz_empty(z: HybridZonotope) -> bool:
    return not _lp_feasible(z.ac, z.bvec, -np.ones(z.ng), np.ones(z.ng))


def count_nonempty_leaves(z: HybridZonotope, cap: int = 1_000_000) -> int:
    """Number of nonempty leaves, exact; raises :class:`CapExceeded` past ``cap``."""
    if z.nb == 0:
        return 0 if _cz_empty(z) else 1
    count, _ = _walk_leaves(z, cap, collect=False)
    return count


def empty_set(n: int) -> HybridZonotope:
    """Canonical definitely-empty set: one inconsistent constraint ``0 = 1``."""
    return HybridZonotope(np.zeros((n, 0)), np.zeros((n, 0)), np.zeros(n), np.zeros((1, 0)), np.zeros((1, 0)), np.ones(1))


def reduce_trivial(z: HybridZonotope, tol: float = 1e-12) -> HybridZonotope:
    """Drop all-zero factor columns and linearly dependent constraint rows."""
    keep_c = np.any(np.abs(z.gc) > tol, axis=0) | np.any(np.abs(z.ac) > tol, axis=0)
    keep_b = np.any(np.abs(z.gb) > tol, axis=0) | np.any(np.abs(z.ab) > tol, axis=0)
    gc, ac = z.gc[:, keep_c], z.ac[:, keep_c]
    gb, ab = z.gb[:, keep_b], z.ab[:, keep_b]
    bvec = z.bvec
    if z.nc:
        a = np.hstack([ac, ab])
        scale = max(1.0, np.abs(a).max(initial=0.0), np.abs(bvec).max(initial=0.0))
        rank_tol = 1e-10 * scale * max(a.shape)
        if a.shape[1] == 0:
            rank_a, rows = 0, np.zeros(0, dtype=int)
        else:
            _, r, piv = scipy.linalg.qr(a.T, pivoting=True, mode="economic")
            diag = np.abs(np.diag(r))
            rank_a = int(np.sum(diag > rank_tol))
            rows = np.sort(piv[:rank_a])
        ab_full = np.hstack([a, bvec[:, None]])
        rank_ab = int(np.linalg.matrix_rank(ab_full, tol=rank_tol))
        if rank_ab > rank_a:
            return empty_set(z.n)
        ac, ab, bvec = ac[rows], ab[rows], bvec[rows]
    return HybridZonotope(gc, gb, z.center, ac, ab, bvec)


def grid_membership_export(z: HybridZonotope, dims=(0, 1), window: Interval | None = None, resolution: float = 0.1,
                           tol: float = CONTAINMENT_TOL, node_limit: int = DEFAULT_NODE_LIMIT):
    """Classify cell centres of a 2-D grid over the projection of ``z`` onto ``dims``.

    Returns ``(xs, ys, status)`` where ``status[i, j]`` is ``"in"``, ``"out"``
    or ``"indeterminate"`` for the cell centred at ``(xs[j], ys[i])``.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) != 2 or not all(0 <= d < z.n for d in dims):
        raise ValueError(f"dims must be two axes of a set in R^{z.n}, got {dims}")
    sel = np.zeros((2, z.n))
    sel[0, dims[0]] = 1.0
    sel[1, dims[1]] = 1.0
    proj = sets.linear_map(sel, z)
    if window is None:
        window = interval_hull(proj, node_limit)
    nx = max(1, int(round((window.hi[0] - window.lo[0]) / resolution)))
    ny = max(1, int(round((window.hi[1] - window.lo[1]) / resolution)))
    xs = window.lo[0] + (np.arange(nx) + 0.5) * (window.hi[0] - window.lo[0]) / nx
    ys = window.lo[1] + (np.arange(ny) + 0.5) * (window.hi[1] - window.lo[1]) / ny
    status = np.empty((ny, nx), dtype=object)
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            try:
                status[i, j] = "in" if contains_point(proj, (x, y), tol, node_limit) else "out"
            except Indeterminate:
                status[i, j] = "indeterminate"
    return xs, ys, status


def grid_to_csv(xs, ys, status) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "status"])
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            w.writerow([repr(float(x)), repr(float(y)), status[i, j]])
    return buf.getvalue()
