"""Best-first branch and bound over binary factors.

The relaxation of a node relaxes every free binary factor from {-1, 1} to
[-1, 1]; branching fixes the most fractional one (value closest to 0, ties
to the lowest index) to -1 and +1.  Fixed binaries are substituted out of the
node LP rather than kept as degenerate columns.

``branching="sos"`` is an optional alternative for sets built from
piecewise-linear tables: rows of the form ``sum(xi_b) = const`` over binaries
say exactly one member is +1, and the rule splits such a group in two halves
(all of one half forced to -1 in each child), which balances the tree far
better than fixing a single binary.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from .lp import lp_solve
from .sets import HybridZonotope

__all__ = ["MilpProblem", "MilpResult", "milp_solve", "solve_mixed", "DEFAULT_NODE_LIMIT", "GAP_TOL", "INT_TOL",
           "BRANCHING_RULES"]

DEFAULT_NODE_LIMIT = 1_000_000
GAP_TOL = 1e-6
BRANCHING_RULES = ("most_fractional", "sos")
INT_TOL = 1e-7


@dataclass
class MilpProblem:
    """Optimise ``objective @ (xi_c, xi_b)`` over the factor space of ``set``."""

    objective: np.ndarray
    set: HybridZonotope
    sense: str = "max"

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        if self.objective.shape[0] != self.set.ng + self.set.nb:
            raise ValueError(
                f"objective has length {self.objective.shape[0]}, expected ng + nb = {self.set.ng + self.set.nb}"
            )
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")


@dataclass
class MilpResult:
    status: str  # "optimal" | "infeasible" | "node_limit" | "cutoff"
    value: float
    witness: np.ndarray | None
    nodes_explored: int
    gap: float
    bound: float
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_mixed(c, a_eq, b_eq, lo, hi, binary, *, maximize=True, node_limit=DEFAULT_NODE_LIMIT,
                gap_tol=GAP_TOL, decide=None, branching="most_fractional") -> MilpResult:
    """Branch and bound for ``max/min c @ x`` with ``x[binary]`` in {-1, 1}.

    With ``decide=t`` the search only answers "is the optimum strictly better
    than t?" and stops with status ``"cutoff"`` as soon as either an incumbent
    beats ``t`` or the global bound proves it cannot.  ``extra["decided"]`` is
    then True or False.
    """
    if branching not in BRANCHING_RULES:
        raise ValueError(f"unknown branching rule {branching!r}; choose from {BRANCHING_RULES}")
    c = np.asarray(c, dtype=float).reshape(-1)
    b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
    a_eq = np.asarray(a_eq, dtype=float).reshape(b_eq.shape[0], c.shape[0])
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    binary = np.asarray(binary, dtype=np.int64)
    n = c.shape[0]
    sgn = 1.0 if maximize else -1.0
    cm = sgn * c  # always maximise cm
    target = None if decide is None else sgn * float(decide)

    is_bin = np.zeros(n, dtype=bool)
    is_bin[binary] = True
    counter = itertools.count()
    nodes = 0

    def solve_node(fix_lo, fix_hi):
        nonlocal nodes
        nodes += 1
        fixed = fix_lo == fix_hi
        free = ~fixed
        rhs = b_eq - a_eq[:, fixed] @ fix_lo[fixed]
        res = lp_solve(cm[free], a_eq[:, free], rhs, fix_lo[free], fix_hi[free], maximize=True)
        if not res.optimal:
            return None
        x = fix_lo.copy()
        x[free] = res.x
        return res.value + float(cm[fixed] @ fix_lo[fixed]), x

    def pick_branch(x):
        vals = x[binary]
        frac = 1.0 - np.abs(vals)
        cand = np.nonzero(frac > INT_TOL)[0]
        if cand.size == 0:
            return -1
        # most fractional: largest distance from {-1, 1}; argmax takes the lowest index on ties
        return int(binary[cand[np.argmax(frac[cand])]])

    groups = _sos_groups(a_eq, b_eq, binary) if branching == "sos" else []

    def pick_sos(x, nlo, nhi):
        best_g, best_score = None, INT_TOL
        for g in groups:
            free = g[nlo[g] != nhi[g]]
            if free.size < 2:
                continue
            delta = (x[free] + 1) / 2
            score = 1.0 - delta.max()
            if score > best_score:
                best_score, best_g = score, free
        if best_g is None:
            return None
        delta = np.clip((x[best_g] + 1) / 2, 0, None)
        pos = np.arange(best_g.size)
        w = float(pos @ delta / max(delta.sum(), 1e-12))
        cut = min(max(int(np.floor(w)), 0), best_g.size - 2)
        return best_g[: cut + 1], best_g[cut + 1 :]

    def finish(status, inc_val, inc_x, bound, decided=None):
        value = sgn * inc_val if inc_x is not None else np.nan
        gap = abs(bound - inc_val) if inc_x is not None else np.inf
        extra = {} if decided is None else {"decided": decided}
        return MilpResult(status, value, inc_x, nodes, gap, sgn * bound, extra)

    root = solve_node(lo.copy(), hi.copy())
    if root is None:
        return MilpResult("infeasible", np.nan, None, nodes, 0.0, np.nan)
    heap = [(-root[0], next(counter), lo.copy(), hi.copy(), root[1])]
    inc_val, inc_x = -np.inf, None
    while heap:
        neg_bound, _, nlo, nhi, x = heap[0]
        bound = -neg_bound
        if inc_x is not None and bound <= inc_val + gap_tol * max(1.0, abs(inc_val)):
            return finish("optimal", inc_val, inc_x, max(bound, inc_val))
        if target is not None and bound <= target:
            return finish("cutoff", inc_val, inc_x, bound, decided=False)
        if nodes >= node_limit:
            return finish("node_limit", inc_val, inc_x, bound)
        heapq.heappop(heap)
        split = pick_sos(x, nlo, nhi) if groups else None
        if split is not None:
            for part in split:
                clo, chi = nlo.copy(), nhi.copy()
                clo[part] = chi[part] = -1.0
                child = solve_node(clo, chi)
                if child is None:
                    continue
                cb, cx = child
                if inc_x is not None and cb <= inc_val + gap_tol * max(1.0, abs(inc_val)):
                    continue
                heapq.heappush(heap, (-cb, -next(counter), clo, chi, cx))
            continue
        j = pick_branch(x)
        if j < 0:
            val = float(cm @ x)
            if val > inc_val:
                inc_val, inc_x = val, x
                if target is not None and inc_val > target:
                    return finish("cutoff", inc_val, inc_x, bound, decided=True)
            continue
        for v in (-1.0, 1.0):
            clo, chi = nlo.copy(), nhi.copy()
            clo[j] = chi[j] = v
            child = solve_node(clo, chi)
            if child is None:
                continue
            cb, cx = child
            if inc_x is not None and cb <= inc_val + gap_tol * max(1.0, abs(inc_val)):
                continue
            # the counter is negated so equal bounds pop depth-first (most recent)
            heapq.heappush(heap, (-cb, -next(counter), clo, chi, cx))
    if inc_x is None:
        return MilpResult("infeasible", np.nan, None, nodes, 0.0, np.nan)
    return finish("optimal", inc_val, inc_x, inc_val)


def _sos_groups(a_eq, b_eq, binary):
    """Binary groups tied by a row forcing exactly one member to +1.

    Over N binaries in {-1, 1}, ``sum(xi) = 2 - N`` holds iff exactly one is +1.
    """
    is_bin = np.zeros(a_eq.shape[1], dtype=bool)
    is_bin[binary] = True
    groups = []
    for row, rhs in zip(a_eq, b_eq):
        nz = np.nonzero(row)[0]
        if nz.size < 2 or not is_bin[nz].all() or not np.all(row[nz] == row[nz[0]]):
            continue
        if abs(rhs / row[nz[0]] - (2 - nz.size)) <= 1e-12 * nz.size:
            groups.append(nz)
    return groups


def milp_solve(p: MilpProblem, node_limit: int = DEFAULT_NODE_LIMIT, **kwargs) -> MilpResult:
    z = p.set
    ng, nb = z.ng, z.nb
    a_eq = np.hstack([z.ac, z.ab])
    lo = -np.ones(ng + nb)
    hi = np.ones(ng + nb)
    return solve_mixed(p.objective, a_eq, z.bvec, lo, hi, np.arange(ng, ng + nb),
                       maximize=(p.sense == "max"), node_limit=node_limit, **kwargs)
