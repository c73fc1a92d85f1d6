"""Dense two-phase bounded-variable primal simplex.

Solves ``min c @ x  s.t.  A x = b,  lo <= x <= hi`` with finite bounds, which
is the only LP shape the factor-space queries produce.  Bounds are handled
natively (nonbasic variables sit at a bound, bound flips need no pivot), so
the [-1, 1] factor boxes never become explicit rows.

Rows owning a singleton column whose implied value fits its bounds start with
that column basic (a crash basis); the remaining rows get artificials.
Artificial columns are never stored: once an artificial leaves the basis it
cannot return, so only ``B^-1 A`` over the structural columns is kept.

The kernels are compiled with numba when available; with
``HZREACH_DISABLE_NUMBA=1`` the same code runs on numpy, with the row
elimination swapped for a vectorised outer-product update.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import USING_NUMBA, njit
from .errors import NumericalFailure

__all__ = ["LPResult", "lp_solve", "FEAS_TOL"]

OPTIMAL = 0
INFEASIBLE = 1
ITERATION_LIMIT = 3

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-9
OPT_TOL = 1e-10
BLAND_AFTER = 5000


@njit
def _eliminate_loop(T, col, prow, r):
    m, n = T.shape
    for i in range(m):
        if i == r:
            continue
        f = col[i]
        if f != 0.0:
            for j in range(n):
                T[i, j] -= f * prow[j]


def _eliminate_numpy(T, col, prow, r):
    col = col.copy()
    col[r] = 0.0
    rows = np.nonzero(col)[0]
    if rows.size:
        T[rows] -= np.outer(col[rows], prow)


_eliminate = _eliminate_loop if USING_NUMBA else _eliminate_numpy


@njit
def _pivot(T, d, r, q):
    T[r, :] /= T[r, q]
    prow = T[r, :].copy()
    col = T[:, q].copy()
    _eliminate(T, col, prow, r)
    f = d[q]
    if f != 0.0:
        d -= f * prow


@njit
def _run_phase(T, beta, d, basis, at_upper, lo, hi, blo, bhi, is_basic, max_iter, bland_after):
    """Pivot until no improving column remains.  ``beta`` holds basic values.

    ``lo``/``hi`` bound the structural columns, ``blo``/``bhi`` the basic
    variable of each row (which may be an artificial).  Returns
    ``(status, iterations)``.
    """
    m, n = T.shape
    degenerate = 0
    it = 0
    while it < max_iter:
        use_bland = degenerate >= bland_after
        q = -1
        best = OPT_TOL
        for j in range(n):
            if is_basic[j] or hi[j] <= lo[j]:
                continue
            score = d[j] if at_upper[j] else -d[j]
            if score > best:
                q = j
                if use_bland:
                    break
                best = score
        if q < 0:
            return OPTIMAL, it
        sigma = -1.0 if at_upper[q] else 1.0
        # basic values move as beta - sigma * t * T[:, q]
        tmax = hi[q] - lo[q]
        r = -1
        r_to_upper = False
        best_alpha = 0.0
        for i in range(m):
            alpha = sigma * T[i, q]
            if alpha > PIVOT_TOL:
                t = (beta[i] - blo[i]) / alpha
                to_upper = False
            elif alpha < -PIVOT_TOL:
                if bhi[i] == np.inf:
                    continue
                t = (bhi[i] - beta[i]) / (-alpha)
                to_upper = True
            else:
                continue
            if t < 0.0:
                t = 0.0
            aa = abs(alpha)
            if t < tmax - FEAS_TOL:
                tmax = t
                r = i
                r_to_upper = to_upper
                best_alpha = aa
            elif t <= tmax + FEAS_TOL and r >= 0:
                better = basis[i] < basis[r] if use_bland else aa > best_alpha
                if better:
                    r = i
                    r_to_upper = to_upper
                    best_alpha = aa
                    if t < tmax:
                        tmax = t
        if tmax <= FEAS_TOL:
            degenerate += 1
        else:
            degenerate = 0
        step = sigma * tmax
        if step != 0.0:
            for i in range(m):
                beta[i] -= step * T[i, q]
        if r < 0:
            at_upper[q] = not at_upper[q]
        else:
            leaving = basis[r]
            entering_value = (hi[q] if at_upper[q] else lo[q]) + step
            _pivot(T, d, r, q)
            beta[r] = entering_value
            basis[r] = q
            is_basic[q] = True
            if leaving < n:
                is_basic[leaving] = False
                at_upper[leaving] = r_to_upper
            blo[r] = lo[q]
            bhi[r] = hi[q]
        it += 1
    return ITERATION_LIMIT, it


@njit
def _simplex_kernel(A, b, c, lo, hi, max_iter, bland_after):
    m, n = A.shape
    at_upper = np.abs(hi) < np.abs(lo)
    xn = np.where(at_upper, hi, lo)
    basis = -np.ones(m, dtype=np.int64)
    beta = np.zeros(m)
    blo = np.zeros(m)
    bhi = np.zeros(m)
    is_basic = np.zeros(n, dtype=np.bool_)
    T = A.copy()
    # crash: singleton columns whose implied value respects their bounds
    nnz = np.zeros(n, dtype=np.int64)
    row_of = np.zeros(n, dtype=np.int64)
    for i in range(m):
        for j in range(n):
            if A[i, j] != 0.0:
                nnz[j] += 1
                row_of[j] = i
    act = A @ xn
    for j in range(n):
        if nnz[j] != 1 or hi[j] <= lo[j]:
            continue
        i = row_of[j]
        if basis[i] >= 0:
            continue
        aij = A[i, j]
        val = (b[i] - act[i] + aij * xn[j]) / aij
        if lo[j] - FEAS_TOL <= val <= hi[j] + FEAS_TOL:
            basis[i] = j
            is_basic[j] = True
            beta[i] = min(max(val, lo[j]), hi[j])
            blo[i] = lo[j]
            bhi[i] = hi[j]
            T[i, :] /= aij
    d = np.zeros(n)
    n_art = 0
    scale = 1.0
    for i in range(m):
        scale = max(scale, abs(b[i]))
        if basis[i] >= 0:
            continue
        r = b[i] - act[i]
        if r < 0.0:
            T[i, :] = -T[i, :]
        basis[i] = n + i
        beta[i] = abs(r)
        blo[i] = 0.0
        bhi[i] = np.inf
        n_art += 1
        d -= T[i, :]
    it1 = 0
    if n_art > 0:
        status, it1 = _run_phase(T, beta, d, basis, at_upper, lo, hi, blo, bhi, is_basic, max_iter, bland_after)
        if status != OPTIMAL:
            return status, np.zeros(n), it1
        infeas = 0.0
        for i in range(m):
            if basis[i] >= n:
                infeas += beta[i]
        if infeas > FEAS_TOL * scale * max(1, m):
            return INFEASIBLE, np.zeros(n), it1
        dummy = np.zeros(n)
        for i in range(m):
            if basis[i] < n:
                continue
            blo[i] = 0.0
            bhi[i] = 0.0
            jbest = -1
            vbest = 1e-7
            for j in range(n):
                v = abs(T[i, j])
                if v > vbest and not is_basic[j]:
                    vbest = v
                    jbest = j
            if jbest >= 0:
                val = hi[jbest] if at_upper[jbest] else lo[jbest]
                _pivot(T, dummy, i, jbest)
                beta[i] = val
                basis[i] = jbest
                is_basic[jbest] = True
                blo[i] = lo[jbest]
                bhi[i] = hi[jbest]
    d = c.copy()
    for i in range(m):
        if basis[i] < n:
            cb = c[basis[i]]
            if cb != 0.0:
                d -= cb * T[i, :]
    status, it2 = _run_phase(T, beta, d, basis, at_upper, lo, hi, blo, bhi, is_basic, max_iter, bland_after)
    x = np.where(at_upper, hi, lo)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = beta[i]
    return status, x, it1 + it2


@dataclass
class LPResult:
    status: str
    value: float
    x: np.ndarray
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def lp_solve(c, a_eq, b_eq, lo, hi, maximize=False, max_iter=None, check=True) -> LPResult:
    """Optimise ``c @ x`` over ``{x in [lo, hi] : a_eq x = b_eq}``.

    Returns an :class:`LPResult` with status ``"optimal"`` or
    ``"infeasible"``.  An answer that fails the final residual check raises
    :class:`~hzreach.errors.NumericalFailure` instead of being reported.
    """
    c = np.ascontiguousarray(c, dtype=float).reshape(-1)
    n = c.shape[0]
    b_eq = np.ascontiguousarray(b_eq, dtype=float).reshape(-1)
    if n == 0:
        # nothing left to choose: feasible iff the right-hand side vanishes
        scale = 1.0 + np.abs(b_eq).max(initial=0.0)
        ok = np.abs(b_eq).max(initial=0.0) <= FEAS_TOL * scale
        return LPResult("optimal" if ok else "infeasible", 0.0 if ok else np.nan, np.zeros(0), 0)
    a_eq = np.ascontiguousarray(np.asarray(a_eq, dtype=float).reshape(-1, n))
    lo = np.ascontiguousarray(lo, dtype=float)
    hi = np.ascontiguousarray(hi, dtype=float)
    if np.any(lo > hi + FEAS_TOL):
        return LPResult("infeasible", np.nan, np.zeros(n), 0)
    hi = np.maximum(hi, lo)
    sign = -1.0 if maximize else 1.0
    if a_eq.shape[0] == 0:
        x = np.where(sign * c < 0, hi, lo)
        return LPResult("optimal", float(c @ x), x, 0)
    if max_iter is None:
        max_iter = 50 * (n + a_eq.shape[0]) + 1000
    status, x, iters = _simplex_kernel(a_eq, b_eq, sign * c, lo, hi, int(max_iter), BLAND_AFTER)
    if status == ITERATION_LIMIT:
        raise NumericalFailure(f"simplex hit its iteration limit ({iters} pivots)")
    if status == INFEASIBLE:
        return LPResult("infeasible", np.nan, x, iters)
    x = np.clip(x, lo, hi)
    if check:
        resid = np.abs(a_eq @ x - b_eq)
        scale = 1.0 + np.abs(a_eq).sum(axis=1) + np.abs(b_eq)
        if np.any(resid > 1e-6 * scale):
            raise NumericalFailure(f"simplex solution violates constraints by {resid.max():.3e}")
    return LPResult("optimal", float(c @ x), x, iters)
