"""End-to-end reachability runs: build the sets, iterate, validate, bound, export.

Reports returned here are plain dicts holding only deterministic content;
wall-clock measurements are collected separately so that a fixed seed gives
byte-identical report files.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import query, sets
from .config import FORMAT_VERSION, GridSpec, RunConfig
from .errors import ConfigError, Indeterminate
from .milp import DEFAULT_NODE_LIMIT, milp_solve
from .sets import HybridZonotope
from .sus import (
    ReachRecord,
    StateInputMap,
    StateUpdateSet,
    build_open_loop_sus,
    build_state_input_map,
    close_loop,
    reach,
)

__all__ = [
    "BuiltSets",
    "build_sets",
    "run_reach",
    "complexity_rows",
    "complexity_csv",
    "sample_initial_states",
    "simulate",
    "validate",
    "bounds",
    "grid_target",
    "export_grid",
]

# factor residual accepted for a chained witness; the per-step witnesses are
# found at a pair tolerance far below this
WITNESS_RESIDUAL_TOL = 1e-8
PAIR_TOL_CAP = 1e-10


@dataclass
class BuiltSets:
    psi: StateUpdateSet
    theta: StateInputMap
    phi: StateUpdateSet
    times: dict


def build_sets(cfg: RunConfig) -> BuiltSets:
    """Open-loop set, state-input map and their closed-loop combination."""
    m = cfg.system
    if m.nu != 1:
        raise ConfigError(f"the saturated feedback law drives a single input, system has {m.nu}")
    t0 = time.perf_counter()
    psi = build_open_loop_sus(m)
    t1 = time.perf_counter()
    theta = build_state_input_map(cfg.controller.gain, cfg.controller.enclosure(m.state_domain), m.state_domain)
    t2 = time.perf_counter()
    phi = close_loop(psi, theta, cfg.node_limit)
    t3 = time.perf_counter()
    return BuiltSets(psi, theta, phi, {"psi": t1 - t0, "theta": t2 - t1, "phi": t3 - t2})


def run_reach(cfg: RunConfig, built: BuiltSets, check: bool = True) -> list[ReachRecord]:
    return reach(built.phi, cfg.initial_set, cfg.steps, check=check, reduce=cfg.reduce, node_limit=cfg.node_limit)


def complexity_rows(phi: StateUpdateSet, records: list[ReachRecord], reduced: bool = False) -> list[dict]:
    """Per-step ``(n_g, n_b, n_c)`` next to the closed-loop growth formulas.

    Each successor adds the factors and constraints of the closed-loop set
    plus one coupling row per state, so
    ``n_g(k) = n_g(0) + k n_g(phi)``, ``n_b(k) = n_b(0) + k n_b(phi)`` and
    ``n_c(k) = n_c(0) + k (n_c(phi) + n)``.  After reduction the formulas
    are upper bounds, otherwise they must hold with equality.
    """
    n = phi.dims[0]
    g0, b0, c0 = records[0].complexity
    rows = []
    for r in records:
        k = r.step
        exp = (g0 + k * phi.set.ng, b0 + k * phi.set.nb, c0 + k * (phi.set.nc + n))
        if reduced:
            ok = all(a <= e for a, e in zip(r.complexity, exp))
        else:
            ok = tuple(r.complexity) == exp
        rows.append({
            "k": k,
            "ng": r.complexity[0], "nb": r.complexity[1], "nc": r.complexity[2],
            "ng_formula": exp[0], "nb_formula": exp[1], "nc_formula": exp[2],
            "formula_ok": int(ok),
        })
    return rows


def complexity_csv(rows: list[dict]) -> str:
    cols = ["k", "ng", "nb", "nc", "ng_formula", "nb_formula", "nc_formula", "formula_ok"]
    lines = [",".join(cols)]
    lines += [",".join(str(r[c]) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


def sample_initial_states(r0: HybridZonotope, count: int, rng: np.random.Generator):
    """Uniform factor-space samples of an unconstrained initial set.

    Returns ``(xc, xb, x)``: continuous factors, binary factors and points.
    """
    if r0.nc:
        raise ConfigError("factor-space sampling needs an initial set without equality constraints")
    xc = rng.uniform(-1.0, 1.0, size=(count, r0.ng))
    xb = rng.choice([-1.0, 1.0], size=(count, r0.nb))
    x = xc @ r0.gc.T + xb @ r0.gb.T + r0.center
    return xc, xb, x


def simulate(cfg: RunConfig, x0, steps: int) -> np.ndarray:
    """Exact closed-loop trajectory, shape ``(steps + 1, n)``."""
    traj = np.empty((steps + 1, cfg.system.n))
    traj[0] = x0
    for k in range(steps):
        traj[k + 1] = cfg.system.step(traj[k], cfg.controller(traj[k]))
    return traj


def _witness_holds(z: HybridZonotope, wc, wb, x, tol: float) -> bool:
    scale = 1.0 + np.abs(z.bvec).max(initial=0.0)
    if z.nc and np.abs(z.ac @ wc + z.ab @ wb - z.bvec).max() > WITNESS_RESIDUAL_TOL * scale:
        return False
    if np.any(np.abs(wc) > 1 + 1e-12) or np.any(np.abs(np.abs(wb) - 1) > 1e-12):
        return False
    return bool(np.abs(z.gc @ wc + z.gb @ wb + z.center - x).max() <= tol)


def validate(cfg: RunConfig, built: BuiltSets, records: list[ReachRecord], samples: int | None = None,
             seed: int | None = None, tol: float | None = None, progress=None) -> tuple[dict, dict]:
    """Check sampled exact trajectories against every reach set.

    Containment of ``x_k`` in ``R_k`` is proven by chaining witnesses: the
    factors of ``R_{k+1}`` are those of the closed-loop set followed by those
    of ``R_k``, so a factor vector placing ``(x_k, x_{k+1})`` in the
    closed-loop set, stacked on the witness for ``x_k``, is a witness for
    ``x_{k+1}``.  It is checked against ``R_{k+1}`` directly; only when that
    fails is the full containment MILP solved, and only its answer can
    report a violation.  Returns ``(report, timings)``.
    """
    samples = cfg.samples if samples is None else samples
    seed = cfg.seed if seed is None else seed
    tol = cfg.check_tol if tol is None else tol
    steps = len(records) - 1
    phi = built.phi.set
    pair_tol = min(tol, PAIR_TOL_CAP)
    rng = np.random.default_rng(seed)
    t_start = time.perf_counter()
    xc0, xb0, x0 = sample_initial_states(records[0].set, samples, rng)
    violations, indeterminate = [], []
    by_witness = np.zeros(steps + 1, dtype=int)
    by_milp = np.zeros(steps + 1, dtype=int)
    for s in range(samples):
        traj = simulate(cfg, x0[s], steps)
        wc, wb = xc0[s], xb0[s]
        for k in range(steps + 1):
            rk = records[k].set
            if k > 0 and wc is not None:
                # reduction drops factors, after which the chained witness no longer lines up
                ok = False
                if not cfg.reduce:
                    pair = np.concatenate([traj[k - 1], traj[k]])
                    try:
                        ok, w = query.contains_point(phi, pair, pair_tol, cfg.node_limit, return_witness=True)
                    except Indeterminate:
                        ok = False
                if ok:
                    wc = np.concatenate([w[: phi.ng], wc])
                    wb = np.concatenate([w[phi.ng :], wb])
                else:
                    wc = wb = None
            if wc is not None and _witness_holds(rk, wc, wb, traj[k], tol):
                by_witness[k] += 1
                continue
            wc = wb = None
            try:
                inside = query.contains_point(rk, traj[k], tol, cfg.node_limit)
            except Indeterminate:
                indeterminate.append({"sample": s, "step": k, "point": traj[k].tolist()})
                continue
            if inside:
                by_milp[k] += 1
            else:
                violations.append({"sample": s, "step": k, "point": traj[k].tolist()})
        if progress is not None:
            progress(s + 1, samples)
    report = {
        "format_version": FORMAT_VERSION,
        "samples": samples,
        "seed": seed,
        "steps": steps,
        "tol": tol,
        "violations": violations,
        "indeterminate": indeterminate,
        "proven_by_witness": by_witness.tolist(),
        "proven_by_milp": by_milp.tolist(),
    }
    return report, {"validate": time.perf_counter() - t_start}


def bounds(records: list[ReachRecord], domain: sets.Interval | None = None, node_limit: int = DEFAULT_NODE_LIMIT,
           branching: str = "most_fractional", exact: bool = True) -> tuple[list[dict], dict]:
    """Per-step, per-dimension bounds of the reach sets.

    With ``domain`` each side is first decided against the domain box
    (``within`` is true, false or null when the node limit was hit).  With
    ``exact`` the support is then solved to optimality; a query that hits the
    node limit keeps its proven outer bound and is marked ``node_limit``.
    Returns ``(rows, timings)``.
    """
    rows, times = [], {}
    for r in records:
        z = r.set
        for i in range(z.n):
            e = np.zeros(z.n)
            e[i] = 1.0
            row = {"k": r.step, "dim": i}
            t0 = time.perf_counter()
            for side, d, sgn in (("min", -e, -1.0), ("max", e, 1.0)):
                if domain is not None:
                    thr = sgn * (domain.hi[i] if sgn > 0 else domain.lo[i]) + 1e-9
                    try:
                        ok, res = query.support_bound(z, d, thr, node_limit, branching, return_result=True)
                        row[f"{side}_within"] = bool(ok)
                        row[f"{side}_check_nodes"] = res.nodes_explored
                    except Indeterminate:
                        row[f"{side}_within"] = None
                        row[f"{side}_check_nodes"] = node_limit
                if exact:
                    val, res = _support_or_bound(z, d, node_limit, branching)
                    row[side] = sgn * val
                    row[f"{side}_status"] = res.status
                    row[f"{side}_nodes"] = res.nodes_explored
            times[f"k{r.step}_dim{i}"] = time.perf_counter() - t0
            rows.append(row)
    return rows, times


def _support_or_bound(z, d, node_limit, branching):
    prob, offset = query._support_problem(z, d)
    res = milp_solve(prob, node_limit=node_limit, branching=branching)
    if res.status == "infeasible":
        return -np.inf, res
    if res.status == "node_limit":
        return res.bound + offset, res
    return res.value + offset, res


def grid_target(spec: GridSpec, built: BuiltSets, records: list[ReachRecord] | None, cfg: RunConfig) -> HybridZonotope:
    if spec.target == "reach":
        if records is None:
            raise ConfigError("grid target 'reach' needs reach records")
        k = len(records) - 1 if spec.step is None else int(spec.step)
        if not 0 <= k < len(records):
            raise ConfigError(f"grid step {k} outside 0..{len(records) - 1}")
        return records[k].set
    if spec.target == "psi":
        return built.psi.set
    if spec.target == "theta":
        return built.theta.set
    if spec.target == "phi":
        return built.phi.set
    if spec.target == "function":
        terms = cfg.system.nonlinear_terms
        if not 0 <= spec.term < len(terms):
            raise ConfigError(f"grid term {spec.term} outside 0..{len(terms) - 1}")
        return terms[spec.term].func.graph_set
    raise ConfigError(f"unknown grid target {spec.target!r}")


def export_grid(spec: GridSpec, z: HybridZonotope, tol: float, node_limit: int):
    """``(csv_text, n_indeterminate)`` for one grid."""
    xs, ys, status = query.grid_membership_export(z, spec.dims, spec.window, spec.resolution, tol, node_limit)
    return query.grid_to_csv(xs, ys, status), int(np.sum(status == "indeterminate"))
