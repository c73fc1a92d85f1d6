"""Command-line front end.

    hzreach build-sus   --config run.json --out DIR
    hzreach reach       --config run.json --out DIR [--steps K] [--reduce]
    hzreach validate    --config run.json --out DIR [--samples N] [--seed S]
    hzreach bounds      --config run.json --out DIR [--branching sos]
    hzreach export-plot --config run.json --out DIR

Exit codes: 0 success, 1 configuration or input error, 2 a sampled
trajectory left a reach set, 3 a reach set left the domain of the
state-update set, 4 some answers are indeterminate (node limit).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline, sets
from .config import FORMAT_VERSION, load_run_config
from .errors import DomainViolation, HZError, Indeterminate
from .milp import BRANCHING_RULES

log = logging.getLogger("hzreach")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2
EXIT_DOMAIN = 3
EXIT_INDETERMINATE = 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is reserved for violations here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _set_doc(z, **meta) -> dict:
    d = sets.to_dict(z)
    d.update(meta)
    return d


def _complexity(z) -> str:
    return f"ng={z.ng} nb={z.nb} nc={z.nc}"


def _build(cfg, timings: dict):
    built = pipeline.build_sets(cfg)
    timings.update({f"build_{k}": v for k, v in built.times.items()})
    return built


def _reach(cfg, built, timings: dict):
    try:
        records = pipeline.run_reach(cfg, built, check=True)
    except DomainViolation as exc:
        log.error("domain violation at step %s: %s", exc.step, exc)
        raise
    timings["reach_steps"] = [r.wall_time for r in records]
    timings["domain_checks"] = [r.check_time for r in records]
    return records


def cmd_build_sus(cfg, args, timings) -> int:
    out = args.out
    built = _build(cfg, timings)
    for name, obj in (("psi", built.psi), ("theta", built.theta), ("phi", built.phi)):
        bounds = {"domain_lo": obj.domain_bounds.lo.tolist(), "domain_hi": obj.domain_bounds.hi.tolist()}
        _write_json(out / f"{name}.json", _set_doc(obj.set, **bounds))
        print(f"{name}: dim={obj.set.n} {_complexity(obj.set)}")
    return EXIT_OK


def cmd_reach(cfg, args, timings) -> int:
    built = _build(cfg, timings)
    records = _reach(cfg, built, timings)
    rows = pipeline.complexity_rows(built.phi, records, reduced=cfg.reduce)
    (args.out / "complexity.csv").write_text(pipeline.complexity_csv(rows))
    doc = {
        "format_version": FORMAT_VERSION,
        "steps": cfg.steps,
        "reduce": cfg.reduce,
        "records": [
            {"k": r.step, "complexity": list(r.complexity), "set": sets.to_dict(r.set)} for r in records
        ],
    }
    _write_json(args.out / "reach.json", doc)
    for row in rows:
        print(f"k={row['k']:3d} ng={row['ng']} nb={row['nb']} nc={row['nc']} formula_ok={row['formula_ok']}")
    return EXIT_OK if all(r["formula_ok"] for r in rows) else EXIT_ERROR


def cmd_validate(cfg, args, timings) -> int:
    built = _build(cfg, timings)
    records = _reach(cfg, built, timings)

    def progress(done, total):
        if done == total or done % max(1, total // 10) == 0:
            log.info("validated %d/%d trajectories", done, total)

    report, t = pipeline.validate(cfg, built, records, progress=progress)
    timings.update(t)
    _write_json(args.out / "validation.json", report)
    print(f"samples={report['samples']} steps={report['steps']} violations={len(report['violations'])} "
          f"indeterminate={len(report['indeterminate'])}")
    for v in report["violations"]:
        print(f"violation: sample {v['sample']} step {v['step']} point {v['point']}")
    if report["violations"]:
        return EXIT_VIOLATION
    if report["indeterminate"]:
        return EXIT_INDETERMINATE
    return EXIT_OK


def cmd_bounds(cfg, args, timings) -> int:
    built = _build(cfg, timings)
    records = _reach(cfg, built, timings)
    rows, t = pipeline.bounds(records, built.phi.domain_bounds, cfg.node_limit, args.branching,
                              exact=not args.no_exact)
    timings["bounds"] = t
    _write_json(args.out / "bounds.json", {"format_version": FORMAT_VERSION, "branching": args.branching,
                                           "domain_lo": built.phi.domain_bounds.lo.tolist(),
                                           "domain_hi": built.phi.domain_bounds.hi.tolist(), "bounds": rows})
    unresolved = outside = False
    for r in rows:
        within = (r["min_within"], r["max_within"])
        outside |= False in within
        unresolved |= None in within
        if not args.no_exact:
            unresolved |= "node_limit" in (r["min_status"], r["max_status"])
            print(f"k={r['k']:3d} dim={r['dim']} [{r['min']:.6g}, {r['max']:.6g}] "
                  f"status={r['min_status']}/{r['max_status']} within={within}")
        else:
            print(f"k={r['k']:3d} dim={r['dim']} within={within}")
    if outside:
        return EXIT_DOMAIN
    return EXIT_INDETERMINATE if unresolved else EXIT_OK


def cmd_export_plot(cfg, args, timings) -> int:
    built = _build(cfg, timings)
    records = None
    depths = [cfg.steps if g.step is None else int(g.step) for g in cfg.grids if g.target == "reach"]
    if depths:
        # only as deep as the deepest requested grid
        records = _reach(dataclasses.replace(cfg, steps=min(max(depths), cfg.steps)), built, timings)
    indeterminate = 0
    for i, g in enumerate(cfg.grids):
        z = pipeline.grid_target(g, built, records, cfg)
        text, n_ind = pipeline.export_grid(g, z, cfg.check_tol, cfg.node_limit)
        suffix = f"_k{len(records) - 1 if g.step is None else g.step}" if g.target == "reach" else ""
        name = f"grid{i}_{g.target}{suffix}.csv"
        (args.out / name).write_text(text)
        indeterminate += n_ind
        n_in = text.count(",in\n")
        print(f"{name}: {n_in} in-cells, {n_ind} indeterminate")
    if not cfg.grids:
        print("no grids requested in the configuration")
    return EXIT_INDETERMINATE if indeterminate else EXIT_OK


COMMANDS = {
    "build-sus": cmd_build_sus,
    "reach": cmd_reach,
    "validate": cmd_validate,
    "bounds": cmd_bounds,
    "export-plot": cmd_export_plot,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hzreach", description="Hybrid-zonotope reachability of nonlinear closed-loop systems.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="run configuration (JSON)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--steps", type=int, help="number of reach steps K")
        p.add_argument("--samples", type=int, help="validation sample count")
        p.add_argument("--seed", type=int, help="validation random seed")
        p.add_argument("--reduce", action="store_true", default=None, help="drop trivially redundant factors")
        p.add_argument("--node-limit", type=int, help="branch-and-bound node limit per query")
        if name == "bounds":
            p.add_argument("--branching", choices=BRANCHING_RULES, default="most_fractional")
            p.add_argument("--no-exact", action="store_true", help="only decide containment in the domain")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    timings: dict = {}
    try:
        cfg = load_run_config(args.config, steps=args.steps, samples=args.samples, seed=args.seed,
                              reduce=args.reduce, node_limit=args.node_limit)
        args.out.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[args.command](cfg, args, timings)
    except DomainViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except Indeterminate as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except HZError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        if timings and args.out.is_dir():
            _write_json(args.out / "timings.json", _plain(timings))
    return code


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


if __name__ == "__main__":
    sys.exit(main())
