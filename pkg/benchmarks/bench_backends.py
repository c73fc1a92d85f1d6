"""Compare the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is made at import
time from ``HZREACH_DISABLE_NUMBA``.  The numba child does one warm-up pass
first so JIT compilation is not counted.

    python benchmarks/bench_backends.py [--repeat 3] [--json out.json]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
import numpy as np
from hzreach import USING_NUMBA, query, sus
from hzreach.lp import lp_solve
from hzreach.sets import HybridZonotope
from hzreach.pipeline import build_sets
from hzreach.config import load_run_config

repeat = int(sys.argv[1])
cfg = load_run_config(sys.argv[2])
built = build_sets(cfg)
recs = sus.reach(built.phi, cfg.initial_set, 3, check=False)
rng = np.random.default_rng(0)
lps = []
for _ in range(40):
    m, n = 30, 80
    a = rng.normal(size=(m, n))
    x = rng.uniform(-1, 1, n)
    lps.append((rng.normal(size=n), a, a @ x))

def lp_batch():
    for c, a, b in lps:
        lp_solve(c, a, b, -np.ones(80), np.ones(80))

def support_batch():
    for d in ([1, 0], [0, 1], [-1, 0], [0, -1]):
        query.support(recs[3].set, np.array(d, float))

def contains_batch():
    for x in rng.uniform([-1, -1], [1, 1], size=(20, 2)):
        query.contains_point(recs[2].set, x)

jobs = {"lp_random_30x80": lp_batch, "support_R3": support_batch, "contains_R2": contains_batch}
if USING_NUMBA:
    for f in jobs.values():
        f()
out = {"numba": USING_NUMBA}
for name, f in jobs.items():
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        ts.append(time.perf_counter() - t0)
    out[name] = min(ts)
print(json.dumps(out))
"""


def run(disable: bool, repeat: int, config: str) -> dict:
    env = dict(os.environ)
    env["HZREACH_DISABLE_NUMBA"] = "1" if disable else "0"
    proc = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat), config],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    here = os.path.dirname(os.path.abspath(__file__))
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--config", default=os.path.join(here, "..", "configs", "pendulum", "run.json"))
    p.add_argument("--json", help="also write the timings here")
    args = p.parse_args(argv)
    fast = run(False, args.repeat, args.config)
    slow = run(True, args.repeat, args.config)
    if not fast["numba"]:
        print("note: numba is not importable, both runs use numpy", file=sys.stderr)
    print(f"{'workload':<18}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for key in fast:
        if key == "numba":
            continue
        print(f"{key:<18}{fast[key]:>10.4f}{slow[key]:>10.4f}{slow[key] / fast[key]:>8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"numba": fast, "numpy": slow}, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
