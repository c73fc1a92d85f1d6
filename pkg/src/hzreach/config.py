"""JSON configuration files: systems, controllers, initial sets and runs.

Every file may carry a ``format_version`` field; files written by hzreach
always do.  Parse errors raise :class:`~hzreach.errors.ConfigError` naming
the file and the offending field.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import sets
from .errors import ConfigError
from .milp import DEFAULT_NODE_LIMIT
from .sets import HybridZonotope, Interval
from .sos import NAMED_FUNCTIONS, EnclosedFunction, enclose_1d, sat
from .sus import NonlinearTerm, SaturatedLinearLaw, SystemModel

FORMAT_VERSION = 1
DEFAULT_SEGMENTS = 20

__all__ = [
    "FORMAT_VERSION",
    "RunConfig",
    "GridSpec",
    "load_json",
    "parse_system",
    "parse_controller",
    "parse_initial_set",
    "parse_function",
    "load_run_config",
]


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _field(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    if key not in d:
        raise ConfigError(f"{where}: missing required field {key!r}")
    return d[key]


def _array(value, key: str, where: str, ndim=None) -> np.ndarray:
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: field {key!r} is not numeric") from exc
    if ndim is not None and a.ndim != ndim:
        raise ConfigError(f"{where}: field {key!r} must be a {ndim}-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(f"{where}: field {key!r} contains non-finite values")
    return a


def _box(value, key: str, where: str) -> Interval:
    a = _array(value, key, where)
    if a.ndim == 1 and a.shape == (2,):
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != 2:
        raise ConfigError(f"{where}: field {key!r} must be a list of [lo, hi] pairs")
    try:
        return Interval(a[:, 0], a[:, 1])
    except ValueError as exc:
        raise ConfigError(f"{where}: field {key!r}: {exc}") from exc


def parse_function(spec, default_domain: tuple[float, float], where: str) -> tuple[EnclosedFunction, object]:
    """Build ``(enclosure, evaluator)`` from a function table or a named function.

    Accepted forms: ``"sin"``; ``{"name": "sin", "domain": [lo, hi], "segments": 20}``;
    ``{"name": ..., "breakpoints": [...]}``; ``{"name": "sat", "gain": g, "limits": [lo, hi]}``;
    and the raw table ``{"breakpoints": [...], "values": [...], "delta": d}``.
    """
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: function must be a name or an object")
    name = spec.get("name")
    if name is None:
        x = _array(_field(spec, "breakpoints", where), "breakpoints", where, ndim=1)
        y = _array(_field(spec, "values", where), "values", where, ndim=1)
        delta = float(spec.get("delta", 0.0))
        f = enclose_1d(None, x, y, delta=delta, name="table")
        return f, (lambda s, _x=x, _y=y: float(np.interp(s, _x, _y)))
    if name == "sat":
        gain = float(spec.get("gain", 1.0))
        lims = _array(spec.get("limits", [-1.0, 1.0]), "limits", where, ndim=1)
        if lims.shape != (2,) or lims[0] >= lims[1]:
            raise ConfigError(f"{where}: field 'limits' must be [lo, hi] with lo < hi")
        fn = lambda s, g=gain, a=lims[0], b=lims[1]: sat(g * np.asarray(s, float), a, b)  # noqa: E731
        lo, hi = spec.get("domain", default_domain)
        kinks = [k / gain for k in lims] if gain != 0 else []
        bps = sorted({lo, hi, *[k for k in kinks if lo < k < hi]})
        f = enclose_1d(fn, np.array(bps), delta=float(spec.get("delta", 0.0)), name="sat")
        return f, (lambda s, _fn=fn: float(_fn(s)))
    if name not in NAMED_FUNCTIONS:
        raise ConfigError(f"{where}: unknown function name {name!r}; known: sat, {', '.join(sorted(NAMED_FUNCTIONS))}")
    fn = NAMED_FUNCTIONS[name]
    if "breakpoints" in spec:
        bps = _array(spec["breakpoints"], "breakpoints", where, ndim=1)
    else:
        lo, hi = spec.get("domain", default_domain)
        segments = int(spec.get("segments", DEFAULT_SEGMENTS))
        if segments < 1:
            raise ConfigError(f"{where}: field 'segments' must be >= 1")
        bps = np.linspace(float(lo), float(hi), segments + 1)
    delta = spec.get("delta")
    f = enclose_1d(fn, bps, delta=None if delta is None else float(delta), name=name)
    return f, (lambda s, _fn=fn: float(_fn(s)))


def parse_system(d: dict, where: str = "system") -> SystemModel:
    a = _array(_field(d, "A", where), "A", where, ndim=2)
    b = _array(_field(d, "B", where), "B", where)
    if b.ndim == 1:
        b = b.reshape(a.shape[0], -1)
    x = _box(_field(d, "X", where), "X", where)
    u = _box(_field(d, "U", where), "U", where)
    if a.shape != (x.n, x.n) or b.shape != (x.n, u.n):
        raise ConfigError(f"{where}: A {a.shape} / B {b.shape} do not match X (n={x.n}) and U (n_u={u.n})")
    dom = x.product(u)
    terms = []
    for j, t in enumerate(d.get("terms", [])):
        tw = f"{where}: terms[{j}]"
        gain = _array(_field(t, "gain", tw), "gain", tw, ndim=1)
        arg = _array(_field(t, "arg", tw), "arg", tw, ndim=1)
        if gain.shape != (x.n,) or arg.shape != (x.n + u.n,):
            raise ConfigError(f"{tw}: gain must have length {x.n} and arg length {x.n + u.n}")
        mid = float(arg @ dom.mid)
        rad = float(np.abs(arg) @ dom.radius)
        func, evaluate = parse_function(_field(t, "func", tw), (mid - rad, mid + rad), f"{tw}.func")
        terms.append(NonlinearTerm(gain, arg, func, evaluate))
    return SystemModel(a, b, x, u, terms)


def parse_controller(d: dict, where: str = "controller") -> SaturatedLinearLaw:
    k = _array(_field(d, "K", where), "K", where).reshape(-1)
    lims = _array(_field(d, "limits", where), "limits", where, ndim=1)
    if lims.shape != (2,) or lims[0] >= lims[1]:
        raise ConfigError(f"{where}: field 'limits' must be [lo, hi] with lo < hi")
    return SaturatedLinearLaw(k, (float(lims[0]), float(lims[1])))


def parse_initial_set(d, where: str = "initial_set") -> HybridZonotope:
    """Generator form ``{"G": ..., "c": ...}``, a box ``{"box": [[lo, hi], ...]}``, or a full set dict."""
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    if "box" in d:
        return sets.interval_to_zonotope(_box(d["box"], "box", where))
    if "G" in d:
        g = _array(d["G"], "G", where, ndim=2)
        c = _array(_field(d, "c", where), "c", where, ndim=1)
        if g.shape[0] != c.shape[0]:
            raise ConfigError(f"{where}: G has {g.shape[0]} rows but c has length {c.shape[0]}")
        return HybridZonotope.build(gc=g, c=c)
    _field(d, "c", where)
    try:
        return sets.from_dict(d)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass
class GridSpec:
    target: str  # "reach" | "psi" | "theta" | "phi" | "function"
    dims: tuple
    window: Interval
    resolution: float
    step: int | None = None
    term: int = 0


@dataclass
class RunConfig:
    system: SystemModel
    controller: SaturatedLinearLaw
    initial_set: HybridZonotope
    steps: int = 12
    reduce: bool = False
    samples: int = 1000
    seed: int = 0
    node_limit: int = DEFAULT_NODE_LIMIT
    check_tol: float = 1e-6
    grids: list = field(default_factory=list)
    source: str = ""

    def __post_init__(self):
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        if self.samples < 0:
            raise ConfigError("samples must be >= 0")
        if self.initial_set.n != self.system.n:
            raise ConfigError(f"initial set lives in R^{self.initial_set.n}, system state in R^{self.system.n}")


def _sub(d: dict, key: str, base: Path, where: str):
    v = _field(d, key, where)
    if isinstance(v, str):
        return load_json(base / v), str(base / v)
    return v, f"{where}.{key}"


def load_run_config(path, **overrides) -> RunConfig:
    """Read a run file; ``overrides`` with value None are ignored."""
    path = Path(path)
    d = load_json(path)
    where = str(path)
    base = path.parent
    sys_d, sys_where = _sub(d, "system", base, where)
    ctl_d, ctl_where = _sub(d, "controller", base, where)
    x0_d, x0_where = _sub(d, "initial_set", base, where)
    grids = []
    for i, g in enumerate(d.get("grids", [])):
        gw = f"{where}: grids[{i}]"
        grids.append(GridSpec(
            target=str(g.get("target", "reach")),
            dims=tuple(int(v) for v in g.get("dims", (0, 1))),
            window=_box(_field(g, "window", gw), "window", gw),
            resolution=float(_field(g, "resolution", gw)),
            step=g.get("step"),
            term=int(g.get("term", 0)),
        ))
    kwargs = dict(
        system=parse_system(sys_d, sys_where),
        controller=parse_controller(ctl_d, ctl_where),
        initial_set=parse_initial_set(x0_d, x0_where),
        steps=int(d.get("steps", 12)),
        reduce=bool(d.get("reduce", False)),
        samples=int(d.get("samples", 1000)),
        seed=int(d.get("seed", 0)),
        node_limit=int(d.get("node_limit", DEFAULT_NODE_LIMIT)),
        check_tol=float(d.get("check_tol", 1e-6)),
        grids=grids,
        source=str(path),
    )
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**kwargs)
