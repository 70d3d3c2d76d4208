"""JSON run configuration and run manifests.

Each command reads one JSON object. Unknown keys at any level are errors;
diagnostics name the dotted field path and, where the key can be found in
the source text, its line number.

Schema (every key optional, defaults shown by ``default_config``)::

    landscape:  utility{type, eta, omega, reference}, traits{mu_lambda, sigma_lambda,
                mu_eta, sigma_eta}, grid{u_min, u_max, v_min, v_max, n_u, n_v},
                nodes, fitness, boundary, eps_frac, hessian_check, dl_corner,
                failure_budget, seed
    trajectory: everything in landscape plus loop [[mu_eta, mu_lambda], ...]
    abm:        sim{<SimConfig fields except seed>}, seed
    sweep:      sim{...}, sweep{ranges{name: [lo, hi]}, n_base, replicates, outputs},
                bootstrap, conf_level, seed
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import asdict, dataclass, field

from . import __version__
from .abm import SimConfig
from .errors import ConfigError
from .meanfield import BOUNDARY_MODES, FITNESS_MODES, GridSpec, TraitDistributions
from .sensitivity import DEFAULT_RANGES, OUTPUTS, SweepSpec
from .utility import UtilityModel

COMMANDS = ("landscape", "trajectory", "abm", "sweep")
MANIFEST_KEY = "manifest_version"

# a closed loop through low and high (mu_eta, mu_lambda), starting near the origin
DEFAULT_LOOP = [[0.1, 0.5], [1.5, 1.5], [3.0, 3.0], [1.5, 3.0], [0.1, 0.5]]

_LANDSCAPE_KEYS = {"utility", "traits", "grid", "nodes", "fitness", "boundary", "eps_frac",
                   "hessian_check", "dl_corner", "failure_budget", "seed"}
_ALLOWED = {
    "landscape": _LANDSCAPE_KEYS,
    "trajectory": _LANDSCAPE_KEYS | {"loop"},
    "abm": {"sim", "seed"},
    "sweep": {"sim", "sweep", "bootstrap", "conf_level", "seed"},
}
_SWEEP_KEYS = {"ranges", "n_base", "replicates", "outputs"}


@dataclass
class LandscapeConfig:
    utility: UtilityModel = field(default_factory=UtilityModel)
    traits: TraitDistributions = field(default_factory=TraitDistributions)
    grid: GridSpec = field(default_factory=GridSpec)
    nodes: int = 5
    fitness: str = "normalized"
    boundary: str = "projected"
    eps_frac: float = 0.05
    hessian_check: bool = False
    dl_corner: bool = True
    failure_budget: float = 0.01
    loop: list = field(default_factory=lambda: [list(p) for p in DEFAULT_LOOP])


@dataclass
class AbmConfig:
    sim: SimConfig = field(default_factory=SimConfig)


@dataclass
class SweepConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    spec: SweepSpec = field(default_factory=SweepSpec)
    bootstrap: int = 1000
    conf_level: float = 0.95


class _Locator:
    """Maps a key name to the first source line mentioning it."""

    def __init__(self, text: str, source: str):
        self.lines = text.splitlines()
        self.source = source

    def error(self, path: str, msg: str) -> ConfigError:
        key = re.sub(r"\[\d+\]$", "", path.rsplit(".", 1)[-1])
        pat = re.compile(r'"%s"\s*:' % re.escape(key))
        for n, line in enumerate(self.lines, 1):
            if pat.search(line):
                return ConfigError(f"{self.source}:{n}: field '{path}': {msg}")
        return ConfigError(f"{self.source}: field '{path}': {msg}")


def _obj(value, path, loc) -> dict:
    if not isinstance(value, dict):
        raise loc.error(path, "expected an object")
    return value


def _unknown(d: dict, allowed, prefix, loc):
    for k in d:
        if k not in allowed:
            raise loc.error(f"{prefix}{k}", "unknown field")


def _number(v, path, loc, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise loc.error(path, f"expected a number, got {json.dumps(v)}")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise loc.error(path, "expected an integer")
        return int(v)
    return float(v)


def _coerce(cls_field: dataclasses.Field, v, path, loc):
    t = cls_field.type if isinstance(cls_field.type, str) else cls_field.type.__name__
    if t == "bool":
        if not isinstance(v, bool):
            raise loc.error(path, "expected true or false")
        return v
    if t == "str":
        if not isinstance(v, str):
            raise loc.error(path, "expected a string")
        return v
    return _number(v, path, loc, integer=(t == "int"))


def _dataclass_from(cls, d, path, loc, exclude=(), extra=None):
    d = _obj(d, path, loc)
    known = {f.name: f for f in dataclasses.fields(cls) if f.name not in exclude}
    _unknown(d, known, f"{path}.", loc)
    kw = {k: _coerce(known[k], v, f"{path}.{k}", loc) for k, v in d.items()}
    kw.update(extra or {})
    try:
        return cls(**kw)
    except ValueError as e:
        raise loc.error(path, str(e)) from None


def _utility(d, loc) -> UtilityModel:
    d = _obj(d, "utility", loc)
    _unknown(d, {"type", "eta", "omega", "reference"}, "utility.", loc)
    for k in ("eta", "omega", "reference"):
        if k in d:
            _number(d[k], f"utility.{k}", loc)
    if "type" in d and not isinstance(d["type"], str):
        raise loc.error("utility.type", "expected a string")
    try:
        return UtilityModel.from_dict(d)
    except ValueError as e:
        raise loc.error("utility", str(e)) from None


def _loop(v, loc) -> list:
    if not isinstance(v, list) or not v:
        raise loc.error("loop", "expected a non-empty list of [mu_eta, mu_lambda] pairs")
    out = []
    for k, p in enumerate(v):
        if not isinstance(p, list) or len(p) != 2:
            raise loc.error("loop", f"waypoint {k} must be a pair [mu_eta, mu_lambda]")
        out.append([_number(x, f"loop[{k}]", loc) for x in p])
    return out


def _landscape(d: dict, loc) -> LandscapeConfig:
    c = LandscapeConfig()
    if "utility" in d:
        c.utility = _utility(d["utility"], loc)
    if "traits" in d:
        c.traits = _dataclass_from(TraitDistributions, d["traits"], "traits", loc)
    if "grid" in d:
        c.grid = _dataclass_from(GridSpec, d["grid"], "grid", loc)
    if "nodes" in d:
        c.nodes = _number(d["nodes"], "nodes", loc, integer=True)
        if c.nodes < 1:
            raise loc.error("nodes", "must be >= 1")
    for k, modes in (("fitness", FITNESS_MODES), ("boundary", BOUNDARY_MODES)):
        if k in d:
            if d[k] not in modes:
                raise loc.error(k, f"expected one of {list(modes)}")
            setattr(c, k, d[k])
    for k in ("eps_frac", "failure_budget"):
        if k in d:
            setattr(c, k, _number(d[k], k, loc))
    for k in ("hessian_check", "dl_corner"):
        if k in d:
            if not isinstance(d[k], bool):
                raise loc.error(k, "expected true or false")
            setattr(c, k, d[k])
    if "loop" in d:
        c.loop = _loop(d["loop"], loc)
    return c


def _sweep(d: dict, loc) -> SweepConfig:
    c = SweepConfig()
    if "sim" in d:
        c.sim = _dataclass_from(SimConfig, d["sim"], "sim", loc, exclude=("seed",))
    s = _obj(d.get("sweep", {}), "sweep", loc)
    _unknown(s, _SWEEP_KEYS, "sweep.", loc)
    ranges = dict(DEFAULT_RANGES)
    for name, r in _obj(s.get("ranges", {}), "sweep.ranges", loc).items():
        if name not in DEFAULT_RANGES:
            raise loc.error(f"sweep.ranges.{name}", f"unknown parameter; expected one of {list(DEFAULT_RANGES)}")
        if not isinstance(r, list) or len(r) != 2:
            raise loc.error(f"sweep.ranges.{name}", "expected [low, high]")
        ranges[name] = tuple(_number(x, f"sweep.ranges.{name}", loc) for x in r)
    outputs = s.get("outputs", list(OUTPUTS))
    if not isinstance(outputs, list) or any(o not in OUTPUTS for o in outputs):
        raise loc.error("sweep.outputs", f"expected a list drawn from {list(OUTPUTS)}")
    kw = dict(names=tuple(ranges), ranges=tuple(ranges.values()), outputs=tuple(outputs))
    for k in ("n_base", "replicates"):
        if k in s:
            kw[k] = _number(s[k], f"sweep.{k}", loc, integer=True)
    try:
        c.spec = SweepSpec(**kw)
    except ValueError as e:
        raise loc.error("sweep", str(e)) from None
    if "bootstrap" in d:
        c.bootstrap = _number(d["bootstrap"], "bootstrap", loc, integer=True)
        if c.bootstrap < 1:
            raise loc.error("bootstrap", "must be >= 1")
    if "conf_level" in d:
        c.conf_level = _number(d["conf_level"], "conf_level", loc)
        if not 0.0 < c.conf_level < 1.0:
            raise loc.error("conf_level", "must lie in (0, 1)")
    return c


def parse_config(command: str, data: dict, text: str = "", source: str = "<config>"):
    """Validate ``data`` for ``command``; returns (typed config, seed or None)."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    loc = _Locator(text, source)
    d = _obj(data, "<root>", loc)
    _unknown(d, _ALLOWED[command], "", loc)
    seed = None
    if "seed" in d:
        seed = _number(d["seed"], "seed", loc, integer=True)
        if seed < 0:
            raise loc.error("seed", "must be non-negative")
    if command in ("landscape", "trajectory"):
        return _landscape(d, loc), seed
    if command == "abm":
        sim = SimConfig()
        if "sim" in d:
            sim = _dataclass_from(SimConfig, d["sim"], "sim", loc, exclude=("seed",))
        return AbmConfig(sim), seed
    return _sweep(d, loc), seed


def load_config(command: str, path):
    """Read a config file, or a manifest written by an earlier run.

    Returns (typed config, seed from file or None).
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None
    if isinstance(data, dict) and MANIFEST_KEY in data:
        if data.get("command") != command:
            raise ConfigError(f"{path}: manifest is for command {data.get('command')!r}, not {command!r}")
        cfg, _ = parse_config(command, data.get("config", {}), text, str(path))
        return cfg, int(data["seed"])
    return parse_config(command, data, text, str(path))


def resolved(command: str, cfg) -> dict:
    """Fully expanded config as plain JSON, loadable by ``parse_config``."""
    if command in ("landscape", "trajectory"):
        out = {
            "utility": cfg.utility.to_dict(),
            "traits": asdict(cfg.traits),
            "grid": asdict(cfg.grid),
            "nodes": cfg.nodes,
            "fitness": cfg.fitness,
            "boundary": cfg.boundary,
            "eps_frac": cfg.eps_frac,
            "hessian_check": cfg.hessian_check,
            "dl_corner": cfg.dl_corner,
            "failure_budget": cfg.failure_budget,
        }
        if command == "trajectory":
            out["loop"] = cfg.loop
        return out
    sim = {k: v for k, v in asdict(cfg.sim).items() if k != "seed"}
    if command == "abm":
        return {"sim": sim}
    return {
        "sim": sim,
        "sweep": {
            "ranges": {n: list(r) for n, r in zip(cfg.spec.names, cfg.spec.ranges)},
            "n_base": cfg.spec.n_base,
            "replicates": cfg.spec.replicates,
            "outputs": list(cfg.spec.outputs),
        },
        "bootstrap": cfg.bootstrap,
        "conf_level": cfg.conf_level,
    }


def default_config(command: str) -> dict:
    cfg, _ = parse_config(command, {})
    return resolved(command, cfg)


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    outputs: list[str]
    duration_s: float
    version: str = __version__

    def to_dict(self) -> dict:
        return {MANIFEST_KEY: 1, "command": self.command, "seed": self.seed,
                "version": self.version, "config": self.config,
                "outputs": self.outputs, "duration_s": self.duration_s}

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
