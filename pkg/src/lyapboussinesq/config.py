"""Run configuration: JSON in, validated dataclasses out."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import ConfigError, GridError, ProfileError
from .grid import GridSpec, build_grid, build_grid_explicit
from .profiles import BUILTIN, Profile, make_profile
from .solver import Method, SolverOptions


@dataclass
class DomainCfg:
    L0: float
    L1: float


@dataclass
class GridCfg:
    J: int


@dataclass
class CouplingCfg:
    mode: str = "coupled"
    s: float = 1.0
    eps: float = 1.0
    l: float | None = None


@dataclass
class SchemeCfg:
    alpha: float = 0.25
    right_transpose: bool = False
    legacy_cid2: bool = False


@dataclass
class SolverCfg:
    method: str = "fixed_point"
    tol: float = 1e-12
    max_iter: int = 200


@dataclass
class InitialCfg:
    profile: str
    amplitude: float = 1.0
    parameters: dict = field(default_factory=dict)


@dataclass
class RunCfg:
    t0: float = 0.0
    n_steps: int = 10
    snapshot_every: int = 0


@dataclass
class OutputCfg:
    directory: str = "out"
    precision: int = 17


@dataclass
class RunConfig:
    domain: DomainCfg
    grid: GridCfg
    initial: InitialCfg
    coupling: CouplingCfg = field(default_factory=CouplingCfg)
    scheme: SchemeCfg = field(default_factory=SchemeCfg)
    solver: SolverCfg = field(default_factory=SolverCfg)
    run: RunCfg = field(default_factory=RunCfg)
    output: OutputCfg = field(default_factory=OutputCfg)

    def to_dict(self):
        return dataclasses.asdict(self)

    def echo(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def build_grid(self) -> GridSpec:
        d, c = self.domain, self.coupling
        if c.mode == "coupled":
            return build_grid(d.L0, d.L1, self.grid.J, self.scheme.alpha, c.s, c.eps, self.run.t0)
        return build_grid_explicit(d.L0, d.L1, self.grid.J, self.scheme.alpha, c.l, self.run.t0)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(Method(self.solver.method), self.solver.tol,
                             self.solver.max_iter, self.scheme.right_transpose)

    def profile(self) -> Profile:
        params = dict(self.initial.parameters)
        if self.initial.profile in ("cosine", "cosine_decay"):
            params.setdefault("L0", self.domain.L0)
            params.setdefault("L1", self.domain.L1)
        try:
            return make_profile(self.initial.profile, self.initial.amplitude, **params)
        except TypeError as err:
            raise ConfigError(f"initial.parameters: {err}") from None


_SECTIONS = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_SECTION_TYPES = {
    "domain": DomainCfg, "grid": GridCfg, "initial": InitialCfg,
    "coupling": CouplingCfg, "scheme": SchemeCfg, "solver": SolverCfg,
    "run": RunCfg, "output": OutputCfg,
}
_REQUIRED = ("domain", "grid", "initial")


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(path, value, annotation):
    ann = str(annotation)
    if value is None and "None" in ann:
        return None
    if ann.startswith("float"):
        if not _is_number(value):
            raise ConfigError(f"{path} must be a number, got {value!r}")
        return float(value)
    if ann == "int":
        if not (_is_number(value) and float(value).is_integer()):
            raise ConfigError(f"{path} must be an integer, got {value!r}")
        return int(value)
    if ann == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be true or false, got {value!r}")
        return value
    if ann == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string, got {value!r}")
        return value
    if ann == "dict":
        if not isinstance(value, dict):
            raise ConfigError(f"{path} must be an object, got {value!r}")
        return dict(value)
    raise AssertionError(ann)


def _load_section(name, data):
    cls = _SECTION_TYPES[name]
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"unknown key {name}.{unknown[0]}")
    kwargs = {}
    for key, f in fields.items():
        if key in data:
            kwargs[key] = _coerce(f"{name}.{key}", data[key], f.type)
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"missing required key {name}.{key}")
    return cls(**kwargs)


def _validate(cfg: RunConfig):
    if not cfg.domain.L1 > cfg.domain.L0:
        raise ConfigError("domain: need L1 > L0")
    if cfg.grid.J < 2:
        raise ConfigError(f"grid.J must be >= 2, got {cfg.grid.J}")
    if not 0.0 <= cfg.scheme.alpha <= 0.5:
        raise ConfigError(f"scheme.alpha ∉ [0, 0.5] (got {cfg.scheme.alpha})")
    c = cfg.coupling
    if c.mode not in ("coupled", "explicit"):
        raise ConfigError(f"coupling.mode must be 'coupled' or 'explicit', got {c.mode!r}")
    if c.mode == "coupled":
        if not c.s > 0:
            raise ConfigError(f"coupling.s must be > 0, got {c.s}")
        if not c.eps > 0:
            raise ConfigError(f"coupling.eps must be > 0, got {c.eps}")
    elif c.l is None or not c.l > 0:
        raise ConfigError("coupling.l must be > 0 in explicit mode")
    methods = [m.value for m in Method]
    if cfg.solver.method not in methods:
        raise ConfigError(f"solver.method must be one of {methods}, got {cfg.solver.method!r}")
    if not cfg.solver.tol > 0:
        raise ConfigError(f"solver.tol must be > 0, got {cfg.solver.tol}")
    if cfg.solver.max_iter < 1:
        raise ConfigError(f"solver.max_iter must be >= 1, got {cfg.solver.max_iter}")
    if cfg.initial.profile not in BUILTIN:
        raise ConfigError(f"initial.profile must be one of {sorted(BUILTIN)}, "
                          f"got {cfg.initial.profile!r}")
    if cfg.run.n_steps < 0:
        raise ConfigError(f"run.n_steps must be >= 0, got {cfg.run.n_steps}")
    if cfg.run.snapshot_every < 0:
        raise ConfigError(f"run.snapshot_every must be >= 0, got {cfg.run.snapshot_every}")
    if not 1 <= cfg.output.precision <= 17:
        raise ConfigError(f"output.precision must be in [1, 17], got {cfg.output.precision}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Defaults are filled in, and in coupled mode ``coupling.l`` is replaced by
    the derived time step so the echoed configuration is complete.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}"
        ) from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]}")
    for name in _REQUIRED:
        if name not in data:
            raise ConfigError(f"missing required section {name}")
    sections = {name: _load_section(name, data[name]) for name in _SECTIONS if name in data}
    cfg = RunConfig(**sections)
    _validate(cfg)
    try:
        grid = cfg.build_grid()
        cfg.profile()
    except (GridError, ProfileError) as err:
        raise ConfigError(str(err)) from None
    if cfg.coupling.mode == "coupled":
        cfg.coupling.l = grid.l
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
