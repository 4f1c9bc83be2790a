"""Config ingestion: JSON documents validated into runnable setups.

Validation is total: every violation in the document is collected and
reported with its field path, not just the first.  Unknown keys anywhere
are schema errors; structurally valid values that violate a model
precondition are domain errors.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .classify import ClassifyRules, RunSetup
from .errors import ConfigError, DomainError, SchemaError
from .growth import GrowthSpec, growth_from_config
from .kernels import KernelSpec, kernel_from_config
from .profiles import InitialProfile, profile_from_config
from .solver import SolverConfig

__all__ = ["RunConfig", "parse_config", "load_config", "serialize_config", "config_hash"]

SCHEMA_VERSION = 1

_KERNEL_KEYS = {
    "tophat": {"family", "halfwidth"},
    "triangle": {"family", "halfwidth"},
    "laplace": {"family", "rate", "radius"},
    "gaussian": {"family", "sigma", "radius"},
    "tabulated": {"family", "path"},
}
_GROWTH_KEYS = {
    "logistic": {"family", "a", "b"},
    "zero": {"family"},
    "expression": {"family", "expression", "k0", "lipschitz", "kpp"},
}
_INIT_KEYS = {
    "cosine": {"family", "amplitude"},
    "parabola": {"family", "amplitude"},
    "tabulated": {"family", "path"},
}
_GRID_KEYS = {"dx", "margin"}
_SOLVER_KEYS = {"dt", "t_end", "mode", "snapshot_every", "picard"}
_PICARD_KEYS = {"window", "tol", "max_iter"}
_CLASSIFY_KEYS = {f.name for f in dataclasses.fields(ClassifyRules)}
_OUTPUT_KEYS = {"dir"}
_TOP_KEYS = {"schema_version", "kernel", "growth", "d", "mu", "h0", "init", "grid",
             "solver", "classify", "output"}


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run description."""

    kernel: KernelSpec
    growth: GrowthSpec
    profile: InitialProfile
    d: float
    mu: float
    h0: float
    grid_dx: float
    grid_margin: float
    solver: SolverConfig
    rules: ClassifyRules
    output_dir: str
    kernel_cfg: dict = field(default_factory=dict)
    growth_cfg: dict = field(default_factory=dict)
    init_cfg: dict = field(default_factory=dict)
    classify_cfg: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        """Canonical document that parses back to an identical config."""
        solver: dict[str, Any] = {
            "dt": self.solver.dt,
            "t_end": self.solver.t_end,
            "mode": self.solver.mode,
            "snapshot_every": self.solver.snapshot_every,
        }
        if self.solver.mode == "picard":
            solver["picard"] = {
                "window": self.solver.picard_window,
                "tol": self.solver.picard_tol,
                "max_iter": self.solver.picard_max_iter,
            }
        doc = {
            "schema_version": self.schema_version,
            "kernel": dict(self.kernel_cfg),
            "growth": dict(self.growth_cfg),
            "d": self.d,
            "mu": self.mu,
            "h0": self.h0,
            "init": dict(self.init_cfg),
            "grid": {"dx": self.grid_dx, "margin": self.grid_margin},
            "solver": solver,
            "output": {"dir": self.output_dir},
        }
        if self.classify_cfg:
            doc["classify"] = dict(self.classify_cfg)
        return doc

    def setup(self) -> RunSetup:
        factory = None
        fam = self.init_cfg.get("family")
        if fam in ("cosine", "parabola"):
            init_cfg = dict(self.init_cfg)

            def factory(h0, _cfg=init_cfg):
                return profile_from_config(_cfg, h0)

        return RunSetup(
            kernel=self.kernel, growth=self.growth, profile=self.profile,
            d=self.d, mu=self.mu, dx=self.grid_dx, margin=self.grid_margin,
            dt=self.solver.dt, t_end=self.solver.t_end,
            snapshot_every=self.solver.snapshot_every, mode=self.solver.mode,
            picard_window=self.solver.picard_window, picard_tol=self.solver.picard_tol,
            picard_max_iter=self.solver.picard_max_iter, rules=self.rules,
            profile_factory=factory,
        )


class _Collector:
    def __init__(self):
        self.schema: list[str] = []
        self.domain: list[str] = []

    def bad_schema(self, path, msg):
        self.schema.append(f"{path}: {msg}")

    def bad_domain(self, path, msg):
        self.domain.append(f"{path}: {msg}")

    def raise_if_any(self):
        if self.schema:
            raise SchemaError(self.schema + self.domain)
        if self.domain:
            raise DomainError(self.domain)


def _need_mapping(doc, key, col) -> Optional[dict]:
    if key not in doc:
        col.bad_schema(key, "missing required section")
        return None
    if not isinstance(doc[key], dict):
        col.bad_schema(key, f"must be a mapping, got {type(doc[key]).__name__}")
        return None
    return doc[key]


def _check_keys(section: dict, allowed: set, path: str, col) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        col.bad_schema(path, f"unknown keys {unknown}")


def _number(section, key, path, col, *, positive=False, integer=False, default=None):
    if key not in section:
        if default is not None:
            return default
        col.bad_schema(f"{path}.{key}" if path else key, "missing required value")
        return None
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        col.bad_schema(f"{path}.{key}" if path else key,
                       f"must be a number, got {value!r}")
        return None
    if integer and int(value) != value:
        col.bad_schema(f"{path}.{key}" if path else key, f"must be an integer, got {value!r}")
        return None
    if positive and not value > 0:
        col.bad_domain(f"{path}.{key}" if path else key, f"must be positive, got {value!r}")
        return None
    return int(value) if integer else float(value)


def _family_section(doc, key, families, col) -> Optional[dict]:
    section = _need_mapping(doc, key, col)
    if section is None:
        return None
    family = section.get("family")
    if family not in families:
        col.bad_schema(f"{key}.family", f"must be one of {sorted(families)}, got {family!r}")
        return None
    _check_keys(section, families[family], key, col)
    return section


def parse_config(text: str, *, base_dir: Optional[str] = None) -> RunConfig:
    """Parse and validate a JSON config document.

    Raises SchemaError for unknown keys and type errors, DomainError for
    violated model preconditions; both list every violation found.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError([f"not valid JSON: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise SchemaError(["top level must be a JSON object"])
    col = _Collector()
    _check_keys(doc, _TOP_KEYS, "top level", col)

    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        col.bad_schema("schema_version", f"must be {SCHEMA_VERSION}, got {version!r}")

    d = _number(doc, "d", "", col, positive=True)
    mu = _number(doc, "mu", "", col, positive=True)
    h0 = _number(doc, "h0", "", col, positive=True)

    kernel = growth = profile = None
    kernel_cfg = _family_section(doc, "kernel", _KERNEL_KEYS, col)
    if kernel_cfg is not None:
        try:
            kernel = kernel_from_config(kernel_cfg, base_dir=base_dir)
        except (ConfigError, KeyError, ValueError, OSError) as exc:
            col.bad_domain("kernel", str(exc))
    growth_cfg = _family_section(doc, "growth", _GROWTH_KEYS, col)
    if growth_cfg is not None:
        try:
            growth = growth_from_config(growth_cfg)
        except (ConfigError, KeyError, ValueError) as exc:
            col.bad_domain("growth", str(exc))
    init_cfg = _family_section(doc, "init", _INIT_KEYS, col)
    if init_cfg is not None and h0 is not None:
        try:
            profile = profile_from_config(init_cfg, h0, base_dir=base_dir)
        except (ConfigError, KeyError, ValueError, OSError) as exc:
            col.bad_domain("init", str(exc))

    grid = _need_mapping(doc, "grid", col)
    dx = margin = None
    if grid is not None:
        _check_keys(grid, _GRID_KEYS, "grid", col)
        dx = _number(grid, "dx", "grid", col, positive=True)
        margin = _number(grid, "margin", "grid", col, positive=True)
    if dx is not None and h0 is not None and dx >= h0:
        col.bad_domain("grid.dx", f"dx={dx} too coarse for h0={h0}; need dx < h0")

    solver_sec = _need_mapping(doc, "solver", col)
    solver = None
    if solver_sec is not None:
        _check_keys(solver_sec, _SOLVER_KEYS, "solver", col)
        dt = _number(solver_sec, "dt", "solver", col, positive=True)
        t_end = _number(solver_sec, "t_end", "solver", col, positive=True)
        mode = solver_sec.get("mode", "explicit")
        if mode not in ("explicit", "picard"):
            col.bad_schema("solver.mode", f"must be 'explicit' or 'picard', got {mode!r}")
            mode = "explicit"
        snapshot_every = _number(solver_sec, "snapshot_every", "solver", col,
                                 positive=True, integer=True, default=1000)
        pw, ptol, pmax = 0.05, 1e-10, 60
        if "picard" in solver_sec:
            psec = solver_sec["picard"]
            if not isinstance(psec, dict):
                col.bad_schema("solver.picard", "must be a mapping")
            else:
                _check_keys(psec, _PICARD_KEYS, "solver.picard", col)
                pw = _number(psec, "window", "solver.picard", col, positive=True,
                             default=0.05)
                ptol = _number(psec, "tol", "solver.picard", col, positive=True,
                               default=1e-10)
                pmax = _number(psec, "max_iter", "solver.picard", col, positive=True,
                               integer=True, default=60)
        if None not in (dt, t_end, snapshot_every, pw, ptol, pmax):
            try:
                solver = SolverConfig(
                    d=d if d is not None else 1.0, mu=mu if mu is not None else 1.0,
                    dt=dt, t_end=t_end, mode=mode, snapshot_every=snapshot_every,
                    picard_window=pw, picard_tol=ptol, picard_max_iter=pmax,
                )
            except DomainError as exc:
                for v in exc.violations:
                    col.bad_domain("solver", v)

    rules = ClassifyRules()
    classify_cfg = {}
    if "classify" in doc:
        csec = doc["classify"]
        if not isinstance(csec, dict):
            col.bad_schema("classify", "must be a mapping")
        else:
            _check_keys(csec, _CLASSIFY_KEYS, "classify", col)
            overrides = {}
            for key in set(csec) & _CLASSIFY_KEYS:
                val = _number(csec, key, "classify", col, positive=True)
                if val is not None:
                    overrides[key] = val
            classify_cfg = dict(csec)
            rules = dataclasses.replace(rules, **overrides)

    output_dir = "out"
    if "output" in doc:
        osec = doc["output"]
        if not isinstance(osec, dict):
            col.bad_schema("output", "must be a mapping")
        else:
            _check_keys(osec, _OUTPUT_KEYS, "output", col)
            if "dir" in osec:
                if not isinstance(osec["dir"], str):
                    col.bad_schema("output.dir", "must be a string")
                else:
                    output_dir = osec["dir"]

    col.raise_if_any()
    assert kernel is not None and growth is not None and profile is not None
    assert solver is not None and dx is not None and margin is not None
    return RunConfig(
        kernel=kernel, growth=growth, profile=profile, d=d, mu=mu, h0=h0,
        grid_dx=dx, grid_margin=margin, solver=solver, rules=rules,
        output_dir=output_dir, kernel_cfg=dict(kernel_cfg),
        growth_cfg=dict(growth_cfg), init_cfg=dict(init_cfg),
        classify_cfg=classify_cfg,
    )


def load_config(path: str, overrides: Optional[dict] = None) -> RunConfig:
    """Read, optionally override dotted keys, and validate a config file."""
    import os

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if overrides:
        for dotted, value in overrides.items():
            node = doc
            parts = dotted.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
                if not isinstance(node, dict):
                    raise SchemaError([f"{dotted}: cannot override through a non-mapping"])
            node[parts[-1]] = value
    return parse_config(json.dumps(doc), base_dir=os.path.dirname(os.path.abspath(path)))


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


def config_hash(cfg: RunConfig) -> str:
    doc = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()
