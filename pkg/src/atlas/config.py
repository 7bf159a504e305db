"""Run configuration: TOML sections ``[sweep]``, ``[integrator]``, ``[analysis]``.

Command-line flags override values from the file.  Unknown keys are
rejected so that typos do not silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import tomli

from .odecore.integrator import IntegratorConfig
from .odecore.models import PARAM_TYPES
from .sweep.grid import Axis
from .sweep.spikes import SCConfig


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit code 2."""


SWEEP_KEYS = ("model", "p1", "p2", "fixed", "workers", "out", "initial_policy", "initial",
              "t_transient", "t_observe", "threshold", "delta_ret", "n_max")
INTEGRATOR_KEYS = ("rtol", "atol", "max_step")
ANALYSIS_KEYS = ("axis", "resolution", "samples", "refine", "delta_vis", "eps")


@dataclass(frozen=True)
class AnalysisConfig:
    axis: int = 2
    resolution: int = 40
    samples: int = 41
    refine: float = 1e-3
    delta_vis: float | None = None
    eps: tuple = ()

    def __post_init__(self):
        if self.axis not in (0, 1, 2):
            raise ConfigError("analysis.axis must be 0, 1 or 2")
        if self.resolution < 4:
            raise ConfigError("analysis.resolution must be >= 4")
        if self.samples < 2:
            raise ConfigError("analysis.samples must be >= 2")
        if not 0 < self.refine < 1:
            raise ConfigError("analysis.refine must lie in (0, 1)")
        if self.delta_vis is not None and not self.delta_vis > 0:
            raise ConfigError("analysis.delta_vis must be positive")


@dataclass(frozen=True)
class RunConfig:
    """Everything a sweep needs, after merging file and flags."""

    model: str = "hr"
    p1: Axis = Axis("b", 2.5, 3.5, 101)
    p2: Axis = Axis("I", 1.0, 6.0, 101)
    fixed: dict = field(default_factory=lambda: {"eps": 0.018})
    workers: int | None = None
    out: str = "out"
    sc: SCConfig = field(default_factory=SCConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    def __post_init__(self):
        if self.model not in PARAM_TYPES:
            raise ConfigError(f"unknown model {self.model!r}; choose from {', '.join(PARAM_TYPES)}")
        names = {f.name for f in fields(PARAM_TYPES[self.model])}
        for key in (self.p1.name, self.p2.name, *self.fixed):
            if key not in names:
                raise ConfigError(f"model {self.model!r} has no parameter {key!r}")
        if self.p1.name == self.p2.name:
            raise ConfigError("p1 and p2 must be different parameters")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")


def parse_axis(value) -> Axis:
    """``"name:lo:hi:n"`` or a ``{name, lo, hi, n}`` table."""
    try:
        if isinstance(value, dict):
            return Axis(str(value["name"]), float(value["lo"]), float(value["hi"]), int(value["n"]))
        name, lo, hi, n = str(value).split(":")
        return Axis(name, float(lo), float(hi), int(n))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad axis {value!r} (expected name:lo:hi:n): {exc}") from None


def parse_fixed(items) -> dict:
    """``["k=v", ...]`` to a float dict."""
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"bad --fix {item!r} (expected name=value)")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"bad --fix value {item!r}") from None
    return out


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    allowed = {"sweep": SWEEP_KEYS, "integrator": INTEGRATOR_KEYS, "analysis": ANALYSIS_KEYS}
    for section, table in data.items():
        if section not in allowed:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in table:
            if key not in allowed[section]:
                raise ConfigError(f"{path}: unknown key {section}.{key}")
    return data


def build_config(file_data: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge TOML data with flag overrides (``None`` values are ignored)."""
    data = file_data or {}
    sw = dict(data.get("sweep", {}))
    it = dict(data.get("integrator", {}))
    an = dict(data.get("analysis", {}))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key in INTEGRATOR_KEYS:
            it[key] = val
        elif key == "fixed":
            sw["fixed"] = {**sw.get("fixed", {}), **val}
        else:
            sw[key] = val
    try:
        base = RunConfig()
        ic = replace(IntegratorConfig(), **{k: float(v) for k, v in it.items()})
        sc_kw = {k: sw[k] for k in ("t_transient", "t_observe", "threshold", "delta_ret")
                 if k in sw}
        sc_kw = {k: float(v) for k, v in sc_kw.items()}
        if "n_max" in sw:
            sc_kw["n_max"] = int(sw["n_max"])
        if "initial_policy" in sw:
            sc_kw["initial_policy"] = str(sw["initial_policy"])
        if "initial" in sw:
            sc_kw["initial"] = tuple(float(v) for v in sw["initial"])
        sc = SCConfig(integrator=ic, **sc_kw)
        if "eps" in an:
            an["eps"] = tuple(float(v) for v in an["eps"])
        analysis = AnalysisConfig(**an)
        fixed = {k: float(v) for k, v in sw.get("fixed", base.fixed).items()}
        return RunConfig(
            model=str(sw.get("model", base.model)),
            p1=parse_axis(sw["p1"]) if "p1" in sw else base.p1,
            p2=parse_axis(sw["p2"]) if "p2" in sw else base.p2,
            fixed=fixed,
            workers=int(sw["workers"]) if sw.get("workers") is not None else None,
            out=str(sw.get("out", base.out)),
            sc=sc,
            analysis=analysis,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def config_from_file(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    return build_config(load_toml(path) if path else None, overrides)
