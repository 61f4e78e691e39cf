"""Strict JSON run configuration.

Every key is optional except where a study needs it; unknown keys are an
error that names the offending path. ``key=value`` overrides address nested
blocks with dots, e.g. ``field.theta=3``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, get_type_hints

from .errors import InvalidArgument

RULES = ("lattice-pod", "interlaced-spod", "mc")
DATA_KINDS = ("default", "manufactured")
FUNCTIONALS = ("mean", "weighted")
INTEGRANDS = ("pde", "product")


class ConfigError(InvalidArgument):
    """Schema violation; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class FieldConfig:
    n0: float = 1.0
    amplitude: float = 0.2
    theta: float = 4.0
    s: int = 8


@dataclass
class ParamOverrides:
    alpha1: float | None = None
    A: float | None = None
    alpha2: float | None = None
    beta2_hat: float | None = None


@dataclass
class RunConfig:
    k: float = 2 * math.pi
    side: float = 1.0
    p: int = 2
    m_e: int = 16
    s: int = 8
    N: int = 257
    R: int = 8
    rule: str = "lattice-pod"
    field: FieldConfig = dataclasses.field(default_factory=FieldConfig)
    params: ParamOverrides = dataclasses.field(default_factory=ParamOverrides)
    p0: float = 0.5
    p1: float = 0.6
    delta: float = 0.1
    seed: int = 42
    functional: str = "mean"
    data: str = "default"
    phi: float = 0.0
    integrand: str = "pde"
    output: str = "out"
    grid_res: int = 64
    safety: float = 0.99
    kL_list: list = dataclasses.field(default_factory=lambda: [1.0, 10.0, 100.0])
    mesh_list: list = dataclasses.field(default_factory=lambda: [8, 16, 32])
    s_list: list = dataclasses.field(default_factory=lambda: [2, 4, 8, 16])
    s_ref: int = 64
    N_list: list = dataclasses.field(default_factory=lambda: [2 ** e for e in range(4, 11)])
    m_list: list = dataclasses.field(default_factory=lambda: list(range(4, 13)))
    fd_step1: float = 1e-4
    fd_step2: float = 1e-3
    max_order: int = 3
    dims: int = 4
    n_y: int = 10

    def validate(self) -> "RunConfig":
        def need(cond, path, msg):
            if not cond:
                raise ConfigError(path, msg)

        need(self.k > 0, "k", "wavenumber must be positive")
        need(self.side > 0, "side", "must be positive")
        need(self.p >= 2, "p", "spline degree must be >= 2 (C^1 needed for the Laplacian)")
        need(self.m_e >= 2, "m_e", "need at least 2 elements per axis")
        need(self.s >= 1, "s", "must be >= 1")
        need(self.field.s >= 0, "field.s", "must be >= 0")
        need(self.integrand != "pde" or self.s <= self.field.s, "s",
             f"exceeds the number of materialized modes ({self.field.s})")
        need(self.N >= 1, "N", "must be >= 1")
        need(self.R >= 1, "R", "must be >= 1")
        need(self.rule in RULES, "rule", f"must be one of {RULES}")
        need(self.field.amplitude >= 0, "field.amplitude", "must be nonnegative")
        need(self.field.theta > 1, "field.theta", "decay exponent must exceed 1")
        need(0 < self.p0 < 1, "p0", "must lie in (0, 1)")
        need(0 < self.p1 < 1, "p1", "must lie in (0, 1)")
        need(0 < self.delta < 0.5, "delta", "must lie in (0, 1/2)")
        need(self.functional in FUNCTIONALS, "functional", f"must be one of {FUNCTIONALS}")
        need(self.data in DATA_KINDS, "data", f"must be one of {DATA_KINDS}")
        need(self.integrand in INTEGRANDS, "integrand", f"must be one of {INTEGRANDS}")
        need(self.grid_res >= 16, "grid_res", "must be >= 16")
        need(0 < self.safety <= 1, "safety", "must lie in (0, 1]")
        need(all(x > 0 for x in self.kL_list), "kL_list", "entries must be positive")
        need(all(int(m) >= 2 for m in self.mesh_list), "mesh_list", "entries must be >= 2")
        need(self.s_ref > max(self.s_list, default=0), "s_ref", "must exceed max(s_list)")
        need(all(int(n) >= 1 for n in self.N_list), "N_list", "entries must be >= 1")
        need(all(4 <= int(m) <= 20 for m in self.m_list), "m_list", "entries must lie in [4, 20]")
        need(self.fd_step1 > 0 and self.fd_step2 > 0, "fd_step1", "steps must be positive")
        need(self.max_order >= 0 and self.dims >= 1 and self.n_y >= 1, "max_order",
             "need max_order >= 0, dims >= 1, n_y >= 1")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _coerce(value: Any, hint, path: str):
    origin = getattr(hint, "__origin__", None)
    if dataclasses.is_dataclass(hint):
        if not isinstance(value, dict):
            raise ConfigError(path, "expected an object")
        return _build(hint, value, path + ".")
    text = str(hint)
    if hint is bool or text == "bool":
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true/false")
        return value
    if hint is int or text == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    if hint is float or text == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if "None" in text and value is None:
        return None
    if "float" in text:
        return _coerce(value, float, path)
    if hint is str or text == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if hint is list or origin is list or text == "list":
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        return list(value)
    return value


def _build(cls, data: dict, prefix: str = ""):
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(prefix + key, "unknown key")
    kwargs = {key: _coerce(val, hints[key], prefix + key) for key, val in data.items()}
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    return _build(RunConfig, data).validate()


def parse_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("<file>", f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return config_from_dict(data)


def apply_overrides(config: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply ``key=value`` strings; values are parsed as JSON when possible."""
    data = config.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(key, "unknown key")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(key, "unknown key")
        node[parts[-1]] = val
    return config_from_dict(data)
