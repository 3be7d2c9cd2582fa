"""Experiment configuration: one JSON document, optionally overridden from the CLI."""
from __future__ import annotations

import copy
import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import ProfileCurve, SurfaceKind, SurfaceSpec, build_profile, read_table_csv
from .semiclassics import CharacterFamily, admissible_exponents


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class SurfaceConfig:
    kind: str = "round_sphere"
    axis_ratio: float = 1.0
    table_csv: str | None = None


@dataclass
class ExperimentConfig:
    surface: SurfaceConfig = field(default_factory=SurfaceConfig)
    grid_size: int = 4000
    modes: list = field(default_factory=lambda: [0, 1, 2, 5])
    count: int = 20
    l_cap: int = 60
    c: float = 1.0
    beta: float = 1.0 / 6.0
    vartheta: float = 0.0
    family: list | None = field(default_factory=lambda: [0])
    h_list: list = field(default_factory=lambda: [0.1, 0.01, 0.001])
    test_functions: list = field(default_factory=lambda: ["one", "theta", "cos", "theta2"])
    qlimit_modes: list = field(default_factory=lambda: [0, 1, 2])
    qlimit_l: list = field(default_factory=lambda: [20, 200])
    legendre_modes: list = field(default_factory=lambda: [0, 2])
    legendre_l: list = field(default_factory=lambda: [20, 200])
    legendre_epsilon: float = 0.3
    zonal_l: list = field(default_factory=lambda: [5, 40])
    zonal_epsilons: list = field(default_factory=lambda: [0.5, 0.8])
    partition_terms: int = 40
    flow_T: float = 1.0
    flow_dt: float = 1e-3
    flow_scheme: str = "midpoint4"
    commute_t: float = 0.7
    commute_samples: int = 20
    seed: int = 0
    out: str = "out"

    def to_dict(self) -> dict:
        return asdict(self)

    # ------------------------------------------------------------------
    def validate(self, qe: bool = False) -> "ExperimentConfig":
        if self.surface.kind not in {k.value for k in SurfaceKind}:
            raise ConfigError(f"surface.kind: unknown surface {self.surface.kind!r}")
        if self.surface.kind == "ellipsoid" and not self.surface.axis_ratio > 0:
            raise ConfigError("surface.axis_ratio: must be > 0")
        if self.surface.kind == "table" and not self.surface.table_csv:
            raise ConfigError("surface.table_csv: required for a table surface")
        if not isinstance(self.grid_size, int) or self.grid_size < 64:
            raise ConfigError("grid_size: must be an integer >= 64")
        if self.count < 1 or self.count > self.grid_size // 4:
            raise ConfigError("count: must lie in [1, grid_size/4]")
        if not self.c > 0:
            raise ConfigError("c: energy level must be positive")
        if not self.beta > 0:
            raise ConfigError("beta: must be positive")
        if any(not 0 < h <= 1 for h in self.h_list):
            raise ConfigError("h_list: every h must lie in (0, 1]")
        if self.flow_scheme not in ("midpoint", "midpoint4"):
            raise ConfigError("flow_scheme: must be 'midpoint' or 'midpoint4'")
        for name in self.test_functions:
            if not (isinstance(name, dict) or name in TEST_FUNCTIONS):
                raise ConfigError(f"test_functions: unknown test function {name!r}")
        if qe:
            vt = 0.0 if self.family is not None else self.vartheta
            try:
                lo, hi = admissible_exponents(vt)
            except ValueError as exc:
                raise ConfigError(f"vartheta: {exc}") from None
            # the open upper endpoint is tolerated (flagged in reports)
            if not lo < self.beta <= hi * (1 + 1e-12):
                raise ConfigError(f"beta: {self.beta} outside admissible interval ({lo}, {hi})")
        return self

    def beta_at_boundary(self) -> bool:
        vt = 0.0 if self.family is not None else self.vartheta
        try:
            return self.beta >= admissible_exponents(vt)[1] * (1 - 1e-12)
        except ValueError:
            return True

    def surface_spec(self, grid_size: int | None = None) -> SurfaceSpec:
        n = grid_size or self.grid_size
        s = self.surface
        if s.kind == "table":
            return read_table_csv(s.table_csv, n)
        if s.kind == "ellipsoid":
            return SurfaceSpec.ellipsoid(s.axis_ratio, n)
        return SurfaceSpec.round_sphere(n)

    def curve(self, grid_size: int | None = None) -> ProfileCurve:
        return build_profile(self.surface_spec(grid_size))

    def character_family(self) -> CharacterFamily:
        if self.family is not None:
            return CharacterFamily.of(self.family)
        return CharacterFamily(self.vartheta)


# --------------------------------------------------------------------------
# test functions on [0, L]


def _one(curve):
    return lambda t: np.ones_like(np.asarray(t, dtype=float))


def _theta(curve):
    return lambda t: np.asarray(t, dtype=float)


def _theta2(curve):
    return lambda t: np.asarray(t, dtype=float) ** 2


def _cos(curve):
    # cos(theta) on the round sphere; odd about L/2 on any profile
    L = curve.L
    return lambda t: np.cos(math.pi * np.asarray(t, dtype=float) / L)


TEST_FUNCTIONS: dict[str, Callable] = {"one": _one, "theta": _theta, "theta2": _theta2, "cos": _cos}


def resolve_test_function(spec, curve: ProfileCurve) -> tuple[str, Callable]:
    """Resolve a test-function spec: a name, or ``{"name": ..., "table": csv}``."""
    if isinstance(spec, str):
        return spec, TEST_FUNCTIONS[spec](curve)
    path = spec.get("table")
    if not path:
        raise ConfigError("test_functions: custom entry needs a 'table' CSV with header theta,a")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    th = np.array([float(r["theta"]) for r in rows])
    a = np.array([float(r["a"]) for r in rows])
    spline = CubicSpline(th, a)
    return spec.get("name", "custom"), lambda t: spline(np.asarray(t, dtype=float))


# --------------------------------------------------------------------------
# loading


def _set_path(d: dict, key: str, value) -> None:
    parts = key.split(".")
    cur = d
    for p in parts[:-1]:
        if p not in cur or not isinstance(cur[p], dict):
            raise ConfigError(f"{key}: no such configuration section {p!r}")
        cur = cur[p]
    if parts[-1] not in cur:
        raise ConfigError(f"{key}: unknown configuration key")
    cur[parts[-1]] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def from_dict(data: dict, overrides=()) -> ExperimentConfig:
    base = ExperimentConfig().to_dict()
    merged = copy.deepcopy(base)
    for key, value in data.items():
        if key not in base:
            raise ConfigError(f"{key}: unknown configuration key")
        if key == "surface":
            if not isinstance(value, dict):
                raise ConfigError("surface: must be an object")
            for k, v in value.items():
                _set_path(merged, f"surface.{k}", v)
        else:
            merged[key] = value
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        k, v = item.split("=", 1)
        _set_path(merged, k.strip(), _parse_value(v))
    surface = merged.pop("surface")
    try:
        cfg = ExperimentConfig(surface=SurfaceConfig(**surface), **merged)
    except TypeError as exc:
        raise ConfigError(f"surface: {exc}") from None
    _check_types(cfg)
    return cfg


def _check_types(cfg: ExperimentConfig) -> None:
    defaults = ExperimentConfig()
    for f in fields(ExperimentConfig):
        if f.name == "surface":
            continue
        want, got = getattr(defaults, f.name), getattr(cfg, f.name)
        if f.name == "family" and got is None:
            continue
        if isinstance(want, bool) or isinstance(want, str):
            ok = isinstance(got, type(want))
        elif isinstance(want, int):
            ok = isinstance(got, int) and not isinstance(got, bool)
        elif isinstance(want, float):
            ok = isinstance(got, (int, float)) and not isinstance(got, bool)
        elif isinstance(want, list):
            ok = isinstance(got, list)
        else:
            ok = True
        if not ok:
            raise ConfigError(f"{f.name}: expected {type(want).__name__}, got {got!r}")


def load(path=None, overrides=()) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
    return from_dict(data, overrides)
