"""JSON run configurations and the golden reference configurations.

Complex numbers are written as two-element arrays ``[re, im]``; plain numbers
are accepted as real values on input.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .background import BackgroundModel, GaussianBackground, ZeroBackground
from .core import ConfigError, DressingConfig

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "Grid",
    "RunConfig",
    "parse_complex",
    "encode_complex",
    "load_run_config",
    "run_config_from_dict",
    "run_config_to_dict",
    "golden_configs",
]


def parse_complex(v: Any) -> complex:
    if isinstance(v, bool):
        raise ConfigError("booleans are not numbers")
    if isinstance(v, (int, float)):
        return complex(float(v), 0.0)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(t, (int, float)) and not isinstance(t, bool) for t in v
    ):
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"expected a number or [re, im], got {v!r}")


def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


@dataclass(frozen=True)
class Grid:
    x1_min: float = -10.0
    x1_max: float = 10.0
    x1_steps: int = 201
    x2_min: float = 0.0
    x2_max: float = 0.0
    x2_steps: int = 1

    def __post_init__(self):
        if self.x1_steps < 1 or self.x2_steps < 1:
            raise ConfigError("grid steps must be >= 1")
        if self.x1_min > self.x1_max or self.x2_min > self.x2_max:
            raise ConfigError("grid bounds must be ordered")
        vals = (self.x1_min, self.x1_max, self.x2_min, self.x2_max)
        if not all(np.isfinite(vals)):
            raise ConfigError("grid bounds must be finite")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.linspace(self.x1_min, self.x1_max, self.x1_steps),
                np.linspace(self.x2_min, self.x2_max, self.x2_steps))

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-major in ``x2`` then ``x1``: ``x1`` varies fastest."""
        a1, a2 = self.axes()
        X2, X1 = np.meshgrid(a2, a1, indexing="ij")
        return X1.ravel(), X2.ravel()


@dataclass(frozen=True)
class RunConfig:
    dressing: DressingConfig
    grid: Grid = field(default_factory=Grid)
    k_samples: tuple = ()
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, compare=False, repr=False)


def _background(entry: Any) -> BackgroundModel:
    if entry is None:
        return ZeroBackground()
    if not isinstance(entry, dict) or "type" not in entry:
        raise ConfigError("background must be an object with a 'type' field")
    kind = entry["type"]
    if kind == "zero":
        return ZeroBackground()
    if kind == "gaussian":
        try:
            return GaussianBackground(
                amplitude=float(entry.get("amplitude", 0.1)),
                widths=tuple(float(w) for w in entry.get("widths", (1.0, 1.0))),
                center=tuple(float(c) for c in entry.get("center", (0.0, 0.0))),
                born_order=int(entry.get("born_order", 1)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid gaussian background: {exc}") from exc
    raise ConfigError(f"unknown background type {kind!r}")


def run_config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    ver = d.get("schema_version", SCHEMA_VERSION)
    if ver != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {ver}")
    if "lambdas" not in d or "coupling" not in d:
        raise ConfigError("config needs 'lambdas' and 'coupling'")
    lam = [parse_complex(v) for v in d["lambdas"]]
    rows = d["coupling"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ConfigError("coupling must be a list of rows")
    C = np.array([[parse_complex(v) for v in r] for r in rows], dtype=complex).reshape(len(rows), -1) \
        if rows else np.zeros((0, 0), complex)
    if any(len(r) != len(rows) for r in rows):
        raise ConfigError("coupling must be square")
    cfg = DressingConfig.from_arrays(lam, C, _background(d.get("background")))
    g = d.get("grid", {})
    try:
        grid = Grid(**{k: (int(v) if k.endswith("steps") else float(v)) for k, v in g.items()})
    except TypeError as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc
    ks = tuple(parse_complex(v) for v in d.get("k_samples", []))
    out = d.get("output", {})
    if out.get("format", "csv") not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")
    return RunConfig(cfg, grid, ks, dict(out), d)


def load_run_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return run_config_from_dict(data)


def run_config_to_dict(rc: RunConfig) -> dict:
    cfg = rc.dressing
    bg = cfg.background
    if isinstance(bg, GaussianBackground):
        bgd = {"type": "gaussian", "amplitude": bg.amplitude, "widths": list(bg.widths),
               "center": list(bg.center), "born_order": bg.born_order}
    else:
        bgd = {"type": "zero"}
    return {
        "schema_version": SCHEMA_VERSION,
        "lambdas": [encode_complex(z) for z in cfg.lambdas],
        "coupling": [[encode_complex(z) for z in row] for row in cfg.C],
        "background": bgd,
        "grid": rc.grid.__dict__.copy(),
        "k_samples": [encode_complex(z) for z in rc.k_samples],
        "output": dict(rc.output),
    }


def golden_configs() -> dict[str, DressingConfig]:
    """Reference configurations used by tests and the verification suites.

    All have strictly decreasing ``|Im lambda|`` and distinct real parts; the
    two- and three-soliton ones mix signs of ``Im lambda`` and couple them.
    """
    return {
        "one_soliton": DressingConfig.from_arrays([1j], [[1.0]]),
        "two_soliton": DressingConfig.from_arrays(
            [0.5 + 1.2j, -0.7 - 0.8j],
            [[1.0, 0.3 + 0.2j], [0.3 - 0.2j, -1.5]],
        ),
        "three_soliton": DressingConfig.from_arrays(
            [0.3 + 1.5j, -0.8 + 1.0j, 1.1 - 0.6j],
            [[1.2, 0.2 - 0.1j, 0.4j], [0.2 + 0.1j, 0.9, 0.1], [-0.4j, 0.1, -0.7]],
        ),
    }
