"""Run configuration: a flat ``key = value`` text format.

One pair per line, ``#`` starts a comment, unknown keys are rejected and
missing keys fall back to :data:`DEFAULTS`. ``initial_profile`` takes one of::

    zero
    gaussian(center=25.05, width=7.5, amplitude=1.0)
    step(edge=10.0, amplitude=1.0)

Omitted profile arguments use the defaults shown in :data:`PROFILE_DEFAULTS`;
a Gaussian without ``center`` is centred on the domain midpoint.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .cf_calculus import FractionalOrder
from .scheme import AquiferParams, Grid

__all__ = ["ConfigError", "InitialProfile", "RunConfig", "DEFAULTS", "parse_config", "load_config"]


class ConfigError(ValueError):
    """Bad configuration text; carries the offending line and key when known."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key


PROFILE_DEFAULTS = {
    "gaussian": {"center": None, "width": 7.5, "amplitude": 1.0},
    "step": {"edge": 10.0, "amplitude": 1.0},
    "zero": {},
}


@dataclass(frozen=True)
class InitialProfile:
    kind: str = "gaussian"
    args: dict = field(default_factory=lambda: dict(PROFILE_DEFAULTS["gaussian"]))

    def function(self, grid: Grid):
        """Callable ``phi(r)`` for this profile on ``grid``."""
        if self.kind == "zero":
            return lambda r: np.zeros_like(np.asarray(r, dtype=float))
        amp = float(self.args["amplitude"])
        if self.kind == "gaussian":
            centre = self.args["center"]
            centre = 0.5 * (grid.r_min + grid.r_max) if centre is None else float(centre)
            width = float(self.args["width"])
            return lambda r: amp * np.exp(-(((np.asarray(r, dtype=float) - centre) / width) ** 2))
        edge = float(self.args["edge"])
        return lambda r: np.where(np.asarray(r, dtype=float) < edge, amp, 0.0)

    def __str__(self):
        if self.kind == "zero":
            return "zero"
        inner = ", ".join(f"{k}={v}" for k, v in self.args.items() if v is not None)
        return f"{self.kind}({inner})"


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 0.5
    transmissivity: float = 1.0
    storativity: float = 0.01
    r_min: float = 0.1
    r_max: float = 50.0
    n_cells: int = 50
    n_steps: int = 100
    t_max: float = 0.1
    initial_profile: InitialProfile = field(default_factory=InitialProfile)
    output_path: str = ""
    output_format: str = "csv"

    @property
    def order(self) -> FractionalOrder:
        return FractionalOrder(self.alpha)

    @property
    def params(self) -> AquiferParams:
        return AquiferParams(self.transmissivity, self.storativity)

    @property
    def grid(self) -> Grid:
        return Grid(self.r_max, self.n_cells, self.t_max, self.n_steps, r_min=self.r_min)

    @property
    def phi(self):
        return self.initial_profile.function(self.grid)

    def with_changes(self, **changes) -> "RunConfig":
        return replace(self, **changes)


DEFAULTS = RunConfig()

_FLOAT_KEYS = {"alpha", "transmissivity", "storativity", "r_min", "r_max", "t_max"}
_INT_KEYS = {"n_cells", "n_steps"}
_PROFILE_RE = re.compile(r"^(\w+)\s*(?:\((.*)\))?$")


def _parse_float(key, raw, line):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}", line, key) from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite", line, key)
    return value


def _parse_int(key, raw, line):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}", line, key) from None


def _parse_profile(raw, line):
    m = _PROFILE_RE.match(raw.strip())
    if not m or m.group(1) not in PROFILE_DEFAULTS:
        raise ConfigError(
            f"initial_profile: expected one of gaussian(...), step(...), zero; got {raw!r}",
            line,
            "initial_profile",
        )
    kind, body = m.group(1), m.group(2)
    args = dict(PROFILE_DEFAULTS[kind])
    if body and body.strip():
        for part in body.split(","):
            name, sep, val = part.partition("=")
            name = name.strip()
            if not sep or name not in args:
                raise ConfigError(f"initial_profile: bad argument {part.strip()!r} for {kind}", line, "initial_profile")
            args[name] = _parse_float(f"initial_profile.{name}", val.strip(), line)
    if kind == "gaussian" and not args["width"] > 0.0:
        raise ConfigError("initial_profile.width must be positive", line, "initial_profile")
    return InitialProfile(kind, args)


def _check(values: dict, lines: dict) -> None:
    def fail(key, msg):
        raise ConfigError(f"{key} {msg}", lines.get(key), key)

    if not 0.0 < values["alpha"] < 1.0:
        fail("alpha", f"must lie in the open interval (0, 1), got {values['alpha']}")
    for key in ("transmissivity", "storativity", "r_min", "t_max"):
        if not values[key] > 0.0:
            fail(key, f"must be positive, got {values[key]}")
    if not values["r_max"] > values["r_min"]:
        fail("r_max", f"must exceed r_min ({values['r_min']}), got {values['r_max']}")
    if values["n_cells"] < 3:
        fail("n_cells", f"must be at least 3, got {values['n_cells']}")
    if values["n_steps"] < 1:
        fail("n_steps", f"must be at least 1, got {values['n_steps']}")
    if values["output_format"] not in ("csv", "json"):
        fail("output_format", f"must be csv or json, got {values['output_format']!r}")


def parse_config(text: str) -> RunConfig:
    """Parse configuration text into a validated :class:`RunConfig`."""
    known = {f.name for f in fields(RunConfig)}
    values = {f.name: getattr(DEFAULTS, f.name) for f in fields(RunConfig)}
    lines: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        content = raw_line.split("#", 1)[0].strip()
        if not content:
            continue
        key, sep, raw = content.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", lineno)
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", lineno, key)
        if key in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno, key)
        if not raw:
            raise ConfigError(f"{key}: missing value", lineno, key)
        lines[key] = lineno
        if key in _FLOAT_KEYS:
            values[key] = _parse_float(key, raw, lineno)
        elif key in _INT_KEYS:
            values[key] = _parse_int(key, raw, lineno)
        elif key == "initial_profile":
            values[key] = _parse_profile(raw, lineno)
        else:
            values[key] = raw
    _check(values, lines)
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
