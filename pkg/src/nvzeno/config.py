"""Run configuration files.

Grammar (a TOML subset)::

    # comment
    omega = 0.05          # flat keys, see KEYS below
    delta = 0.5
    model = "open"
    g_GHz = 1.0           # optional: rates are then GHz values of rate/2pi

    [axes]                # sweeps only, one or two entries, in order
    kappa = { min = 0.0, max = 0.2, count = 11 }
    gamma = { min = 0.0, max = 0.01, count = 11, scale = "linear" }
    r = [0.1, 0.5, 1.0]   # explicit values

Any key outside ``KEYS`` (or any table other than ``[axes]``) is rejected.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .hamiltonians import SystemParams
from .sweep import Axis

RATE_KEYS = ("g", "g1", "g2", "omega", "omega1", "omega2", "delta", "kappa", "gamma")
PARAM_KEYS = RATE_KEYS + ("phi1", "phi2", "n_max")
PROTOCOL_KEYS = {
    "protocol": str, "model": str, "alpha": float, "beta": float, "r": float, "lam": float,
    "delta_t_frac": float, "compensate": bool, "t_frac": float, "t_max": float, "n_times": int,
    "window_lo": float, "window_hi": float,
}
OUTPUT_KEYS = {"format": str, "precision": int, "run_id": str, "workers": int}
KEYS = frozenset(PARAM_KEYS) | set(PROTOCOL_KEYS) | set(OUTPUT_KEYS) | {"g_GHz"}


class ConfigError(ValueError):
    """Invalid configuration; maps to exit status 2."""


@dataclass
class RunConfig:
    params: dict = field(default_factory=dict)
    protocol: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    axes: list = field(default_factory=list)
    g_ghz: float | None = None

    @property
    def physical_units(self) -> bool:
        return self.g_ghz is not None

    def _scale(self, name: str, value: float) -> float:
        # GHz values of rate/2pi become multiples of g
        if self.g_ghz is not None and name in RATE_KEYS:
            return value / self.g_ghz
        return value

    def system(self, base: SystemParams | None = None) -> SystemParams:
        base = base or SystemParams()
        changes = {k: self._scale(k, v) for k, v in self.params.items()}
        try:
            return base.with_(**changes)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def sweep_axes(self) -> tuple:
        out = []
        for ax in self.axes:
            vals = tuple(tuple(self._scale(n, v) for n, v in zip(ax.names, pt)) for pt in ax.values)
            out.append(Axis(ax.names, vals, ax.scale))
        return tuple(out)

    def time_to_ns(self, t: float) -> float:
        """Dimensionless time (units of 1/g) to ns given g/2pi = g_GHz."""
        return t / (2 * math.pi * self.g_ghz)


def _number(key, value, kind):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{key} must be an integer")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    return value


def _axis(name: str, spec) -> Axis:
    try:
        if isinstance(spec, list):
            return Axis((name,), tuple((float(_number(name, v, float)),) for v in spec))
        if isinstance(spec, dict):
            extra = set(spec) - {"min", "max", "count", "scale"}
            if extra:
                raise ConfigError(f"axis {name}: unknown keys {sorted(extra)}")
            missing = {"min", "max", "count"} - set(spec)
            if missing:
                raise ConfigError(f"axis {name}: missing {sorted(missing)}")
            return Axis.span(name, _number(name, spec["min"], float), _number(name, spec["max"], float),
                             _number(name, spec["count"], int), spec.get("scale", "linear"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"axis {name} must be a list of values or a {{min, max, count}} table")


def parse_config(data: dict) -> RunConfig:
    cfg = RunConfig()
    for key, value in data.items():
        if key == "axes":
            if not isinstance(value, dict):
                raise ConfigError("[axes] must be a table")
            cfg.axes = [_axis(name, spec) for name, spec in value.items()]
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        if key == "g_GHz":
            cfg.g_ghz = _number(key, value, float)
            if cfg.g_ghz <= 0:
                raise ConfigError("g_GHz must be > 0")
        elif key in PARAM_KEYS:
            cfg.params[key] = _number(key, value, int if key == "n_max" else float)
        elif key in PROTOCOL_KEYS:
            cfg.protocol[key] = _number(key, value, PROTOCOL_KEYS[key])
        else:
            cfg.output[key] = _number(key, value, OUTPUT_KEYS[key])
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data)


def loads_config(text: str) -> RunConfig:
    try:
        return parse_config(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc)) from None
