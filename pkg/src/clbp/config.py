"""Flat ``key=value`` configuration with CLI-flag overrides.

Precedence, lowest to highest: built-in defaults, the file named by
``$CLBP_CONFIG``, an explicit ``--config`` file, command-line flags.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Mapping

from .errors import ClbpError
from .features import normalize_weights, order_channels
from .fusion import Rule
from .imaging import Colorspace
from .matching import Metric

__all__ = ["Config", "ConfigError", "load_config_file", "resolve_config"]

ENV_VAR = "CLBP_CONFIG"


class ConfigError(ClbpError, ValueError):
    pass


@dataclass(frozen=True)
class Config:
    channels: tuple[str, ...] = ("H", "S", "I")
    grid: tuple[int, int] = (4, 4)
    bins: int = 256
    metric: str = "KLD"
    fusion: str = "fvf"
    enhancement: str = "NORM_RATIO"  # NORM_RATIO, SVD_RATIO or NONE
    enhancement_space: str = "HSI"
    region_weights: tuple[float, ...] | None = None
    seed: int = 0
    trials: int = 10
    train_counts: tuple[int, ...] = (1, 2, 3, 4, 5)


def _ints(text: str, sep: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(" ", "").split(sep) if v)


def _parse_value(key: str, value) -> object:
    if not isinstance(value, str):
        return value
    value = value.strip()
    if key == "channels":
        return order_channels(c.strip() for c in value.split(",") if c.strip())
    if key == "grid":
        rows, cols = _ints(value.lower(), "x")
        return rows, cols
    if key in ("bins", "seed", "trials"):
        return int(value)
    if key == "train_counts":
        return _ints(value, ",")
    if key == "metric":
        return Metric.parse(value).value
    if key == "fusion":
        return Rule.parse(value).value
    if key == "enhancement":
        v = value.upper()
        v = {"NORM": "NORM_RATIO", "SVD": "SVD_RATIO"}.get(v, v)
        if v not in ("NORM_RATIO", "SVD_RATIO", "NONE"):
            raise ValueError(f"unknown enhancement {value!r}")
        return v
    if key == "enhancement_space":
        lookup = {s.value.lower(): s.value for s in (Colorspace.HSI, Colorspace.YCBCR, Colorspace.RGB)}
        return lookup[value.lower()]
    if key == "region_weights":
        return tuple(normalize_weights([float(w) for w in value.replace(",", " ").split()]))
    raise KeyError(key)


def load_config_file(path) -> dict[str, object]:
    """Parse a ``key=value`` file; ``#`` starts a comment line."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        out[key.strip()] = value.strip()
    return out


def resolve_config(overrides: Mapping[str, object] | None = None, config_file=None,
                   environ: Mapping[str, str] | None = None) -> Config:
    """Merge defaults, ``$CLBP_CONFIG``, ``config_file`` and ``overrides``.

    ``None`` values in ``overrides`` are ignored so unset CLI flags fall through.
    """
    environ = os.environ if environ is None else environ
    raw: dict[str, object] = {}
    if environ.get(ENV_VAR):
        raw.update(load_config_file(environ[ENV_VAR]))
    if config_file:
        raw.update(load_config_file(config_file))
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in fields(Config)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    parsed = {}
    for key, value in raw.items():
        try:
            parsed[key] = _parse_value(key, value)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    cfg = replace(Config(), **parsed)
    if cfg.region_weights is not None and len(cfg.region_weights) != cfg.grid[0] * cfg.grid[1]:
        raise ConfigError(f"{len(cfg.region_weights)} region weights for a {cfg.grid[0]}x{cfg.grid[1]} grid")
    return cfg
