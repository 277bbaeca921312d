"""Run configuration: flat key-value text with a JSON alternative.

The text grammar is one `key = value` pair per line, `#` comments and blank
lines ignored.  Model keys are the eleven parameter names; run keys control
horizon, step, path counts, seeds, tolerances and output.  A JSON config is
a flat object with the same keys.  All randomness flows from `seed_base`;
nothing is ever seeded from the clock.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .brackets import DEFAULT_K2_VARIANT, K2Variant
from .model import PARAM_KEYS, ModelParams

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config_text",
    "config_to_text",
    "reference_params",
    "reference_config",
    "REFERENCE_SIGMA_PAIRS",
]

# Interaction and noise levels of the built-in reproduction preset; initial
# densities are fixed at 1 for both populations.
_REFERENCE_BASE = dict(a1=1.0, b1=0.1, c1=6.0, a2=2.0, b2=0.5, c2=0.9,
                       beta=5.0, x0=1.0, y0=1.0)
REFERENCE_SIGMA_PAIRS = ((1.5, 1.3), (0.5, 0.3))


class ConfigError(ValueError):
    """Config parse or validation failure, with a line diagnostic when known."""


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    t_end: float = 10.0
    dt: float = 1e-3
    n_paths: int = 1000
    seed_base: int = 1234
    rho: float = 0.0
    tol_rel: float = 1e-2   # envelope audit tolerance
    tol_1d: float = 1e-6    # half-line quadrature
    tol_2d: float = 1e-5    # wedge quadrature
    tol_3d: float = 1e-4    # product-law quadrature
    k2_variant: K2Variant = DEFAULT_K2_VARIANT
    out_dir: str = "out"

    def __post_init__(self):
        for name in ("t_end", "dt", "tol_rel", "tol_1d", "tol_2d", "tol_3d"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if self.dt >= self.t_end:
            raise ConfigError(f"dt ({self.dt}) must be smaller than t_end "
                              f"({self.t_end})")
        if self.n_paths < 1:
            raise ConfigError(f"n_paths must be >= 1, got {self.n_paths}")
        if not -1.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [-1, 1], got {self.rho}")


_RUN_KEY_TYPES = {
    "t_end": float, "dt": float, "n_paths": int, "seed_base": int,
    "rho": float, "tol_rel": float, "tol_1d": float, "tol_2d": float,
    "tol_3d": float, "k2_variant": str, "out_dir": str,
}


def reference_params(sigma1: float, sigma2: float, **overrides) -> ModelParams:
    """Built-in reproduction parameter set at the given noise intensities."""
    merged = {**_REFERENCE_BASE, "sigma1": sigma1, "sigma2": sigma2,
              **overrides}
    return ModelParams(**merged)


def reference_config(sigma1: float = 0.5, sigma2: float = 0.3,
                     **run_overrides) -> RunConfig:
    return RunConfig(params=reference_params(sigma1, sigma2), **run_overrides)


def _coerce(key: str, raw: str, where: str):
    if key in PARAM_KEYS:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{where}: invalid number for {key}: {raw!r}") \
                from None
    if key not in _RUN_KEY_TYPES:
        raise ConfigError(f"{where}: unknown key {key!r}")
    typ = _RUN_KEY_TYPES[key]
    if typ is str:
        return raw
    try:
        return typ(raw) if typ is not int else int(raw, 0)
    except ValueError:
        raise ConfigError(f"{where}: invalid {typ.__name__} for {key}: {raw!r}") \
            from None


def _assemble(entries: dict) -> RunConfig:
    missing = [k for k in PARAM_KEYS if k not in entries]
    if missing:
        raise ConfigError(f"missing parameter keys: {', '.join(missing)}")
    params = ModelParams.from_dict({k: entries[k] for k in PARAM_KEYS})
    run_kwargs = {}
    for key, value in entries.items():
        if key in PARAM_KEYS:
            continue
        if key == "k2_variant":
            try:
                value = K2Variant(value)
            except ValueError:
                raise ConfigError(
                    f"k2_variant must be one of "
                    f"{[v.value for v in K2Variant]}, got {value!r}") from None
        run_kwargs[key] = value
    try:
        return RunConfig(params=params, **run_kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def parse_config_text(text: str) -> RunConfig:
    entries: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {raw_line.strip()!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = _coerce(key, raw, f"line {lineno}")
    return _assemble(entries)


def parse_config_json(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON config: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("JSON config must be a flat object")
    entries = {}
    for key, value in data.items():
        if key in PARAM_KEYS:
            entries[key] = float(value)
        elif key in _RUN_KEY_TYPES:
            entries[key] = (_RUN_KEY_TYPES[key](value)
                            if _RUN_KEY_TYPES[key] is not str else str(value))
        else:
            raise ConfigError(f"unknown key {key!r}")
    return _assemble(entries)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        return parse_config_json(text)
    return parse_config_text(text)


def config_to_text(cfg: RunConfig) -> str:
    lines = [f"{k} = {getattr(cfg.params, k)!r}" for k in PARAM_KEYS]
    for f in fields(RunConfig):
        if f.name == "params":
            continue
        value = getattr(cfg, f.name)
        if isinstance(value, K2Variant):
            value = value.value
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
