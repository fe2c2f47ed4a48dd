"""Flat ``key = value`` run configuration files.

One setting per line, ``#`` starts a comment. Keys are the
:class:`~medal.core.RunConfig` field names, with the optimizer settings
spelled ``adam_lr``, ``adam_beta1``, ``adam_beta2`` and ``adam_epsilon``.
Tuples are comma separated; ``max_iterations = none`` means no cap.
Unknown or repeated keys are errors.
"""

from __future__ import annotations

import dataclasses
import typing

from ..core import RunConfig
from ..errors import ConfigError
from ..learner import AdamConfig

ADAM_KEYS = {f"adam_{f.name}": f.name for f in dataclasses.fields(AdamConfig)}


def _field_types():
    hints = typing.get_type_hints(RunConfig)
    return {f.name: hints[f.name] for f in dataclasses.fields(RunConfig) if f.name != "adam"}


def _convert(key, raw, hint):
    raw = raw.strip()
    try:
        if hint is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        if hint is str:
            return raw
        origin = typing.get_origin(hint)
        args = typing.get_args(hint)
        if origin is tuple:
            item = args[0]
            return tuple(item(p) for p in raw.split(",") if p.strip())
        if type(None) in args:  # Optional[int]
            return None if raw.lower() in ("none", "") else int(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    raise ConfigError(f"unsupported config field type for {key}")


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    types = _field_types()
    values, adam = {}, {}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}, line {lineno}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"{source}, line {lineno}: duplicate key {key!r}")
        seen.add(key)
        if key in ADAM_KEYS:
            adam[ADAM_KEYS[key]] = _convert(key, raw, float)
        elif key in types:
            values[key] = _convert(key, raw, types[key])
        else:
            raise ConfigError(f"{source}, line {lineno}: unknown key {key!r}")
    try:
        return RunConfig(adam=AdamConfig(**adam), **values)
    except TypeError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), source=str(path))


def config_items(cfg: RunConfig) -> dict:
    """Flat ``{key: value}`` view, the same keys a config file uses."""
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "adam":
            for key, name in ADAM_KEYS.items():
                out[key] = getattr(value, name)
        else:
            out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


def format_config(cfg: RunConfig) -> str:
    lines = []
    for key, value in config_items(cfg).items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif value is None:
            value = "none"
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
