"""Flat ``key=value`` configuration files.

Blank lines and lines starting with ``#`` are ignored; keys may contain
dots (``budget.en = 50000``).
"""

from __future__ import annotations

import dataclasses
from typing import Any


class ConfigError(ValueError):
    pass


def parse_flat(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_flat(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as f:
        return parse_flat(f.read())


def _convert(value: str, kind: Any, key: str):
    kind = str(kind)
    try:
        if "None" in kind and value.lower() in ("none", "off", ""):
            return None
        if "bool" in kind:
            lowered = value.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if "int" in kind:
            return int(value)
        if "float" in kind:
            return float(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return value


def to_dataclass(cls, values: dict[str, str], strict: bool = True):
    """Build dataclass ``cls`` from string values, converting by field type."""
    kinds = {f.name: f.type for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in kinds:
            if strict:
                raise ConfigError(f"unknown key {key!r}")
            continue
        kwargs[key] = _convert(value, kinds[key], key)
    return cls(**kwargs)


def dump_flat(obj) -> str:
    return "".join(f"{k}={'none' if v is None else v}\n"
                   for k, v in dataclasses.asdict(obj).items())
