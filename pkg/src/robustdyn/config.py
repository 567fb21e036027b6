"""Flat ``key = value`` config files.

Blank lines and ``#`` comments are ignored. Values are read as Python literals
(numbers, booleans, None, quoted strings, lists) and fall back to bare strings.
"""

from __future__ import annotations

import ast
from pathlib import Path

from .errors import InvalidArgument


def parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_config(text: str) -> dict:
    out = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"line {no}: expected key = value")
        key, val = line.split("=", 1)
        key = key.strip()
        if not key:
            raise InvalidArgument(f"line {no}: empty key")
        out[key] = parse_value(val)
    return out


def load_config(path: str | Path | None) -> dict:
    return parse_config(Path(path).read_text()) if path else {}


def merged(defaults: dict, overrides: dict) -> dict:
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
    return {**defaults, **overrides}
