"""Quantity parsing for configs and CLI flags.

Values are plain SI floats everywhere inside the package; only the ingest
layer accepts unit suffixes ("40ns", "1.62mA", "4GHz", "50ohm"). A bare
number (int/float or numeric string) is taken as already-SI.
"""
from __future__ import annotations

import re

from .errors import ValidationError

# suffix -> (dimension, multiplier)
_UNITS = {
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "ns": ("time", 1e-9),
    "ps": ("time", 1e-12),
    "hz": ("frequency", 1.0),
    "khz": ("frequency", 1e3),
    "mhz": ("frequency", 1e6),
    "ghz": ("frequency", 1e9),
    "a": ("current", 1.0),
    "ma": ("current", 1e-3),
    "ua": ("current", 1e-6),
    "v": ("voltage", 1.0),
    "mv": ("voltage", 1e-3),
    "uv": ("voltage", 1e-6),
    "m": ("length", 1.0),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "ohm": ("impedance", 1.0),
    "ohms": ("impedance", 1.0),
}

_QTY_RE = re.compile(r"^\s*([+-]?[0-9.]+(?:[eE][+-]?[0-9]+)?)\s*([a-zA-Z]*)\s*$")


def parse_quantity(value, dimension: str | None = None) -> float:
    """Parse ``value`` into an SI float.

    ``dimension`` (e.g. "time", "current") is enforced when a unit suffix is
    present; suffix-less values are passed through unchecked.
    """
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValidationError(f"cannot parse quantity from {type(value).__name__}")
    m = _QTY_RE.match(value)
    if not m:
        raise ValidationError(f"malformed quantity {value!r}")
    number, suffix = m.group(1), m.group(2).lower()
    try:
        x = float(number)
    except ValueError as exc:
        raise ValidationError(f"malformed quantity {value!r}") from exc
    if not suffix:
        return x
    if suffix not in _UNITS:
        raise ValidationError(f"unknown unit {suffix!r} in {value!r}")
    dim, mult = _UNITS[suffix]
    if dimension is not None and dim != dimension:
        raise ValidationError(
            f"expected a {dimension} quantity, got {value!r} ({dim})"
        )
    return x * mult


def si(value, dimension: str | None = None) -> float:
    """Shorthand used by the config builders."""
    return parse_quantity(value, dimension)
