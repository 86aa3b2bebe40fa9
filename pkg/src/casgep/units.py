"""Unit tags on scenario quantities.

A tag such as ``"EUR/m^2"`` or ``"t/ha"`` is parsed into base dimensions
and a scale to canonical units (EUR, metre, year, impedance). Loaders check
each tag against the dimension a field requires and multiply the raw value
by the scale; nothing downstream sees units.
"""

from __future__ import annotations

import re
from collections import Counter

# symbol -> (dimension exponents, scale to the canonical unit)
BASE_UNITS = {
    "EUR": ({"money": 1}, 1.0),
    "€": ({"money": 1}, 1.0),
    "m": ({"length": 1}, 1.0),
    "km": ({"length": 1}, 1000.0),
    "ha": ({"length": 2}, 1e4),
    "year": ({"time": 1}, 1.0),
    "yr": ({"time": 1}, 1.0),
    "i": ({"impedance": 1}, 1.0),
}

_TOKEN = re.compile(r"^([^\^\d\s]+)\^?(-?\d+)?$")


class UnitError(ValueError):
    pass


def parse(tag: str, extra: dict | None = None):
    """``(dimension, scale)`` of a unit tag; ``extra`` adds symbols such as commodity units."""
    table = dict(BASE_UNITS)
    if extra:
        table.update(extra)
    tag = tag.strip()
    if tag in ("", "1"):
        return {}, 1.0
    parts = tag.replace("·", "*").split("/")
    dim: Counter = Counter()
    scale = 1.0
    for n, part in enumerate(parts):
        sign = 1 if n == 0 else -1
        for tok in part.split("*"):
            tok = tok.strip()
            if tok == "1" and n == 0:
                continue
            m = _TOKEN.match(tok)
            if not m or m.group(1) not in table:
                raise UnitError(f"unknown unit {tok!r} in {tag!r}")
            power = sign * int(m.group(2) or 1)
            d, s = table[m.group(1)]
            for k, v in d.items():
                dim[k] += v * power
            scale *= s**power
    return {k: v for k, v in dim.items() if v}, scale


def dimension(**exps) -> dict:
    return {k: v for k, v in exps.items() if v}


def convert(value, tag: str | None, expected: dict, extra: dict | None = None):
    """Value in canonical units after checking its tag has dimension ``expected``.

    An absent tag means the value is already canonical.
    """
    if tag is None:
        return value
    dim, scale = parse(tag, extra)
    if dim != expected:
        raise UnitError(f"unit {tag!r} has dimension {format_dimension(dim)}, expected {format_dimension(expected)}")
    if isinstance(value, (list, tuple)):
        return [v * scale for v in value]
    if isinstance(value, dict):
        return {k: v * scale for k, v in value.items()}
    return value * scale


def format_dimension(dim: dict) -> str:
    if not dim:
        return "dimensionless"
    return "*".join(f"{k}^{v}" for k, v in sorted(dim.items()))
