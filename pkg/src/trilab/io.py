"""Serialization: exact rationals as ``"p/q"`` strings, decimal CSV rendering."""

from __future__ import annotations

import csv
import io
import json
import math
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable

import numpy as np

from .core import DimensionTable, KernelArray, as_fraction


def rational_str(x) -> str:
    """Lowest terms, sign on the numerator, always ``p/q``."""
    x = as_fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational {text!r}") from exc


def decimal_str(x, digits: int = 12) -> str:
    """Decimal rendering with ``digits`` significant digits; integers stay integral."""
    if isinstance(x, (float, np.floating)):
        if math.isinf(x) or math.isnan(x):
            return str(float(x))
        return f"{float(x):.{digits}g}"
    x = as_fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    with localcontext() as ctx:
        ctx.prec = digits
        value = Decimal(x.numerator) / Decimal(x.denominator)
    return f"{value:g}" if abs(value) < Decimal("1e-6") else format(value.normalize(), "f")


def value_json(x):
    """Exact values become ``"p/q"``; floats stay floats; inf becomes ``"inf"``."""
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        return rational_str(x)
    if isinstance(x, (float, np.floating)):
        return "inf" if math.isinf(x) else float(x)
    return x


def rows_json(rows: Iterable[Iterable]) -> list[list]:
    return [[value_json(v) for v in row] for row in rows]


def table_json(table: DimensionTable | KernelArray) -> dict:
    out = {"depth": table.depth, "rows": rows_json(table.rows)}
    if isinstance(table, DimensionTable):
        out["base"] = [table.base.n, table.base.k]
    else:
        out["exact"] = table.exact
        if table.error_bound is not None:
            out["error_bound"] = table.error_bound
    return out


def kernel_from_json(data: dict) -> KernelArray:
    rows = tuple(tuple(parse_rational(v) for v in row) for row in data["rows"])
    return KernelArray(len(rows) - 1, rows)


def rows_csv(rows: Iterable[Iterable], digits: int = 12) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([decimal_str(v, digits) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
