"""Triangle spec files and the small expression language for custom rules.

A spec is JSON-compatible::

    {"name": "q-pascal", "params": {"q": "1/2"}}
    {"name": "custom", "left": "n + 1 - k/2", "right": "1"}

Expressions use ``+ - * /``, parentheses, integer literals and the symbols
``n`` and ``k``.
"""

from __future__ import annotations

import ast
import json
import operator
from fractions import Fraction
from pathlib import Path

import numpy as np

from .catalog import NAMES, catalog_triangle
from .core import Triangle, as_fraction

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
}


class ExpressionError(ValueError):
    pass


def _compile(node, text):
    if isinstance(node, ast.Expression):
        return _compile(node.body, text)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        lhs, rhs = _compile(node.left, text), _compile(node.right, text)
        return lambda env: op(lhs(env), rhs(env))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand, text)
        if isinstance(node.op, ast.USub):
            return lambda env: -inner(env)
        return inner
    if isinstance(node, ast.Constant) and type(node.value) is int:
        value = node.value
        return lambda env: env["const"](value)
    if isinstance(node, ast.Name) and node.id in ("n", "k"):
        name = node.id
        return lambda env: env[name]
    raise ExpressionError(f"unsupported syntax in expression {text!r}")


def parse_expression(text: str):
    """Compile ``text`` into ``(exact, vectorised)`` evaluators.

    ``exact(n, k)`` returns a Fraction; ``vectorised(n, ks, dtype)`` evaluates
    the same expression over an integer array of positions.
    """
    cleaned = text.replace("−", "-").strip()
    if not cleaned:
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(cleaned, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {text!r}") from exc
    fn = _compile(tree, text)

    def exact(n, k):
        return fn({"n": Fraction(n), "k": Fraction(k), "const": Fraction})

    def vectorised(n, ks, dtype):
        ks = np.asarray(ks).astype(dtype)
        return fn({"n": dtype(n), "k": ks, "const": dtype})

    return exact, vectorised


def triangle_from_spec(spec: dict) -> Triangle:
    """Build a triangle from a parsed spec dictionary."""
    if not isinstance(spec, dict) or "name" not in spec:
        raise ValueError("triangle spec must be an object with a 'name'")
    name = spec["name"]
    if name == "custom":
        try:
            left_src, right_src = spec["left"], spec["right"]
        except KeyError as exc:
            raise ValueError("custom triangle needs 'left' and 'right' expressions") from exc
        left, left_vec = parse_expression(left_src)
        right, right_vec = parse_expression(right_src)
        return Triangle(
            spec.get("label", f"custom[{left_src};{right_src}]"),
            left,
            right,
            left_vec=left_vec,
            right_vec=right_vec,
            float_ulps=lambda n: 8.0,
        )
    if name not in NAMES:
        raise ValueError(f"unknown triangle {name!r}; expected custom or one of {', '.join(NAMES)}")
    params = {key: as_fraction(str(val)) for key, val in (spec.get("params") or {}).items()}
    return catalog_triangle(name, **params)


def load_triangle(path) -> Triangle:
    return triangle_from_spec(json.loads(Path(path).read_text()))


def triangle_to_spec(tri: Triangle) -> dict:
    return {
        "name": tri.name,
        "params": {key: f"{v.numerator}/{v.denominator}" for key, v in tri.params},
    }
