"""Named triangles and their extreme harmonic functions.

Supported names: ``pascal``, ``q-pascal`` (param ``q``), ``stirling`` (param
``alpha < 1``), ``stirling-inf`` and ``eulerian``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .core import (
    KernelArray,
    Triangle,
    Verdict,
    as_fraction,
    kernel_from_first_column,
)

INF = math.inf
NAMES = ("pascal", "q-pascal", "stirling", "stirling-inf", "eulerian")

KINDS = (
    "pascal-x",
    "qpascal-m",
    "stirling-m",
    "stirling-s",
    "eulerian-m",
    "trivial-0",
    "trivial-inf",
)


def _const(value):
    return lambda n, ks, dtype: np.full(len(ks), value, dtype=dtype)


def _ld(x: Fraction, dtype):
    return dtype(x.numerator) / dtype(x.denominator)


def catalog_triangle(name: str, **params) -> Triangle:
    """Build one of the named triangles with exact multiplicity rules."""
    params = {key: as_fraction(val) for key, val in params.items()}
    one = Fraction(1)
    if name == "pascal":
        return Triangle(
            "pascal",
            lambda n, k: one,
            lambda n, k: one,
            left_vec=_const(1),
            right_vec=_const(1),
            float_ulps=lambda n: 0.0,
        )
    if name == "q-pascal":
        q = params.get("q")
        if q is None:
            raise ValueError("q-pascal needs parameter q")
        if q <= 0:
            raise ValueError(f"q must be positive, got {q}")
        return Triangle(
            "q-pascal",
            lambda n, k: one,
            lambda n, k: q ** (n - k),
            params=(("q", q),),
            left_vec=_const(1),
            right_vec=lambda n, ks, dtype: _ld(q, dtype) ** (n - ks).astype(dtype),
            float_ulps=lambda n: n + 2.0,
        )
    if name == "stirling":
        alpha = params.get("alpha")
        if alpha is None:
            raise ValueError("stirling needs parameter alpha")
        if alpha >= 1:
            raise ValueError(f"alpha must be below 1, got {alpha}")
        return Triangle(
            "stirling",
            lambda n, k: (n + 1) - alpha * (k + 1),
            lambda n, k: one,
            params=(("alpha", alpha),),
            left_vec=lambda n, ks, dtype: (
                dtype(n + 1) * dtype(alpha.denominator) - dtype(alpha.numerator) * (ks + 1).astype(dtype)
            )
            / dtype(alpha.denominator),
            right_vec=_const(1),
            float_ulps=lambda n: 2.0,
        )
    if name == "stirling-inf":
        return Triangle(
            "stirling-inf",
            lambda n, k: Fraction(k + 1),
            lambda n, k: one,
            left_vec=lambda n, ks, dtype: (ks + 1).astype(dtype),
            right_vec=_const(1),
            float_ulps=lambda n: 0.0,
        )
    if name == "eulerian":
        return Triangle(
            "eulerian",
            lambda n, k: Fraction(k + 1),
            lambda n, k: Fraction(n - k + 1),
            left_vec=lambda n, ks, dtype: (ks + 1).astype(dtype),
            right_vec=lambda n, ks, dtype: (n - ks + 1).astype(dtype),
            float_ulps=lambda n: 0.0,
        )
    raise ValueError(f"unknown triangle {name!r}; expected one of {', '.join(NAMES)}")


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of the boundary parametrisation.  ``value`` is a Fraction or
    ``math.inf``; trivial points carry no value."""

    kind: str
    value: Fraction | float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown boundary point kind {self.kind!r}")
        v = self.value
        if self.kind == "pascal-x" and not (0 <= v <= 1):
            raise ValueError(f"x must lie in [0,1], got {v}")
        if self.kind == "stirling-s" and not (v >= 0):
            raise ValueError(f"s must be nonnegative, got {v}")
        if self.kind in ("qpascal-m", "stirling-m") and v != INF and (v != int(v) or v < 0):
            raise ValueError(f"m must be a nonnegative integer or inf, got {v}")
        if self.kind == "eulerian-m" and v != INF and (v != int(v) or v == 0):
            raise ValueError(f"m must be a nonzero integer or inf, got {v}")

    @property
    def label(self) -> str:
        if self.kind.startswith("trivial"):
            return self.kind
        sym = {"pascal-x": "x", "stirling-s": "s"}.get(self.kind, "m")
        return f"{sym}={'inf' if self.value == INF else self.value}"


def parse_value(text: str):
    text = text.strip()
    if text.lower() in ("inf", "infinity", "∞"):
        return INF
    return as_fraction(text)


def parse_point(tri: Triangle, text: str) -> BoundaryPoint:
    """Parse ``"x=1/3"``, ``"m=2"``, ``"m=inf"``, ``"s=5/2"``, ``"trivial-0"``."""
    text = text.strip()
    if text in ("trivial-0", "trivial-inf", "trivial-∞"):
        return BoundaryPoint(text.replace("∞", "inf"))
    if "=" not in text:
        raise ValueError(f"malformed boundary point {text!r}")
    sym, raw = text.split("=", 1)
    sym = sym.strip()
    value = parse_value(raw)
    kinds = {
        ("pascal", "x"): "pascal-x",
        ("q-pascal", "m"): "qpascal-m",
        ("q-pascal", "x"): "pascal-x",
        ("stirling", "m"): "stirling-m",
        ("stirling", "s"): "stirling-s",
        ("stirling-inf", "m"): "stirling-m",
        ("eulerian", "m"): "eulerian-m",
    }
    kind = kinds.get((tri.name, sym))
    if kind is None:
        raise ValueError(f"point {text!r} does not apply to triangle {tri.name}")
    return BoundaryPoint(kind, value)


def _falling(x, j):
    out = Fraction(1)
    for i in range(j):
        out *= x - i
    return out


def _rising(x, j):
    out = Fraction(1)
    for i in range(j):
        out *= x + i
    return out


def _qpoch(q, m):
    out = Fraction(1)
    for i in range(1, m + 1):
        out *= 1 - q**i
    return out


@dataclass(frozen=True)
class ExtremeRule:
    """Closed form of one extreme, evaluable at any node.

    ``value(n, k)`` is exact.  ``stay(n, k)`` is the forward probability
    ``l(n,k) V[n+1,k] / V[n,k]`` that the chain keeps ``k`` between levels
    ``n`` and ``n+1``; ``stay_vec`` is its float, array-valued twin.
    ``first_column_only`` marks families whose published form gives only
    ``V[., 0]``; their arrays are rebuilt by generalized differences.
    """

    tri: Triangle
    point: BoundaryPoint
    value: Callable[[int, int], Fraction]
    stay: Callable[[int, int], Fraction]
    stay_vec: Callable[[int, np.ndarray], np.ndarray]
    first_column_only: bool = False

    def coordinate(self) -> Fraction:
        return self.tri.left(0, 0) * self.value(1, 0)


def _trivial_rule(tri: Triangle, point: BoundaryPoint) -> ExtremeRule:
    if point.kind == "trivial-0":

        @lru_cache(maxsize=None)
        def d0(n):
            return Fraction(1) if n == 0 else d0(n - 1) * tri.left(n - 1, 0)

        value = lambda n, k: (1 / d0(n)) if k == 0 else Fraction(0)
        return ExtremeRule(
            tri, point, value, lambda n, k: Fraction(1), lambda n, ks: np.ones(len(ks))
        )

    @lru_cache(maxsize=None)
    def dd(n):
        return Fraction(1) if n == 0 else dd(n - 1) * tri.right(n - 1, n - 1)

    value = lambda n, k: (1 / dd(n)) if k == n else Fraction(0)
    return ExtremeRule(tri, point, value, lambda n, k: Fraction(0), lambda n, ks: np.zeros(len(ks)))


def extreme_rule(tri: Triangle, point: BoundaryPoint) -> ExtremeRule:
    """Closed-form extreme of a catalog triangle at a boundary point."""
    if point.kind.startswith("trivial"):
        return _trivial_rule(tri, point)
    name = tri.name
    params = tri.param_dict
    v = point.value

    if point.kind == "pascal-x" and (name == "pascal" or (name == "q-pascal" and params["q"] == 1)):
        x = v
        return ExtremeRule(
            tri,
            point,
            lambda n, k: x ** (n - k) * (1 - x) ** k,
            lambda n, k: x,
            lambda n, ks: np.full(len(ks), float(x)),
        )

    if point.kind == "qpascal-m" and name == "q-pascal":
        q = params["q"]
        if q == 1:
            raise ValueError("q = 1 is the Pascal triangle; use an x= point")
        if v == INF:
            kind = "trivial-inf" if q < 1 else "trivial-0"
            return ExtremeRule(tri, point, *_trivial_parts(tri, kind))
        m = int(v)
        if q < 1:
            return _qpascal_small(tri, point, q, m)
        return _qpascal_large(tri, point, q, m)

    if point.kind == "stirling-m" and name in ("stirling", "stirling-inf"):
        if name == "stirling":
            alpha = params["alpha"]
            if alpha >= 0:
                raise ValueError("discrete m-points exist only for alpha < 0")
            a = -alpha
        else:
            a = None
        if v == INF:
            return ExtremeRule(tri, point, *_trivial_parts(tri, "trivial-inf"), first_column_only=True)
        m = int(v)
        if m < 1:
            raise ValueError("Stirling extremes are indexed by m >= 1 (m = 1 is the trivial K = 0 chain)")
        if a is None:
            return ExtremeRule(
                tri,
                point,
                lambda n, k: _falling(Fraction(m - 1), k) / Fraction(m) ** n,
                lambda n, k: Fraction(k + 1, m),
                lambda n, ks: (ks + 1) / m,
                first_column_only=True,
            )
        base = m * a + 1
        return ExtremeRule(
            tri,
            point,
            lambda n, k: a**k * _falling(Fraction(m - 1), k) / _rising(base, n),
            lambda n, k: ((n + 1) + a * (k + 1)) / (base + n),
            lambda n, ks: ((n + 1) + float(a) * (ks + 1)) / (float(base) + n),
            first_column_only=True,
        )

    if point.kind == "stirling-s" and name == "stirling":
        if params["alpha"] != 0:
            raise ValueError("the continuous s-parametrisation is available for alpha = 0 only")
        if v == INF:
            return ExtremeRule(tri, point, *_trivial_parts(tri, "trivial-inf"), first_column_only=True)
        s = v
        return ExtremeRule(
            tri,
            point,
            lambda n, k: s**k / _rising(s + 1, n),
            lambda n, k: Fraction(n + 1) / (n + 1 + s),
            lambda n, ks: np.full(len(ks), (n + 1) / (n + 1 + float(s))),
            first_column_only=True,
        )

    if point.kind == "eulerian-m" and name == "eulerian":
        if v == INF:
            return ExtremeRule(
                tri,
                point,
                lambda n, k: 1 / Fraction(math.factorial(n + 1)),
                lambda n, k: Fraction(k + 1, n + 2),
                lambda n, ks: (ks + 1) / (n + 2),
            )
        m = int(v)

        def value(n, k):
            prod = Fraction(1)
            for i in range(-k, n - k + 1):
                prod *= 1 + Fraction(i, m)
            return prod / math.factorial(n + 1)

        return ExtremeRule(
            tri,
            point,
            value,
            lambda n, k: Fraction((k + 1) * (m + n + 1 - k), m * (n + 2)),
            lambda n, ks: (ks + 1) * (m + n + 1 - ks) / (m * (n + 2)),
        )

    raise ValueError(f"boundary point {point.label} ({point.kind}) does not apply to {name}")


def _trivial_parts(tri, kind):
    rule = _trivial_rule(tri, BoundaryPoint(kind))
    return rule.value, rule.stay, rule.stay_vec


def _qpascal_small(tri, point, q, m):
    def value(n, k):
        if k > m:
            return Fraction(0)
        return q ** ((m - k) * (n - k)) * _qpoch(q, m) / _qpoch(q, m - k)

    qf = float(q)
    return ExtremeRule(
        tri,
        point,
        value,
        lambda n, k: q ** (m - k),
        lambda n, ks: qf ** (m - ks).astype(float),
    )


def _qpascal_large(tri, point, q, m):
    # Transposition turns q-Pascal(q) into l = q^k, r = 1, which the gauge
    # V -> q^{k(n-k)} V maps onto q-Pascal(1/q).
    p = 1 / q
    small = _qpascal_small(catalog_triangle("q-pascal", q=p), BoundaryPoint("qpascal-m", m), p, m)

    def value(n, k):
        return small.value(n, n - k) / q ** (k * (n - k))

    def stay(n, k):
        j = n - k
        return 1 - p ** (m - j) if j < m else Fraction(0)

    pf = float(p)

    def stay_vec(n, ks):
        j = n - ks
        return np.where(j < m, 1 - pf ** np.maximum(m - j, 0).astype(float), 0.0)

    return ExtremeRule(tri, point, value, stay, stay_vec)


def extreme_kernel(tri: Triangle, point: BoundaryPoint, depth: int) -> KernelArray:
    """Exact extreme harmonic function on levels ``0..depth``.

    Families known only through their first column are completed by
    generalized differences, which must ACCEPT.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    rule = extreme_rule(tri, point)
    if rule.first_column_only and not point.kind.startswith("trivial"):
        col = [rule.value(n, 0) for n in range(depth + 1)]
        V, verdict = kernel_from_first_column(tri, col, depth)
        if verdict is not Verdict.ACCEPT:
            raise ValueError(f"{point.label} does not give a nonnegative solution on {tri.name}")
        return V
    return KernelArray.from_rule(rule.value, depth)


def boundary_coordinate(tri: Triangle, V: KernelArray):
    """Order-embedding coordinate ``l(0,0) V[1,0]`` in ``[0, 1]``."""
    return tri.left(0, 0) * V[1, 0]
