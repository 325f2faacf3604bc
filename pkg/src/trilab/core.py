"""Exact engine for weighted Pascal-type triangles.

A triangle is the graph on nodes ``(n, k)``, ``0 <= k <= n``, where every node
has a left edge to ``(n+1, k)`` with multiplicity ``l(n, k)`` and a right edge
to ``(n+1, k+1)`` with multiplicity ``r(n, k)``.  Everything in this module is
computed with :class:`fractions.Fraction`; nothing is rounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

Rule = Callable[[int, int], Fraction]
VecRule = Callable[[int, np.ndarray, type], np.ndarray]

# Levels probed for positivity when a triangle is constructed.
PROBE_DEPTH = 24


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings; floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip().replace("−", "-"))
    if isinstance(value, (np.integer,)):
        return Fraction(int(value))
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


@dataclass(frozen=True, order=True)
class Node:
    n: int
    k: int

    def __post_init__(self):
        if not (0 <= self.k <= self.n):
            raise ValueError(f"node ({self.n},{self.k}) is outside the triangle")

    def __iter__(self):
        return iter((self.n, self.k))


def as_node(value) -> Node:
    if isinstance(value, Node):
        return value
    n, k = value
    return Node(int(n), int(k))


@dataclass(frozen=True, eq=False)
class Triangle:
    """Multiplicity rules ``(n, k) -> l(n, k), r(n, k)``.

    Rules are evaluated lazily.  ``left_vec``/``right_vec`` are optional
    vectorised versions ``(n, ks, dtype) -> array`` used by the floating-point
    sweeps; ``float_ulps(n)`` bounds their rounding error at level ``n`` in
    units of roundoff.
    """

    name: str
    left_rule: Rule
    right_rule: Rule
    params: tuple[tuple[str, Fraction], ...] = ()
    left_vec: VecRule | None = field(default=None, repr=False)
    right_vec: VecRule | None = field(default=None, repr=False)
    float_ulps: Callable[[int], float] = field(default=lambda n: 1.0, repr=False)

    def __post_init__(self):
        for n in range(PROBE_DEPTH + 1):
            for k in range(n + 1):
                self.left(n, k)
                self.right(n, k)

    def left(self, n: int, k: int) -> Fraction:
        return self._checked(self.left_rule, "left", n, k)

    def right(self, n: int, k: int) -> Fraction:
        return self._checked(self.right_rule, "right", n, k)

    def _checked(self, rule, side, n, k):
        value = as_fraction(rule(n, k))
        if value <= 0:
            raise ValueError(
                f"{self.name}: {side} multiplicity at ({n},{k}) is {value}, must be positive"
            )
        return value

    @property
    def param_dict(self) -> dict[str, Fraction]:
        return dict(self.params)

    def left_row(self, n: int, dtype=np.float64, lo: int = 0, hi: int | None = None) -> np.ndarray:
        """Float multiplicities ``l(n, lo..hi)``."""
        return self._row(self.left_vec, self.left, n, dtype, lo, hi)

    def right_row(self, n: int, dtype=np.float64, lo: int = 0, hi: int | None = None) -> np.ndarray:
        return self._row(self.right_vec, self.right, n, dtype, lo, hi)

    def _row(self, vec, rule, n, dtype, lo, hi):
        hi = n if hi is None else hi
        ks = np.arange(lo, hi + 1)
        if vec is not None:
            return np.broadcast_to(np.asarray(vec(n, ks, dtype), dtype=dtype), ks.shape).copy()
        return _row_from_rule(rule, n, ks, dtype)

    @classmethod
    def from_rows(cls, name, left_rows, right_rows, params=()):
        """Triangle defined by explicit rows (used for random test triangles)."""
        left_rows = [tuple(as_fraction(v) for v in row) for row in left_rows]
        right_rows = [tuple(as_fraction(v) for v in row) for row in right_rows]
        depth = min(len(left_rows), len(right_rows))

        def lookup(rows):
            def rule(n, k):
                if n >= depth:
                    return Fraction(1)
                return rows[n][k]

            return rule

        return cls(name, lookup(left_rows), lookup(right_rows), tuple(params))


def _row_from_rule(rule, n, ks, dtype):
    values = [rule(n, int(k)) for k in ks]
    if np.dtype(dtype) == np.dtype(np.longdouble):
        return np.array([dtype(v.numerator) / dtype(v.denominator) for v in values], dtype=dtype)
    return np.array([float(v) for v in values], dtype=dtype)


def transpose(tri: Triangle) -> Triangle:
    """Mirror the triangle: ``l'(n,k) = r(n,n-k)`` and ``r'(n,k) = l(n,n-k)``."""
    left_vec = right_vec = None
    if tri.right_vec is not None:
        left_vec = lambda n, ks, dtype: tri.right_vec(n, n - ks, dtype)
    if tri.left_vec is not None:
        right_vec = lambda n, ks, dtype: tri.left_vec(n, n - ks, dtype)
    return Triangle(
        name=f"transpose({tri.name})",
        left_rule=lambda n, k: tri.right(n, n - k),
        right_rule=lambda n, k: tri.left(n, n - k),
        params=tri.params,
        left_vec=left_vec,
        right_vec=right_vec,
        float_ulps=tri.float_ulps,
    )


@dataclass(frozen=True)
class DimensionTable:
    """Path-weight sums.  ``base`` is the root ``(0,0)`` for plain dimensions
    and the target ``(nu, kappa)`` for extended dimensions."""

    base: Node
    depth: int
    rows: tuple[tuple[Fraction, ...], ...]

    def __getitem__(self, nk):
        n, k = nk
        if n < 0 or n > self.depth:
            raise IndexError(f"level {n} outside table of depth {self.depth}")
        if k < 0 or k > n:
            return Fraction(0)
        return self.rows[n][k]

    def row(self, n: int) -> tuple[Fraction, ...]:
        return self.rows[n]


@dataclass(frozen=True)
class KernelArray:
    """A candidate harmonic function ``V[n, k]`` on levels ``0..depth``.

    ``exact`` is False for arrays produced by the floating sweeps; those carry
    an ``error_bound`` on the relative error of each entry.
    """

    depth: int
    rows: tuple[tuple, ...]
    exact: bool = True
    error_bound: float | None = None

    def __getitem__(self, nk):
        n, k = nk
        if n < 0 or n > self.depth:
            raise IndexError(f"level {n} outside kernel of depth {self.depth}")
        if k < 0 or k > n:
            return Fraction(0) if self.exact else 0.0
        return self.rows[n][k]

    def row(self, n: int):
        return self.rows[n]

    def column(self, k: int) -> list:
        return [self.rows[n][k] for n in range(k, self.depth + 1)]

    def first_column(self) -> list:
        return self.column(0)

    def restrict(self, depth: int) -> "KernelArray":
        if depth > self.depth:
            raise ValueError("cannot restrict to a deeper window")
        return KernelArray(depth, self.rows[: depth + 1], self.exact, self.error_bound)

    def to_float(self) -> np.ndarray:
        """Flattened row-major float vector of the window."""
        return np.array([float(v) for row in self.rows for v in row])

    @classmethod
    def from_rule(cls, rule: Rule, depth: int) -> "KernelArray":
        return cls(depth, tuple(tuple(rule(n, k) for k in range(n + 1)) for n in range(depth + 1)))


def dimensions(tri: Triangle, depth: int) -> DimensionTable:
    """Forward recursion ``D[n,k] = r(n-1,k-1) D[n-1,k-1] + l(n-1,k) D[n-1,k]``."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    rows = [(Fraction(1),)]
    for n in range(1, depth + 1):
        prev = rows[-1]
        row = []
        for k in range(n + 1):
            value = Fraction(0)
            if k >= 1:
                value += tri.right(n - 1, k - 1) * prev[k - 1]
            if k <= n - 1:
                value += tri.left(n - 1, k) * prev[k]
            row.append(value)
        rows.append(tuple(row))
    return DimensionTable(Node(0, 0), depth, tuple(rows))


def _backward_sweep(tri: Triangle, target: Node) -> list[list[Fraction]]:
    nu, kappa = target
    rows: list[list[Fraction]] = [None] * (nu + 1)
    top = [Fraction(0)] * (nu + 1)
    top[kappa] = Fraction(1)
    rows[nu] = top
    for n in range(nu - 1, -1, -1):
        above = rows[n + 1]
        lo = max(0, kappa - (nu - n))
        hi = min(n, kappa)
        row = [Fraction(0)] * (n + 1)
        for k in range(lo, hi + 1):
            row[k] = tri.left(n, k) * above[k] + tri.right(n, k) * above[k + 1]
        rows[n] = row
    return rows


def extended_dimensions(tri: Triangle, target) -> DimensionTable:
    """``D^{nu,kappa}[n,k]``: total weight of paths from ``(n,k)`` to the target."""
    target = as_node(target)
    rows = _backward_sweep(tri, target)
    return DimensionTable(target, target.n, tuple(tuple(r) for r in rows))


def martin_kernel(tri: Triangle, target, depth: int | None = None) -> KernelArray:
    """``V^{nu,kappa} = D^{nu,kappa}[n,k] / D[nu,kappa]``, zero above level nu."""
    target = as_node(target)
    depth = target.n if depth is None else depth
    rows = _backward_sweep(tri, target)
    total = rows[0][0]
    if total <= 0:
        raise ArithmeticError(f"dimension of {target} vanished")
    out = [tuple(v / total for v in row) for row in rows[: depth + 1]]
    for n in range(len(out), depth + 1):
        out.append(tuple(Fraction(0) for _ in range(n + 1)))
    return KernelArray(depth, tuple(out))


@dataclass
class HarmonicReport:
    depth: int
    residuals: list[tuple[Node, Fraction]]
    negatives: list[tuple[Node, Fraction]]
    normalized: bool

    @property
    def ok(self) -> bool:
        return self.normalized and not self.residuals and not self.negatives

    @property
    def violated_nodes(self) -> set[Node]:
        return {node for node, _ in self.residuals}


def verify_harmonic(tri: Triangle, V: KernelArray, depth: int | None = None) -> HarmonicReport:
    """Check ``V[n,k] = l V[n+1,k] + r V[n+1,k+1]`` for ``n < depth``, positivity
    and ``V[0,0] = 1``.  Violations are collected, never raised."""
    depth = V.depth if depth is None else depth
    if depth > V.depth:
        raise ValueError(f"kernel has depth {V.depth}, asked to verify to {depth}")
    residuals = []
    for n in range(depth):
        for k in range(n + 1):
            res = V[n, k] - tri.left(n, k) * V[n + 1, k] - tri.right(n, k) * V[n + 1, k + 1]
            if res != 0:
                residuals.append((Node(n, k), res))
    negatives = [
        (Node(n, k), V[n, k]) for n in range(depth + 1) for k in range(n + 1) if V[n, k] < 0
    ]
    return HarmonicReport(depth, residuals, negatives, V[0, 0] == 1)


def generalized_difference(tri: Triangle, column: Sequence, k: int) -> list[Fraction]:
    """Produce column ``k`` from column ``k-1``.

    ``column[i]`` is ``V[k-1+i, k-1]``; the result's ``i``-th entry is
    ``V[k+i, k] = (V[k-1+i, k-1] - l(k-1+i, k-1) V[k+i, k-1]) / r(k-1+i, k-1)``,
    i.e. the harmonic recursion at the parent node solved for the right child.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    col = [as_fraction(v) if not isinstance(v, Fraction) else v for v in column]
    out = []
    for i in range(len(col) - 1):
        n = k - 1 + i
        out.append((col[i] - tri.left(n, k - 1) * col[i + 1]) / tri.right(n, k - 1))
    return out


class Verdict(str, Enum):
    ACCEPT = "ACCEPT"
    REJECT = "REJECT"


def kernel_from_first_column(tri: Triangle, first_col: Sequence, depth: int | None = None):
    """Rebuild the whole array from ``V[., 0]`` by iterated generalized differences.

    Returns ``(kernel, verdict)``; the verdict is ACCEPT iff every entry on the
    window is nonnegative.  The kernel satisfies the recursion by construction.
    """
    col = [as_fraction(v) for v in first_col]
    if depth is None:
        depth = len(col) - 1
    if len(col) != depth + 1:
        raise ValueError(f"first column has {len(col)} entries, expected depth+1 = {depth + 1}")
    if not col or col[0] != 1:
        raise ValueError("first column must start with 1")
    columns = [col]
    for k in range(1, depth + 1):
        columns.append(generalized_difference(tri, columns[-1], k))
    rows = tuple(tuple(columns[k][n - k] for k in range(n + 1)) for n in range(depth + 1))
    V = KernelArray(depth, rows)
    ok = all(v >= 0 for row in rows for v in row)
    return V, Verdict.ACCEPT if ok else Verdict.REJECT


def first_negative(V: KernelArray) -> Node | None:
    for n in range(V.depth + 1):
        for k in range(n + 1):
            if V[n, k] < 0:
                return Node(n, k)
    return None


def level_mass(dims: DimensionTable, V: KernelArray, n: int):
    """``sum_k D[n,k] V[n,k]``; equals 1 on every level for harmonic ``V``."""
    return sum(dims[n, k] * V[n, k] for k in range(n + 1))

