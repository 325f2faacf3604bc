"""The chain K_n read backwards from level nu down to the root."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    DimensionTable,
    KernelArray,
    Node,
    Triangle,
    as_node,
    dimensions,
    martin_kernel,
    verify_harmonic,
)

# Draws compare a 63-bit uniform integer against floor(p * 2**63).
_DRAW_BITS = 63


@dataclass(frozen=True)
class LevelLaw:
    n: int
    probs: tuple

    def __post_init__(self):
        if len(self.probs) != self.n + 1:
            raise ValueError(f"law at level {self.n} needs {self.n + 1} entries")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be nonnegative")
        total = sum(self.probs)
        exact = all(isinstance(p, (int, Fraction)) for p in self.probs)
        if (exact and total != 1) or (not exact and abs(total - 1) > 1e-9):
            raise ValueError(f"probabilities sum to {total}, not 1")

    def tails(self) -> list:
        out, acc = [], 0
        for p in reversed(self.probs):
            acc += p
            out.append(acc)
        return out[::-1]


@dataclass(frozen=True)
class Trajectory:
    start: Node
    states: tuple[int, ...]  # K_nu, K_{nu-1}, ..., K_0

    def at(self, n: int) -> int:
        return self.states[self.start.n - n]


def _check_dims(dims: DimensionTable, n: int):
    if dims.base != Node(0, 0):
        raise ValueError("expected a dimension table rooted at (0,0)")
    if dims.depth < n:
        raise ValueError(f"dimension table of depth {dims.depth} does not cover level {n}")


def backward_transition(tri: Triangle, dims: DimensionTable, n: int, k: int) -> LevelLaw:
    """Law of ``K_{n-1}`` given ``K_n = k``: at most two atoms, ``k`` and ``k-1``."""
    if n <= 0:
        raise ValueError("backward transitions start from level n >= 1")
    node = Node(n, k)
    _check_dims(dims, n)
    probs = [Fraction(0)] * n
    total = dims[node.n, node.k]
    if k <= n - 1:
        probs[k] = dims[n - 1, k] * tri.left(n - 1, k) / total
    if k >= 1:
        probs[k - 1] = dims[n - 1, k - 1] * tri.right(n - 1, k - 1) / total
    return LevelLaw(n - 1, tuple(probs))


def marginal_law(tri: Triangle, dims: DimensionTable, V: KernelArray, n: int) -> LevelLaw:
    """``P_V(K_n = k) = D[n,k] V[n,k]``."""
    _check_dims(dims, n)
    report = verify_harmonic(tri, V, depth=n)
    if not report.ok:
        raise ValueError(
            f"V is not a normalized nonnegative harmonic function up to level {n}: "
            f"{len(report.residuals)} residuals, {len(report.negatives)} negative entries"
        )
    return LevelLaw(n, tuple(dims[n, k] * V[n, k] for k in range(n + 1)))


def conditional_law(tri: Triangle, dims: DimensionTable, start, n: int) -> LevelLaw:
    """Law of ``K_n`` given ``K_nu = kappa``, by composing backward transitions."""
    start = as_node(start)
    _check_dims(dims, start.n)
    law = [Fraction(0)] * (start.n + 1)
    law[start.k] = Fraction(1)
    for level in range(start.n, n, -1):
        nxt = [Fraction(0)] * level
        for k, mass in enumerate(law):
            if mass:
                step = backward_transition(tri, dims, level, k)
                for j in (k - 1, k):
                    if 0 <= j < level:
                        nxt[j] += mass * step.probs[j]
        law = nxt
    return LevelLaw(n, tuple(law))


def _stay_thresholds(tri, dims, start):
    """Per level, integer thresholds for keeping k over the cone below ``start``."""
    nu, kappa = start
    scale = 1 << _DRAW_BITS
    table = {}
    for n in range(nu, 0, -1):
        lo = max(0, kappa - (nu - n))
        hi = min(n, kappa)
        row = np.zeros(hi + 1, dtype=np.uint64)
        for k in range(lo, hi + 1):
            if k == n:
                continue
            p = dims[n - 1, k] * tri.left(n - 1, k) / dims[n, k]
            row[k] = (p.numerator * scale) // p.denominator
        table[n] = row
    return table


def sample_backward_paths(
    tri: Triangle, dims: DimensionTable, start, size: int, seed
) -> np.ndarray:
    """``size`` independent trajectories from ``start``; row ``i`` holds
    ``K_nu, ..., K_0`` of trajectory ``i``."""
    start = as_node(start)
    _check_dims(dims, start.n)
    rng = np.random.default_rng(seed)
    thresholds = _stay_thresholds(tri, dims, start)
    out = np.empty((size, start.n + 1), dtype=np.int64)
    state = np.full(size, start.k, dtype=np.int64)
    out[:, 0] = state
    for step, n in enumerate(range(start.n, 0, -1), start=1):
        draws = rng.bit_generator.random_raw(size) >> np.uint64(64 - _DRAW_BITS)
        stay = draws < thresholds[n][state]
        state = state - (~stay).astype(np.int64)
        out[:, step] = state
    return out


def sample_backward_path(tri: Triangle, dims: DimensionTable, start, seed) -> Trajectory:
    start = as_node(start)
    states = sample_backward_paths(tri, dims, start, 1, seed)[0]
    return Trajectory(start, tuple(int(s) for s in states))


class Order(str, Enum):
    LESS = "strictly-less"
    EQUAL = "equal"
    GREATER = "strictly-greater"
    INCOMPARABLE = "incomparable"


def stochastic_leq(a: LevelLaw, b: LevelLaw) -> Order:
    """Compare laws through their tails ``P(K >= t)``."""
    if a.n != b.n:
        raise ValueError(f"laws live on different levels ({a.n} vs {b.n})")
    ta, tb = a.tails(), b.tails()
    le = all(x <= y for x, y in zip(ta, tb))
    ge = all(x >= y for x, y in zip(ta, tb))
    if le and ge:
        return Order.EQUAL
    if le:
        return Order.LESS
    if ge:
        return Order.GREATER
    return Order.INCOMPARABLE


@dataclass
class MonotoneReport:
    nu: int
    n: int
    values: list[Fraction]
    violations: list[int] = field(default_factory=list)
    dominance: list[Order] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _monotone_report(tri, nu, n, kernels, dims):
    values = [V[n, 0] for V in kernels]
    violations = [kappa for kappa in range(nu) if values[kappa + 1] > values[kappa]]
    laws = [LevelLaw(n, tuple(dims[n, k] * V[n, k] for k in range(n + 1))) for V in kernels]
    dominance = [stochastic_leq(laws[kappa], laws[kappa + 1]) for kappa in range(nu)]
    return MonotoneReport(nu, n, values, violations, dominance)


def check_monotone_in_kappa(tri: Triangle, nu: int, n: int) -> MonotoneReport:
    """``kappa -> V^{nu,kappa}[n,0]`` should be nonincreasing for every triangle.

    ``dominance`` additionally records how the laws of ``K_n`` given
    ``K_nu = kappa`` and ``kappa+1`` compare; that is reported, not asserted.
    """
    if not 0 <= n < nu:
        raise ValueError("need 0 <= n < nu")
    return monotone_reports(tri, nu, levels=[n])[0]


def monotone_reports(tri: Triangle, nu: int, levels: Sequence[int] | None = None) -> list[MonotoneReport]:
    """:func:`check_monotone_in_kappa` for several levels, sharing the kernels."""
    levels = range(nu) if levels is None else levels
    kernels = [martin_kernel(tri, (nu, kappa)) for kappa in range(nu + 1)]
    dims = dimensions(tri, nu)
    return [_monotone_report(tri, nu, n, kernels, dims) for n in levels]
