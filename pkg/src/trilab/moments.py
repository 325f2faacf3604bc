"""Mixtures of extremes: synthesis, inversion and moment-sequence checks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .catalog import INF, BoundaryPoint, catalog_triangle, extreme_rule
from .core import (
    KernelArray,
    Node,
    Triangle,
    Verdict,
    as_fraction,
    first_negative,
    kernel_from_first_column,
)

CONTINUOUS_KINDS = ("pascal-x", "stirling-s")


def synthesize_mixture(kernels: Sequence[KernelArray], weights: Sequence) -> KernelArray:
    """Exact convex combination of kernels sharing one depth."""
    if not kernels:
        raise ValueError("need at least one kernel")
    if len(kernels) != len(weights):
        raise ValueError("one weight per kernel")
    weights = [as_fraction(w) for w in weights]
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    if sum(weights) != 1:
        raise ValueError(f"weights sum to {sum(weights)}, not 1")
    depth = kernels[0].depth
    if any(V.depth != depth for V in kernels):
        raise ValueError("kernels must share the same depth")
    rows = tuple(
        tuple(sum(w * V[n, k] for w, V in zip(weights, kernels)) for k in range(n + 1))
        for n in range(depth + 1)
    )
    return KernelArray(depth, rows)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{p >= 0, sum p = 1}`` (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1
    idx = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0)


def gradient_mapping_norm(A: np.ndarray, b: np.ndarray, p: np.ndarray) -> float:
    lip = max(np.linalg.norm(A, 2) ** 2, 1e-300)
    g = A.T @ (A @ p - b)
    return float(np.linalg.norm(lip * (p - project_simplex(p - g / lip))))


def _constrained_lstsq(A, b):
    """Minimise ``||A z - b||`` subject to ``sum z = 1``."""
    if A.shape[1] == 1:
        return np.ones(1)
    last = A[:, -1]
    y, *_ = np.linalg.lstsq(A[:, :-1] - last[:, None], b - last, rcond=None)
    return np.append(y, 1 - y.sum())


def simplex_lstsq_active_set(A, b, max_iter: int = 10_000):
    """Primal active-set method for least squares on the probability simplex.

    Starts from the uniform vector; returns ``(p, iterations)``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m = A.shape[1]
    p = np.full(m, 1.0 / m)
    free = np.ones(m, dtype=bool)
    kkt_tol = 1e-13 * max(1.0, np.linalg.norm(A, 2) * (np.linalg.norm(b) + np.linalg.norm(A, 2)))
    for it in range(1, max_iter + 1):
        z = np.zeros(m)
        z[free] = _constrained_lstsq(A[:, free], b)
        if np.all(z[free] >= 0):
            p = z
            g = A.T @ (A @ p - b)
            level = g[free].mean()
            fixed = np.flatnonzero(~free)
            if fixed.size == 0:
                return p, it
            j = fixed[np.argmin(g[fixed])]
            if g[j] >= level - kkt_tol:
                return p, it
            free[j] = True
            continue
        blocking = free & (z < 0)
        alpha = np.min(p[blocking] / (p[blocking] - z[blocking]))
        p = p + alpha * (z - p)
        hit = free & (p <= 1e-15)
        hit[np.flatnonzero(blocking)[np.argmin(p[blocking])]] = True
        free &= ~hit
        p[~free] = 0
        p /= p.sum()
    return p, max_iter


def simplex_lstsq_projected_gradient(A, b, tol: float = 1e-10, max_iter: int = 100_000):
    """Projected gradient with step ``1/L`` from the uniform vector."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m = A.shape[1]
    p = np.full(m, 1.0 / m)
    lip = max(np.linalg.norm(A, 2) ** 2, 1e-300)
    for it in range(1, max_iter + 1):
        g = A.T @ (A @ p - b)
        nxt = project_simplex(p - g / lip)
        if lip * np.linalg.norm(nxt - p) < tol:
            return nxt, it
        p = nxt
    return p, max_iter


@dataclass
class MixingMeasure:
    atoms: list[tuple[BoundaryPoint, float]]
    residual: float
    representable: bool
    note: str
    depth: int
    method: str
    iterations: int
    gradient_norm: float
    condition: float

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def mean(self) -> float:
        """Mean of the atom values (finite values only)."""
        return float(sum(float(pt.value) * w for pt, w in self.atoms if pt.value not in (None, INF)))


def atom_matrix(tri: Triangle, atoms: Sequence[BoundaryPoint], depth: int) -> np.ndarray:
    """Column ``j`` is ``V[., 0]`` of the extreme at ``atoms[j]``."""
    cols = []
    for point in atoms:
        rule = extreme_rule(tri, point)
        cols.append([float(rule.value(n, 0)) for n in range(depth + 1)])
    return np.array(cols, dtype=float).T


def _granularity(atoms):
    kinds = {pt.kind for pt in atoms}
    if kinds & set(CONTINUOUS_KINDS):
        values = sorted(float(pt.value) for pt in atoms if pt.kind in CONTINUOUS_KINDS and pt.value != INF)
        gaps = np.diff(values)
        h = float(gaps.max()) if gaps.size else float("nan")
        return f"grid discretisation of a continuous boundary; coarsest spacing {h:.6g}"
    return "exact atoms"


def invert_mixture(
    tri: Triangle,
    first_col: Sequence,
    atoms: Sequence[BoundaryPoint],
    depth: int | None = None,
    tol: float = 1e-8,
    method: str = "active-set",
) -> MixingMeasure:
    """Weights ``p >= 0``, ``sum p = 1`` minimising ``||A p - first_col||``."""
    if not atoms:
        raise ValueError("atom set is empty")
    col = [as_fraction(v) if not isinstance(v, float) else v for v in first_col]
    depth = len(col) - 1 if depth is None else depth
    if len(col) < depth + 1:
        raise ValueError(f"first column has {len(col)} entries, need {depth + 1}")
    col = col[: depth + 1]
    if col[0] != 1:
        raise ValueError("first column must start with 1")
    if depth < 2 * len(atoms):
        warnings.warn(
            f"depth {depth} is below twice the atom count {len(atoms)}; "
            "the moment matrix is likely ill-conditioned",
            stacklevel=2,
        )
    A = atom_matrix(tri, atoms, depth)
    b = np.array([float(v) for v in col])
    if method == "active-set":
        p, its = simplex_lstsq_active_set(A, b)
    elif method == "projected-gradient":
        p, its = simplex_lstsq_projected_gradient(A, b)
    else:
        raise ValueError(f"unknown method {method!r}")
    residual = float(np.linalg.norm(A @ p - b))
    return MixingMeasure(
        atoms=[(pt, float(w)) for pt, w in zip(atoms, p)],
        residual=residual,
        representable=residual <= tol,
        note=_granularity(atoms),
        depth=depth,
        method=method,
        iterations=its,
        gradient_norm=gradient_mapping_norm(A, b, p),
        condition=float(np.linalg.cond(A)),
    )


@dataclass
class CMReport:
    verdict: Verdict
    depth: int
    first_negative: Node | None
    kernel: KernelArray = field(repr=False)
    cross_check: MixingMeasure | None = None

    @property
    def label(self) -> str:
        if self.verdict is Verdict.ACCEPT:
            return f"consistent up to depth {self.depth}"
        node = self.first_negative
        return f"rejected: negative entry at ({node.n},{node.k})"


def cm_check(tri: Triangle, first_col: Sequence, depth: int | None = None) -> CMReport:
    """Generalized complete monotonicity of ``first_col`` on a finite window."""
    V, verdict = kernel_from_first_column(tri, first_col, depth)
    return CMReport(verdict, V.depth, first_negative(V), V)


def hausdorff_check(first_col: Sequence) -> CMReport:
    """Classical iterated differences (the Pascal case of :func:`cm_check`)."""
    return cm_check(catalog_triangle("pascal"), first_col)


def qpascal_cm_check(q, first_col: Sequence, depth: int | None = None) -> CMReport:
    """q-Pascal membership test; ACCEPTed sequences are also inverted over the
    atoms ``q^m``, ``m = 0..depth`` and ``m = inf`` as a reported cross-check."""
    q = as_fraction(q)
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    tri = catalog_triangle("q-pascal", q=q)
    report = cm_check(tri, first_col, depth)
    if report.verdict is Verdict.ACCEPT and report.depth >= 1:
        atoms = [BoundaryPoint("qpascal-m", Fraction(m)) for m in range(report.depth + 1)]
        atoms.append(BoundaryPoint("qpascal-m", INF))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report.cross_check = invert_mixture(tri, first_col[: report.depth + 1], atoms, report.depth)
    return report
