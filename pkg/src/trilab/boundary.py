"""Convergence experiments for Martin kernels along boundary-approach paths."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .catalog import INF, BoundaryPoint, extreme_kernel, extreme_rule
from .core import KernelArray, Triangle, as_fraction, dimensions, martin_kernel
from .numerics import float_martin_window, kernel_profile

EXACT_LIMIT = 500
DEFAULT_TOL = 1e-6
DEFAULT_WINDOW = 3
SCALES = ("nu", "log", "power")


def _round_half_up(x) -> int:
    return math.floor(x + Fraction(1, 2)) if isinstance(x, Fraction) else math.floor(x + 0.5)


@dataclass(frozen=True)
class PathSpec:
    """A rule ``nu -> kappa(nu)``.

    ``kind="constant"`` keeps ``kappa = m`` (``m = inf`` follows the right
    edge ``kappa = nu``); ``kind="offset"`` keeps ``kappa = nu - m``;
    ``kind="scaled"`` uses ``s * c(nu)`` with ``c`` one of ``nu``, ``log``
    (natural) or ``power`` (``nu ** exponent``), rounded half-up unless
    ``rounding="floor"``.  The result is clamped to ``[0, nu]``.
    """

    kind: str
    m: int | float | None = None
    s: Fraction | None = None
    scale: str = "nu"
    exponent: Fraction | None = None
    rounding: str = "half-up"

    def __post_init__(self):
        if self.kind not in ("constant", "offset", "scaled"):
            raise ValueError(f"unknown path kind {self.kind!r}")
        if self.kind in ("constant", "offset") and self.m is None:
            raise ValueError(f"{self.kind} path needs m")
        if self.kind == "scaled":
            if self.s is None or self.s < 0:
                raise ValueError("scaled path needs s >= 0")
            if self.scale not in SCALES:
                raise ValueError(f"scale must be one of {SCALES}")
            if self.scale == "power" and self.exponent is None:
                raise ValueError("power scaling needs an exponent")
        if self.rounding not in ("half-up", "floor"):
            raise ValueError("rounding must be 'half-up' or 'floor'")

    def c(self, nu: int):
        if self.scale == "nu":
            return Fraction(nu)
        if self.scale == "log":
            return math.log(nu) if nu > 0 else 0.0
        return float(nu) ** float(self.exponent)

    def kappa(self, nu: int) -> int:
        if self.kind == "constant":
            raw = nu if self.m == INF else int(self.m)
        elif self.kind == "offset":
            raw = nu - int(self.m)
        else:
            x = self.s * self.c(nu) if self.scale == "nu" else float(self.s) * self.c(nu)
            raw = math.floor(x) if self.rounding == "floor" else _round_half_up(x)
        return max(0, min(nu, int(raw)))

    @property
    def label(self) -> str:
        if self.kind != "scaled":
            return f"{self.kind}:m={'inf' if self.m == INF else self.m}"
        c = {"nu": "nu", "log": "log", "power": f"pow:{self.exponent}"}[self.scale]
        tail = ",rounding=floor" if self.rounding == "floor" else ""
        return f"scaled:s={self.s},c={c}{tail}"


def parse_path(text: str) -> PathSpec:
    """``constant:m=1``, ``offset:m=2``, ``scaled:s=1/2,c=nu``, ``scaled:s=1,c=pow:1/2``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    fields = {}
    for part in filter(None, (p.strip() for p in rest.split(","))):
        key, _, value = part.partition("=")
        fields[key.strip()] = value.strip()
    if kind in ("constant", "offset"):
        raw = fields.get("m")
        if raw is None:
            raise ValueError(f"path {text!r} needs m=")
        return PathSpec(kind, m=INF if raw == "inf" else int(raw))
    if kind == "scaled":
        c = fields.get("c", "nu")
        exponent = None
        if c.startswith("pow"):
            if ":" not in c:
                raise ValueError(f"power scaling needs an exponent, e.g. c=pow:1/2 (got {text!r})")
            exponent = as_fraction(c.split(":", 1)[1])
            c = "power"
        return PathSpec(
            "scaled",
            s=as_fraction(fields.get("s", "1")),
            scale=c,
            exponent=exponent,
            rounding=fields.get("rounding", "half-up"),
        )
    raise ValueError(f"unknown path kind in {text!r}")


def martin_window(tri: Triangle, target, n_max: int, mode: str = "auto") -> KernelArray:
    """``V^{nu,kappa}`` restricted to levels ``<= n_max``.

    ``mode`` is ``exact``, ``float`` or ``auto`` (exact up to nu = 500).
    """
    nu = target[0]
    if mode == "auto":
        mode = "exact" if nu <= EXACT_LIMIT else "float"
    if mode == "exact":
        return martin_kernel(tri, target, depth=max(nu, n_max)).restrict(n_max)
    if mode == "float":
        return float_martin_window(tri, target, n_max)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class LimitVerdict:
    status: str  # converged | diverged | undecided
    limit: KernelArray | np.ndarray | None = None
    spread: float | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass
class ConvergenceTrace:
    path: PathSpec
    n_max: int
    samples: list[tuple[int, int, KernelArray]]  # (nu, kappa, window)
    verdict: LimitVerdict
    tolerance: float

    def rows(self):
        """``(nu, n, k, value)`` tuples for plotting."""
        for nu, _, V in self.samples:
            for n in range(V.depth + 1):
                for k in range(n + 1):
                    yield nu, n, k, V[n, k]


def _as_vector(sample) -> np.ndarray:
    if isinstance(sample, KernelArray):
        return sample.to_float()
    return np.atleast_1d(np.asarray([float(v) for v in np.ravel(sample)], dtype=float))


def estimate_limit(
    samples: Sequence, tol: float = DEFAULT_TOL, window_count: int = DEFAULT_WINDOW, bound=1.0
) -> LimitVerdict:
    """Classify a sequence of arrays.

    converged: the last ``window_count`` samples are pairwise within ``tol``
    (max norm) and the limit is the last one.  diverged: some coordinate moves
    strictly monotonically over that window and ends outside ``[0, bound]``.
    Otherwise undecided.
    """
    if len(samples) < window_count:
        raise ValueError(f"need at least {window_count} samples, got {len(samples)}")
    tail = [_as_vector(s) for s in samples[-window_count:]]
    spread = max(
        (float(np.max(np.abs(a - b))) for i, a in enumerate(tail) for b in tail[i + 1 :]),
        default=0.0,
    )
    if spread <= tol:
        return LimitVerdict("converged", samples[-1], spread)
    stacked = np.vstack(tail)
    steps = np.diff(stacked, axis=0)
    monotone = np.all(steps > 0, axis=0) | np.all(steps < 0, axis=0)
    last = stacked[-1]
    outside = (last < 0) | (last > np.asarray(bound, dtype=float))
    if np.any(monotone & outside):
        return LimitVerdict("diverged", None, spread)
    return LimitVerdict("undecided", None, spread)


def path_kernel_sequence(
    tri: Triangle,
    path: PathSpec,
    n_max: int,
    nu_list: Sequence[int],
    mode: str = "auto",
    tol: float = DEFAULT_TOL,
    window_count: int = DEFAULT_WINDOW,
    jobs: int = 1,
) -> ConvergenceTrace:
    """Martin kernels ``V^{nu, kappa(nu)}`` on the window ``n <= n_max``."""
    nu_list = list(nu_list)
    if any(b <= a for a, b in zip(nu_list, nu_list[1:])):
        raise ValueError("nu_list must be strictly increasing")
    if nu_list and nu_list[0] <= n_max:
        raise ValueError("every nu must exceed n_max")

    def one(nu):
        kappa = path.kappa(nu)
        return nu, kappa, martin_window(tri, (nu, kappa), n_max, mode)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            samples = list(pool.map(one, nu_list))
    else:
        samples = [one(nu) for nu in nu_list]
    count = min(window_count, len(samples))
    verdict = (
        estimate_limit([V for _, _, V in samples], tol, count)
        if count
        else LimitVerdict("undecided")
    )
    return ConvergenceTrace(path, n_max, samples, verdict, tol)


@dataclass
class DiscreteTrace:
    m: int
    levels: list[int]
    values: list[Fraction]

    @property
    def distances(self) -> list[Fraction]:
        return [1 - v for v in self.values]


class _CatalogFamily:
    """``(m, depth) -> extreme kernel`` with the column each extreme settles in."""

    def __init__(self, tri: Triangle, kind: str):
        self.tri = tri
        self.kind = kind
        # Stirling points count blocks, so the chain of V(m) settles at k = m - 1
        self.offset = 1 if kind == "stirling-m" else 0

    def __call__(self, m: int, depth: int) -> KernelArray:
        return extreme_kernel(self.tri, BoundaryPoint(self.kind, Fraction(m)), depth)

    def column(self, m: int) -> int:
        return m - self.offset


def catalog_family(tri: Triangle, kind: str) -> Callable[[int, int], KernelArray]:
    """``(m, depth) -> extreme kernel`` for a discrete catalog parametrisation."""
    return _CatalogFamily(tri, kind)


def discrete_boundary_check(
    tri: Triangle,
    family: Callable[[int, int], KernelArray],
    m: int,
    depth: int,
    column: int | None = None,
) -> DiscreteTrace:
    """``V[n,j](m) * D[n,j]`` for ``n = j..depth``, where ``j`` is the column
    the chain of ``V(m)`` settles in (``j = m`` unless the family says otherwise).
    The sequence tends to 1 for a discrete extreme."""
    if column is None:
        column = family.column(m) if hasattr(family, "column") else m
    if not 0 <= column <= depth:
        raise ValueError(f"column {column} outside the window of depth {depth}")
    V = family(m, depth)
    dims = dimensions(tri, depth)
    levels = list(range(column, depth + 1))
    return DiscreteTrace(m, levels, [V[n, column] * dims[n, column] for n in levels])


@dataclass
class MartingaleStats:
    node: tuple[int, int]
    target: float
    checkpoints: list[int]
    mean_deviation: list[float]
    max_deviation: list[float]
    trials: int
    seed: int | None
    final_states: list[int] = field(default_factory=list)


def _default_checkpoints(nu_max):
    points = [10**j for j in range(1, 8) if 10**j < nu_max]
    return points + [nu_max]


def martingale_experiment(
    tri: Triangle,
    point: BoundaryPoint,
    nu_max: int,
    trials: int,
    seed,
    checkpoints: Sequence[int] | None = None,
    node=(1, 0),
) -> MartingaleStats:
    """Distance between ``V^{nu, K_nu}`` and ``V`` at one node, for ``K`` drawn
    under ``P_V`` with ``V`` the catalog extreme at ``point``.

    ``K`` is simulated forwards from the root with the extreme's own step
    probabilities, so ``K_nu`` has law ``D[nu,.] V[nu,.]`` at every checkpoint.
    """
    if nu_max < 10:
        raise ValueError("nu_max must be at least 10")
    checkpoints = sorted(set(checkpoints or _default_checkpoints(nu_max)) | {nu_max})
    rule = extreme_rule(tri, point)
    target = float(rule.value(*node))
    rng = np.random.default_rng(seed)
    state = np.zeros(trials, dtype=np.int64)
    recorded = {}
    wanted = set(checkpoints)
    for n in range(nu_max):
        p_stay = np.broadcast_to(rule.stay_vec(n, state), state.shape)
        state = state + (rng.random(trials) >= p_stay)
        if n + 1 in wanted:
            recorded[n + 1] = state.copy()
    profile = kernel_profile(tri, node, checkpoints)
    means, maxes = [], []
    for nu in checkpoints:
        dev = np.abs(profile[nu][recorded[nu]] - target)
        means.append(float(dev.mean()))
        maxes.append(float(dev.max()))
    return MartingaleStats(
        tuple(node), target, checkpoints, means, maxes, trials, seed, recorded[nu_max].tolist()
    )


@dataclass
class PhaseRow:
    param: Fraction
    path: str
    verdict: str
    first_column: list[float]
    coordinate: float | None
    spread: float | None


def phase_transition_sweep(
    family: Callable[[Fraction], Triangle],
    params: Sequence,
    path: PathSpec | Callable[[Fraction], PathSpec],
    n_max: int,
    nu_list: Sequence[int],
    mode: str = "auto",
    tol: float = DEFAULT_TOL,
    window_count: int = DEFAULT_WINDOW,
    jobs: int = 1,
) -> list[PhaseRow]:
    """Run :func:`path_kernel_sequence` across a parameter family."""
    rows = []
    for raw in params:
        param = as_fraction(raw)
        tri = family(param)
        p = path(param) if callable(path) else path
        trace = path_kernel_sequence(tri, p, n_max, nu_list, mode, tol, window_count, jobs)
        last = trace.samples[-1][2]
        col = [float(v) for v in last.first_column()]
        coord = float(tri.left(0, 0)) * col[1] if len(col) > 1 else None
        rows.append(PhaseRow(param, p.label, trace.verdict.status, col, coord, trace.verdict.spread))
    return rows
