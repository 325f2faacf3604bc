import math
from fractions import Fraction

import numpy as np
import pytest

from trilab.boundary import (
    PathSpec,
    catalog_family,
    discrete_boundary_check,
    estimate_limit,
    martin_window,
    martingale_experiment,
    parse_path,
    path_kernel_sequence,
    phase_transition_sweep,
)
from trilab.catalog import INF, BoundaryPoint, catalog_triangle, extreme_kernel
from trilab.core import KernelArray

PASCAL = catalog_triangle("pascal")
QHALF = catalog_triangle("q-pascal", q=Fraction(1, 2))


def test_parse_path_and_kappa():
    p = parse_path("scaled:s=1/2,c=nu")
    assert p == PathSpec("scaled", s=Fraction(1, 2))
    assert [p.kappa(nu) for nu in (3, 5, 10)] == [2, 3, 5]  # half-up rounding
    floor = parse_path("scaled:s=1/2,c=nu,rounding=floor")
    assert [floor.kappa(nu) for nu in (3, 5, 10)] == [1, 2, 5]
    assert parse_path("constant:m=2").kappa(1) == 1  # clamped to nu
    assert parse_path("constant:m=inf").kappa(9) == 9
    assert parse_path("offset:m=2").kappa(9) == 7
    log = parse_path("scaled:s=1,c=log")
    assert log.kappa(100) == round(math.log(100))
    power = parse_path("scaled:s=2,c=pow:1/2")
    assert power.kappa(100) == 20
    for text in ("spiral:m=1", "constant:", "scaled:s=1,c=pow"):
        with pytest.raises(ValueError):
            parse_path(text)
    assert parse_path(p.label) == p


def test_estimate_limit_examples():
    assert estimate_limit([np.array([0.3])] * 4).status == "converged"
    harmonic = [np.array([1 / j]) for j in range(1, 6)]
    assert estimate_limit(harmonic, tol=1e-6).status == "undecided"
    escaping = [np.array([0.9]), np.array([1.1]), np.array([1.3])]
    assert estimate_limit(escaping).status == "diverged"
    with pytest.raises(ValueError):
        estimate_limit([np.array([1.0])], window_count=3)


def test_pascal_parity_artifacts_converge():
    # C(nu-1,kappa)/C(nu,kappa) = 1 - kappa/nu jitters by 1/(2 nu) around 1/2
    samples = []
    for nu in (2001, 2002, 2003, 2004):
        kappa = nu // 2
        samples.append(np.array([1 - kappa / nu]))
    assert estimate_limit(samples, tol=1e-3).status == "converged"


def test_pascal_scaled_path_example():
    trace = path_kernel_sequence(PASCAL, parse_path("scaled:s=1/2,c=nu"), 3, [100, 200, 400, 800], tol=1e-2)
    values = [float(V[1, 0]) for _, _, V in trace.samples]
    assert values == [1 - kappa / nu for nu, kappa, _ in trace.samples]
    assert trace.verdict.status == "converged"
    limit = extreme_kernel(PASCAL, BoundaryPoint("pascal-x", Fraction(1, 2)), 3)
    assert np.max(np.abs(trace.samples[-1][2].to_float() - limit.to_float())) < 2e-3
    assert [nu for nu, _, _ in trace.samples] == [100, 200, 400, 800]


def test_qpascal_constant_path_limit():
    trace = path_kernel_sequence(QHALF, parse_path("constant:m=1"), 4, [60, 80, 100])
    assert trace.verdict.status == "converged"
    last = trace.samples[-1][2]
    assert all(abs(float(last[n, 0]) - 2.0**-n) < 1e-12 for n in range(5))


def test_stirling_log_path_moves_towards_s_one():
    tri = catalog_triangle("stirling", alpha=0)
    trace = path_kernel_sequence(tri, parse_path("scaled:s=1,c=log"), 3, [20, 400, 3000], window_count=3, tol=1e-6)
    target = extreme_kernel(tri, BoundaryPoint("stirling-s", Fraction(1)), 3).to_float()
    errors = [np.max(np.abs(V.to_float() - target)) for _, _, V in trace.samples]
    # log-scale paths converge slowly; the error must still shrink
    assert errors[-1] < errors[0]


def test_path_sequence_validation_and_jobs():
    with pytest.raises(ValueError):
        path_kernel_sequence(PASCAL, parse_path("constant:m=1"), 3, [10, 8, 12])
    with pytest.raises(ValueError):
        path_kernel_sequence(PASCAL, parse_path("constant:m=1"), 3, [3, 8])
    a = path_kernel_sequence(QHALF, parse_path("constant:m=2"), 3, [20, 30, 40], jobs=1)
    b = path_kernel_sequence(QHALF, parse_path("constant:m=2"), 3, [20, 30, 40], jobs=3)
    assert [V.rows for _, _, V in a.samples] == [V.rows for _, _, V in b.samples]


def test_martin_window_modes_agree():
    exact = martin_window(PASCAL, (300, 100), 3, mode="exact")
    approx = martin_window(PASCAL, (300, 100), 3, mode="float")
    assert exact.exact and not approx.exact
    assert np.allclose(exact.to_float(), approx.to_float(), rtol=1e-13, atol=0)
    with pytest.raises(ValueError):
        martin_window(PASCAL, (30, 10), 3, mode="fuzzy")


def test_discrete_boundary_check_examples():
    family = catalog_family(QHALF, "qpascal-m")
    trace = discrete_boundary_check(QHALF, family, 1, 12)
    assert trace.values == [1 - Fraction(1, 2**n) for n in range(1, 13)]
    assert all(a < b for a, b in zip(trace.values, trace.values[1:]))
    zero = discrete_boundary_check(QHALF, family, 0, 12)
    assert zero.values == [1] * 13
    st = catalog_triangle("stirling", alpha=-1)
    # Stirling m counts blocks: V(1) is the K = 0 chain, V(2) settles at k = 1
    family = catalog_family(st, "stirling-m")
    assert discrete_boundary_check(st, family, 1, 30).values == [1] * 31
    strace = discrete_boundary_check(st, family, 2, 30)
    assert strace.levels[0] == 1
    assert all(a < b < 1 for a, b in zip(strace.values, strace.values[1:]))
    assert strace.distances[-1] < Fraction(1, 10)


def test_martingale_examples():
    stats = martingale_experiment(PASCAL, BoundaryPoint("pascal-x", Fraction(1, 2)), 2000, 100, seed=3)
    assert stats.checkpoints == [10, 100, 1000, 2000]
    assert stats.mean_deviation[-1] < stats.mean_deviation[0]
    again = martingale_experiment(PASCAL, BoundaryPoint("pascal-x", Fraction(1, 2)), 2000, 100, seed=3)
    assert again.mean_deviation == stats.mean_deviation
    q = martingale_experiment(QHALF, BoundaryPoint("qpascal-m", Fraction(2)), 200, 50, seed=1, checkpoints=[10, 50])
    assert q.mean_deviation[-1] < 1e-9
    trivial = martingale_experiment(PASCAL, BoundaryPoint("trivial-0"), 50, 20, seed=0)
    assert trivial.max_deviation == [0.0] * len(trivial.checkpoints)
    with pytest.raises(ValueError):
        martingale_experiment(PASCAL, BoundaryPoint("pascal-x", Fraction(1, 2)), 5, 10, seed=0)


def test_phase_transition_qpascal():
    rows = phase_transition_sweep(
        lambda q: catalog_triangle("q-pascal", q=q),
        ["1/2", "9/10", "1", "11/10", "2"],
        parse_path("constant:m=1"),
        3,
        [200, 300, 400],
        tol=1e-6,
    )
    by_q = {r.param: r for r in rows}
    assert by_q[Fraction(1, 2)].verdict == "converged"
    assert abs(by_q[Fraction(1, 2)].coordinate - 0.5) < 1e-12
    # q = 1 is Pascal: constant m drifts towards the trivial x = 1 point
    assert by_q[Fraction(1)].verdict != "converged"
    assert by_q[Fraction(1)].coordinate > 0.99
    assert by_q[Fraction(2)].verdict == "converged"


def test_phase_transition_stirling_paths():
    paths = {
        Fraction(-1): parse_path("constant:m=2"),
        Fraction(0): parse_path("scaled:s=1,c=log"),
        Fraction(1, 2): parse_path("scaled:s=1,c=pow:1/2"),
    }
    rows = phase_transition_sweep(
        lambda a: catalog_triangle("stirling", alpha=a), list(paths), paths.__getitem__, 2, [1000, 2000, 4000], tol=1e-3
    )
    assert [r.param for r in rows] == list(paths)
    # kappa = 2 approaches the three-block extreme, V[1,0] = 1/(3+1), at rate 1/nu;
    # the coordinate carries the factor l(0,0) = 2
    assert rows[0].verdict == "converged"
    assert abs(rows[0].coordinate - 0.5) < 1e-3
    assert all(0 < r.coordinate < 1 for r in rows)


def test_trivial_endpoint_paths():
    # kappa = 0 forever is the trivial K = 0 solution
    trace = path_kernel_sequence(QHALF, PathSpec("constant", m=0), 3, [10, 20, 30])
    assert trace.samples[-1][2].first_column() == [1, 1, 1, 1]
    inf = path_kernel_sequence(PASCAL, PathSpec("constant", m=INF), 2, [10, 20, 30])
    assert inf.samples[-1][2][1, 0] == 0
    assert isinstance(inf.samples[0][2], KernelArray)
