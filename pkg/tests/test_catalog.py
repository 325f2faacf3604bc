import math
from fractions import Fraction

import pytest

from oracles import gaussian_binomial

from trilab.catalog import (
    INF,
    BoundaryPoint,
    boundary_coordinate,
    catalog_triangle,
    extreme_kernel,
    extreme_rule,
    parse_point,
)
from trilab.core import Verdict, dimensions, kernel_from_first_column, level_mass, transpose, verify_harmonic

HALF = Fraction(1, 2)


def test_catalog_multiplicities():
    p = catalog_triangle("pascal")
    assert all(p.left(n, k) == 1 == p.right(n, k) for n in range(6) for k in range(n + 1))
    assert catalog_triangle("q-pascal", q=2).right(3, 1) == 4
    assert catalog_triangle("stirling", alpha=0).left(3, 1) == 4
    assert catalog_triangle("stirling", alpha=-1).left(2, 1) == 5
    assert catalog_triangle("stirling-inf").left(4, 2) == 3
    e = catalog_triangle("eulerian")
    assert (e.left(4, 1), e.right(4, 1)) == (2, 4)


@pytest.mark.parametrize(
    "name,params",
    [("q-pascal", {"q": 0}), ("q-pascal", {"q": "-1/2"}), ("stirling", {"alpha": 1}), ("stirling", {"alpha": 2}), ("nope", {})],
)
def test_catalog_rejects_bad_parameters(name, params):
    with pytest.raises(ValueError):
        catalog_triangle(name, **params)


def test_qpascal_q2_dimensions_are_gaussian_binomials():
    D = dimensions(catalog_triangle("q-pascal", q=2), 8)
    assert D[4, 2] == 35
    assert all(D[n, k] == gaussian_binomial(n, k, 2) for n in range(9) for k in range(n + 1))


def test_parse_point():
    pas = catalog_triangle("pascal")
    assert parse_point(pas, "x=1/3") == BoundaryPoint("pascal-x", Fraction(1, 3))
    q = catalog_triangle("q-pascal", q=HALF)
    assert parse_point(q, "m=inf") == BoundaryPoint("qpascal-m", INF)
    st0 = catalog_triangle("stirling", alpha=0)
    assert parse_point(st0, "s=5/2").value == Fraction(5, 2)
    assert parse_point(pas, "trivial-inf").kind == "trivial-inf"
    for bad in ("m=1", "x=3/2", "x", "y=1"):
        with pytest.raises(ValueError):
            parse_point(pas, bad)
    with pytest.raises(ValueError):
        parse_point(catalog_triangle("eulerian"), "m=0")


def test_qpascal_extreme_examples():
    tri = catalog_triangle("q-pascal", q=HALF)
    V = extreme_kernel(tri, BoundaryPoint("qpascal-m", Fraction(1)), 10)
    assert V.first_column() == [HALF**n for n in range(11)]
    assert all(V[n, k] == 0 for n in range(11) for k in range(2, n + 1))
    V2 = extreme_kernel(tri, BoundaryPoint("qpascal-m", Fraction(2)), 10)
    assert verify_harmonic(tri, V2).ok


def test_qpascal_extreme_closed_form_independent():
    # V[n,k](m) = q^((m-k)(n-k)) (q;q)_m / (q;q)_{m-k} for k <= m
    q = Fraction(1, 3)
    tri = catalog_triangle("q-pascal", q=q)

    def poch(j):
        return math.prod((1 - q**i for i in range(1, j + 1)), start=Fraction(1))

    for m in range(5):
        V = extreme_kernel(tri, BoundaryPoint("qpascal-m", Fraction(m)), 9)
        for n in range(10):
            for k in range(n + 1):
                want = q ** ((m - k) * (n - k)) * poch(m) / poch(m - k) if k <= m else 0
                assert V[n, k] == want


def test_qpascal_large_q_by_transposition():
    q = Fraction(3)
    tri = catalog_triangle("q-pascal", q=q)
    for m in range(4):
        V = extreme_kernel(tri, BoundaryPoint("qpascal-m", Fraction(m)), 12)
        assert verify_harmonic(tri, V).ok
        assert boundary_coordinate(tri, V) == 1 - q ** (-m)
    # the q>1 triangle is the transpose of q'=1/q up to the gauge q^(k(n-k))
    D = dimensions(tri, 8)
    Dt = dimensions(transpose(catalog_triangle("q-pascal", q=1 / q)), 8)
    assert all(D[n, k] == q ** (k * (n - k)) * Dt[n, k] for n in range(9) for k in range(n + 1))


def test_stirling_first_columns():
    tri = catalog_triangle("stirling", alpha=-1)
    for m in (1, 2, 5):
        V = extreme_kernel(tri, BoundaryPoint("stirling-m", Fraction(m)), 8)
        assert V.first_column() == [1 / math.prod(range(m + 1, m + 1 + n), start=Fraction(1)) for n in range(9)]
    inf = catalog_triangle("stirling-inf")
    V = extreme_kernel(inf, BoundaryPoint("stirling-m", Fraction(3)), 8)
    assert V.first_column() == [Fraction(1, 3**n) for n in range(9)]
    zero = catalog_triangle("stirling", alpha=0)
    V = extreme_kernel(zero, BoundaryPoint("stirling-s", Fraction(1)), 8)
    assert V.first_column() == [Fraction(1, math.factorial(n + 1)) for n in range(9)]


def test_stirling_m_zero_is_not_a_boundary_point():
    # 1/n! has a negative generalized difference on the alpha = -1 triangle
    tri = catalog_triangle("stirling", alpha=-1)
    _, verdict = kernel_from_first_column(tri, [Fraction(1, math.factorial(n)) for n in range(8)])
    assert verdict is Verdict.REJECT
    with pytest.raises(ValueError):
        extreme_rule(tri, BoundaryPoint("stirling-m", Fraction(0)))


def test_eulerian_coordinate_examples():
    e = catalog_triangle("eulerian")
    for m, want in [(3, Fraction(2, 3)), (1, Fraction(1)), (-3, Fraction(1, 3))]:
        V = extreme_kernel(e, BoundaryPoint("eulerian-m", Fraction(m)), 4)
        assert boundary_coordinate(e, V) == want
    # symmetric about 1/2
    for m in range(1, 8):
        a = extreme_kernel(e, BoundaryPoint("eulerian-m", Fraction(m)), 1)
        b = extreme_kernel(e, BoundaryPoint("eulerian-m", Fraction(-m)), 1)
        assert boundary_coordinate(e, a) + boundary_coordinate(e, b) == 1


def test_trivial_points():
    for tri in (catalog_triangle("pascal"), catalog_triangle("eulerian"), catalog_triangle("stirling", alpha=-2)):
        hi = extreme_kernel(tri, BoundaryPoint("trivial-inf"), 6)
        lo = extreme_kernel(tri, BoundaryPoint("trivial-0"), 6)
        assert hi[1, 0] == 0 and boundary_coordinate(tri, lo) == 1
        assert verify_harmonic(tri, hi).ok and verify_harmonic(tri, lo).ok


def test_qpascal_coordinates_strictly_decreasing():
    tri = catalog_triangle("q-pascal", q=HALF)
    coords = [boundary_coordinate(tri, extreme_kernel(tri, BoundaryPoint("qpascal-m", Fraction(m)), 2)) for m in range(8)]
    assert coords == [HALF**m for m in range(8)]
    assert all(a > b for a, b in zip(coords, coords[1:]))


@pytest.mark.parametrize(
    "name,params,point",
    [
        ("pascal", {}, "x=2/7"),
        ("q-pascal", {"q": "2/3"}, "m=3"),
        ("q-pascal", {"q": "5/2"}, "m=2"),
        ("stirling", {"alpha": "-1/2"}, "m=3"),
        ("stirling", {"alpha": 0}, "s=3/2"),
        ("stirling-inf", {}, "m=4"),
        ("eulerian", {}, "m=-2"),
        ("eulerian", {}, "m=inf"),
    ],
)
def test_extremes_normalised_and_stay_probabilities(name, params, point):
    tri = catalog_triangle(name, **params)
    p = parse_point(tri, point)
    V = extreme_kernel(tri, p, 12)
    dims = dimensions(tri, 12)
    assert all(level_mass(dims, V, n) == 1 for n in range(13))
    rule = extreme_rule(tri, p)
    for n in range(11):
        for k in range(n + 1):
            if V[n, k] > 0:
                assert rule.stay(n, k) == tri.left(n, k) * V[n + 1, k] / V[n, k]


def test_incompatible_point_rejected():
    with pytest.raises(ValueError):
        extreme_kernel(catalog_triangle("eulerian"), BoundaryPoint("pascal-x", HALF), 3)
    with pytest.raises(ValueError):
        extreme_kernel(catalog_triangle("stirling", alpha=-1), BoundaryPoint("stirling-s", HALF), 3)
