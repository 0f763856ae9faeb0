from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from djet.exact_algebra import JetPoly, JetVar, parse_poly
from djet.witt_vectors import (
    EnumerationBoundExceeded,
    WittVector,
    adjunction_check,
    delta_coordinate_polys,
    eq_39_holds,
    ghost,
    ghost_hom_identity,
    square_zero_kernel,
    teichmuller,
    witt_frobenius_delta,
    witt_law,
    zero_vector,
)


def test_small_laws():
    law = witt_law(2, 1)
    assert law.sum_polys[0] == parse_poly("X0 + Y0")
    assert law.prod_polys[0] == parse_poly("X0*Y0")
    assert law.sum_polys[1] == parse_poly("X1 + Y1 - X0*Y0")
    assert law.prod_polys[1] == parse_poly("X0^2*Y1 + Y0^2*X1 + 2*X1*Y1")


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_laws_integral(p, n):
    assert witt_law(p, n).check_integral()


def test_ghost_examples():
    assert ghost(WittVector(3, [Fraction(2)])) == (2,)
    assert ghost(WittVector(3, [2, 5])) == (2, 2 ** 3 + 3 * 5)
    assert ghost(WittVector(2, [0, 0, 7])) == (0, 0, 4 * 7)


@given(st.lists(st.integers(-9, 9), min_size=3, max_size=3), st.lists(st.integers(-9, 9), min_size=3, max_size=3),
       st.sampled_from([2, 3]))
def test_ghost_is_a_ring_map(a, b, p):
    A, B = WittVector(p, a), WittVector(p, b)
    ga, gb = ghost(A), ghost(B)
    assert ghost(A + B) == tuple(x + y for x, y in zip(ga, gb))
    assert ghost(A * B) == tuple(x * y for x, y in zip(ga, gb))
    assert A + zero_vector(p, 2) == A


@pytest.mark.parametrize("p,n", [(2, 3), (3, 2)])
def test_ghost_hom_identity_symbolic(p, n):
    assert ghost_hom_identity(p, n)


@pytest.mark.parametrize("p,n", [(2, 2), (3, 2), (5, 1)])
def test_top_coordinate_products(p, n):
    assert eq_39_holds(p, n)
    b, c = 3, 4
    u = WittVector(p, [0] * n + [b])
    v = WittVector(p, [0] * n + [c])
    assert (u * v).coords == tuple([0] * n + [p ** n * b * c])


def test_frobenius_and_delta():
    F, D = witt_frobenius_delta(WittVector(3, [2, 5]))
    assert ghost(F) == (2 ** 3 + 3 * 5,)
    F, D = witt_frobenius_delta(teichmuller(2, 2, 3))
    assert all(g == 0 for g in ghost(D)[:1])
    for a in range(-4, 5):
        for b in range(-4, 5):
            F, _ = witt_frobenius_delta(WittVector(3, [a, b]))
            assert (F.coords[0] - a ** 3) % 3 == 0


def test_delta_coordinate_polys_p2():
    J = delta_coordinate_polys(2, 2)
    assert J[0] == parse_poly("a0")
    assert J[1] == parse_poly("a1")
    assert J[2] == parse_poly("-a0^2*a1 - a1^2 + a2")


def test_adjunction_examples():
    x, y, T = JetPoly.var(JetVar("x")), JetPoly.var(JetVar("y")), JetPoly.var(JetVar("T"))
    for m, p, n in ((4, 2, 1), (9, 3, 1), (5, 5, 1)):
        rep = adjunction_check(["x"], [], m, p, n)
        assert rep.ok and rep.jet_count == m ** (n + 1)
    assert adjunction_check(["T"], [T * T - T], 2, 2, 1).ok
    assert adjunction_check(["x", "y"], [x * y - 1], 9, 3, 1).ok
    with pytest.raises(EnumerationBoundExceeded):
        adjunction_check(["x", "y"], [x * y - 1], 9, 3, 3, cap=1000)


def test_square_zero_kernel():
    assert square_zero_kernel(2, 2)
    assert square_zero_kernel(3, 1)
