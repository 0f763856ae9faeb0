import random

import pytest
from hypothesis import given

from djet.delta_calculus import frobenius_lift, phi_multi
from djet.differential_forms import (
    ConjugateDerivation,
    DifferentialForm,
    d,
    defining_relation_holds,
    df_expansion,
    divided_frobenius,
    exterior_derivative,
    gm_chart,
    gm_conjugates,
    gm_divided_forms,
    gram_matrix,
    is_identity_gram,
    pairing,
    volume_form,
)
from djet.exact_algebra import CoeffRing, JetPoly, JetVar, PrimeSet, parse_poly

from strategies import jet_polys

P2 = PrimeSet([2])
P3 = PrimeSet([3])
P23 = PrimeSet([2, 3])


def _v(name, i):
    return JetVar(name, i)


def test_d_basics():
    assert d(JetPoly.const(5)).is_zero()
    x, y = parse_poly("x", d=1), parse_poly("y", d=1)
    want = DifferentialForm(1, {(_v("y", (0,)),): x, (_v("x", (0,)),): y})
    assert d(x * y).equals(want)


@given(jet_polys(P23))
def test_d_squared(f):
    assert exterior_derivative(d(f)).is_zero()


def test_divided_frobenius_formula():
    x, y = parse_poly("x", d=1), parse_poly("y", d=1)
    w = DifferentialForm(1, {(_v("y", (0,)),): x})
    assert divided_frobenius(w, P3, (0,)).equals(w)
    got = divided_frobenius(w, P3, (1,))
    fx = frobenius_lift(P3, 3, x)
    want = DifferentialForm(1, {(_v("y", (0,)),): fx * y ** 2, (_v("y", (1,)),): fx})
    assert got.equals(want)


@given(jet_polys(P2, jets=False), jet_polys(P2, jets=False))
def test_wedge_commutes_with_divided_frobenius(f, g):
    a = d(f)
    b = d(g) + DifferentialForm(1, {(_v("y", (0,)),): f})
    lhs = divided_frobenius(a.wedge(b), P2, (1,))
    rhs = divided_frobenius(a, P2, (1,)).wedge(divided_frobenius(b, P2, (1,)))
    assert lhs.equals(rhs)


@given(jet_polys(P2, jets=False))
def test_d_commutes_with_divided_frobenius(f):
    w = DifferentialForm(1, {(_v("y", (0,)),): f})  # not closed in general
    # (dw)_r carries one more factor P^r in its denominator than d(w_r)
    lhs = divided_frobenius(exterior_derivative(w), P2, (1,)).scale(2)
    rhs = exterior_derivative(divided_frobenius(w, P2, (1,)))
    assert lhs.equals(rhs)
    closed = d(f)
    assert exterior_derivative(divided_frobenius(closed, P2, (1,))).is_zero()


def test_conjugate_examples():
    _, table = gm_chart(P3)
    R = table["x"].ring
    x = JetPoly.var(_v("x", (0,)), R)
    D0 = ConjugateDerivation(P3, table, (0,), (1,))
    D1 = ConjugateDerivation(P3, table, (1,), (1,))
    assert D0._val(_v("x", (0,))) == x
    assert D0._val(_v("x", (1,))) == -(x ** 3)
    assert D1._val(_v("x", (0,))).is_zero()
    assert D1._val(_v("x", (1,))) == frobenius_lift(P3, 3, x)
    assert defining_relation_holds(D1, table)


def test_scaling_rule():
    _, table = gm_chart(P2)
    R = table["x"].ring
    rng = random.Random(3)
    for _ in range(5):
        a = JetPoly.from_terms([(((_v("x", (0,)), rng.randint(0, 2)),), rng.randint(1, 4))], R)
        for r in ((0,), (1,), (2,)):
            Da = ConjugateDerivation(P2, {"x": a * table["x"]}, r, (2,))
            Dr = ConjugateDerivation(P2, table, r, (2,))
            fa = phi_multi(P2, r, a)
            for s in ((0,), (1,), (2,)):
                assert Da._val(_v("x", s)) == fa * Dr._val(_v("x", s))


@pytest.mark.parametrize("ps,n", [([2], (1,)), ([3], (2,)), ([2, 3], (1, 1))])
def test_gram_identity(ps, n):
    P = PrimeSet(ps)
    assert is_identity_gram(gram_matrix(gm_divided_forms(P, n), gm_conjugates(P, n)))


@given(jet_polys(P23, names=("x",)))
def test_pairing_with_df(f):
    Ds = gm_conjugates(P23, (1, 1))
    R = CoeffRing.localized(P23)
    f = f.with_ring(R)
    for D in Ds.values():
        assert pairing(d(f), D) == D.apply(f)


def test_df_expansion_examples():
    Ds = gm_conjugates(P2, (1,))
    forms = gm_divided_forms(P2, (1,))
    R = CoeffRing.localized(P2)
    x = JetPoly.var(_v("x", (0,)), R)
    coeffs = df_expansion(x, Ds, forms)
    assert coeffs[(0,)] == x and coeffs[(1,)].is_zero()
    x1 = JetPoly.var(_v("x", (1,)), R)
    coeffs = df_expansion(x1, Ds, forms)
    assert coeffs[(0,)] == -(x ** 2)


def test_volume_forms():
    T = parse_poly("T", d=1)
    assert volume_form([d(T)]).equals(d(T))
    forms = gm_divided_forms(P2, (1,))
    vol = volume_form([forms[(0,)], forms[(1,)]])
    c = vol.coeff((_v("x", (0,)), _v("x", (1,))))
    cert = c.unit_certificate()
    assert cert is not None and cert[0] in (1, -1)
