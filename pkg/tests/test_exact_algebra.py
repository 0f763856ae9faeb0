from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from djet.exact_algebra import (
    QQ,
    AlgebraError,
    CoeffRing,
    JetPoly,
    JetVar,
    NotDivisible,
    PadicJetSeries,
    ParseError,
    PrimeSet,
    canonical_text,
    parse_poly,
    series_from_json,
    series_to_json,
    vp,
)

from strategies import jet_polys

P23 = PrimeSet([2, 3])
P1 = PrimeSet([2])


def test_primeset_validation():
    assert PrimeSet([2, 3]).primes == (2, 3)
    with pytest.raises(ValueError):
        PrimeSet([3, 2])
    with pytest.raises((ValueError, AlgebraError)):
        PrimeSet([4])
    with pytest.raises((ValueError, AlgebraError)):
        PrimeSet([])


def test_difference_of_squares_and_identity():
    x = parse_poly("x", d=2)
    assert (x + 1) * (x - 1) == parse_poly("x^2 - 1", d=2)
    assert x + JetPoly.zero() == x


def test_jet_product_is_single_monomial():
    a = JetPoly.var(JetVar("x", (1, 0)))
    b = JetPoly.var(JetVar("x", (0, 1)))
    assert len((a * b).terms()) == 1
    assert canonical_text(a * b) in ("x@(0,1)*x@(1,0)", "x@(1,0)*x@(0,1)")


def test_canonical_text_grammar():
    assert canonical_text(parse_poly("x^2 - 1")) == "x^2 - 1"
    assert canonical_text(JetPoly.var(JetVar("x", (1, 0)))) == "x@(1,0)"
    assert canonical_text(parse_poly("3/2*x")).startswith("3/2*")


@given(jet_polys(P23))
def test_parse_roundtrip(f):
    assert parse_poly(canonical_text(f), d=2) == f


@given(jet_polys(P23), jet_polys(P23), jet_polys(P23))
def test_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == JetPoly.zero()


@given(jet_polys(P23), st.sampled_from([JetVar("x", (0, 0)), JetVar("x", (1, 0))]))
def test_diff_leibniz(f, v):
    g = f * f
    assert g.diff(v) == (f.diff(v) * f).scale(2)


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_poly("x^^2")
    with pytest.raises(ParseError):
        parse_poly("x@(1")


def test_localized_ring_rejects_bad_denominators():
    R = CoeffRing.localized(P23)
    with pytest.raises(AlgebraError):
        parse_poly("1/2*x", R, 2)
    assert parse_poly("1/5*x", R, 2).coeff(((JetVar("x", (0, 0)), 1),)) == Fraction(1, 5)


def test_vp():
    assert vp(Fraction(12, 5), 2) == 2
    assert vp(Fraction(5, 12), 2) == -2


def _T(i=(0,)):
    return JetVar("T", i)


def test_series_divide_by_p():
    s = PadicJetSeries.from_poly(parse_poly("2*T", d=1), 2, 5, 4, P1)
    q = s.divide_by_p()
    assert q.N == 4 and q.equals(PadicJetSeries.from_poly(parse_poly("T", d=1), 2, 4, 4, P1))
    s = PadicJetSeries.from_poly(parse_poly("3 + 9*T", d=1), 3, 3, 4, PrimeSet([3]))
    assert s.divide_by_p().equals(PadicJetSeries.from_poly(parse_poly("1 + 3*T", d=1), 3, 2, 4, PrimeSet([3])))
    with pytest.raises(NotDivisible):
        PadicJetSeries.from_poly(parse_poly("1 + 2*T", d=1), 2, 3, 4, P1).divide_by_p()


def test_series_substitute():
    f = PadicJetSeries.from_poly(parse_poly("1 + T + 3*T^2", d=1), 2, 3, 4, P1)
    T = PadicJetSeries.var(_T(), 2, 3, 4, P1)
    assert f.substitute({_T(): T}).equals(f)
    assert f.substitute({_T(): PadicJetSeries.zero(2, 3, 4, P1)}).constant_term() == 1
    s = PadicJetSeries.from_poly(parse_poly("T", d=1), 2, 3, 4, P1)
    img = PadicJetSeries.from_poly(parse_poly("T^2 + 2*T@(1)", d=1), 2, 3, 4, P1)
    assert s.substitute({_T(): img}).equals(img)


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=5))
def test_series_inverse(cs):
    cs[0] = 2 * cs[0] + 1  # unit constant term for p = 2
    f = JetPoly.from_terms([(((_T(), n),) if n else (), c) for n, c in enumerate(cs)])
    s = PadicJetSeries.from_poly(f, 2, 6, 6, P1)
    one = s * s.inverse()
    assert one.equals(PadicJetSeries.const(1, 2, 6, 6, P1))


def test_series_json_roundtrip():
    s = PadicJetSeries.from_poly(parse_poly("1 + 3*T + 5*T@(1)^2", d=1), 2, 4, 3, P1)
    assert series_from_json(series_to_json(s)).equals(s)


def test_mul_trunc_matches_truncate():
    f = parse_poly("1 + x + x@(1,0)^2", d=2)
    assert f.mul_trunc(f, 3) == (f * f).truncate(3)
    assert f.pow_trunc(3, 4) == (f ** 3).truncate(4)


def test_coefficient_ring_mismatch():
    a = parse_poly("x", QQ, 1)
    b = parse_poly("x", CoeffRing.mod_prime_power(2, 3), 1)
    with pytest.raises(AlgebraError):
        a + b
