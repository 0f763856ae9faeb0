from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from djet.delta_calculus import (
    DeltaDenominatorError,
    apply_delta,
    commutator_defect,
    commutator_polynomial,
    cp_polynomial,
    delta_int,
    delta_ring,
    delta_via_frobenius,
    frobenius_lift,
)
from djet.exact_algebra import QQ, JetPoly, JetVar, PrimeSet, canonical_text, parse_poly

from strategies import jet_polys

P = PrimeSet([2, 3, 5])
P23 = PrimeSet([2, 3])
X, Y = JetVar("X"), JetVar("Y")


def test_cp_polynomials():
    assert cp_polynomial(2) == parse_poly("-X*Y")
    assert cp_polynomial(3) == parse_poly("-X^2*Y - X*Y^2")
    # binomial oracle: -(1/p) * sum_{0<j<p} C(p,j) X^j Y^(p-j)
    from math import comb

    oracle = JetPoly.from_terms([(((X, j), (Y, 5 - j)), Fraction(-comb(5, j), 5)) for j in range(1, 5)])
    assert cp_polynomial(5) == oracle


def test_delta_int():
    assert delta_int(7, 1) == 0
    assert delta_int(2, 3) == -3
    assert delta_int(3, -1) == 0
    with pytest.raises(DeltaDenominatorError):
        delta_int(2, Fraction(1, 2))


def test_delta_examples():
    T = parse_poly("T", d=2)
    assert apply_delta(P23, 3, T) == JetPoly.var(JetVar("T", (0, 1)))
    x2 = parse_poly("x^2", d=2)
    assert canonical_text(apply_delta(P23, 2, x2)) == "2*x^2*x@(1,0) + 2*x@(1,0)^2"
    assert apply_delta(P23, 2, JetPoly.const(1)).is_zero()


def test_frobenius_examples():
    T = parse_poly("T", d=2)
    assert frobenius_lift(P23, 2, T) == parse_poly("T^2 + 2*T@(1,0)", d=2)
    x = parse_poly("x", d=2)
    assert frobenius_lift(P23, 2, frobenius_lift(P23, 3, x)) == frobenius_lift(P23, 3, frobenius_lift(P23, 2, x))


def test_commutator_polynomial_23():
    want = parse_poly("-X0^4*X1 - 2*X0^2*X1^2 + X0^3*X2 + X2^2 - X1^3")
    assert commutator_polynomial(2, 3) == want


@pytest.mark.parametrize("a", range(-6, 7))
def test_commutator_on_integers(a):
    lhs = delta_int(2, delta_int(3, a)) - delta_int(3, delta_int(2, a))
    C = commutator_polynomial(2, 3)
    rhs = C.evaluate({JetVar("X0"): a, JetVar("X1"): delta_int(2, a), JetVar("X2"): delta_int(3, a)})
    assert lhs == rhs


def test_second_derivative_across_primes():
    # delta_3 applied to x@(1,0) goes through the commutator, not a plain index shift
    v = JetPoly.var(JetVar("x", (1, 0)))
    want = parse_poly("x^4*x@(1,0) - x^3*x@(0,1) + 2*x^2*x@(1,0)^2 + x@(1,0)^3 - x@(0,1)^2 + x@(1,1)", d=2)
    assert apply_delta(P23, 3, v) == want


@given(jet_polys(P), jet_polys(P), st.sampled_from([2, 3, 5]))
def test_delta_axioms(f, g, p):
    df, dg = apply_delta(P, p, f), apply_delta(P, p, g)
    assert apply_delta(P, p, f + g) == df + dg + cp_polynomial(p).substitute({X: f, Y: g})
    assert apply_delta(P, p, f * g) == f ** p * dg + g ** p * df + (df * dg).scale(p)
    assert frobenius_lift(P, p, f * g) == frobenius_lift(P, p, f) * frobenius_lift(P, p, g)


@given(jet_polys(P), st.sampled_from([2, 3, 5]))
def test_two_routes_to_delta(f, p):
    assert delta_via_frobenius(P, p, f) == apply_delta(P, p, f)


@given(jet_polys(P, jets=False), st.sampled_from([(2, 3), (2, 5), (3, 5)]))
def test_commutator_identity(g, pq):
    assert commutator_defect(P, *pq, g).is_zero()


def test_truncated_mode_matches_exact():
    T = parse_poly("T + T^2", d=2)
    exact = apply_delta(P23, 2, apply_delta(P23, 3, T))
    trunc = delta_ring(P23, QQ, 6)
    approx = trunc.delta(2, trunc.delta(3, T))
    assert approx == exact.truncate(6)
