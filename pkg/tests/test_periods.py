from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from djet.exact_algebra import PrimeSet, parse_poly
from djet.periods import (
    Chain,
    ChainError,
    ChainPoint,
    ExactForm,
    GmOmegaE,
    PeriodValue,
    chain_from_json,
    gm_cycle,
    integrate,
    period_reduce,
    period_report,
)

P = PrimeSet([3, 5])
W = GmOmegaE(P)


def _chain(*pts):
    return Chain(P, [ChainPoint(p, Fraction(x)) for p, x in pts])


@pytest.mark.parametrize("x14", [1, -1])
def test_torsion_cycles(x14):
    v = integrate(W, gm_cycle(P, x14), 8)
    assert v.is_zero()
    assert period_reduce(v).status == "zero_within_bound"


def test_nonzero_cycle():
    v = integrate(W, gm_cycle(P, 2), 8)
    assert not v.is_zero()
    assert period_reduce(v).status == "nonzero_at_precision"


def test_horizontal_only():
    assert integrate(W, _chain((3, 2), (5, 2), (3, 2), (5, 2)), 8).is_zero()


@given(st.lists(st.sampled_from([1, 2, 4, 7, -1, 8]), min_size=2, max_size=4))
def test_concatenation_and_reversal(xs):
    a = _chain(*[(3, x) for x in xs])
    b = _chain((3, xs[-1]), (5, xs[-1]), (5, 11))
    assert integrate(W, a + b, 6) == integrate(W, a, 6) + integrate(W, b, 6)
    assert integrate(W, a.reversed(), 6) == -integrate(W, a, 6)


def test_exact_form_vanishes_in_quotient():
    g = ExactForm(P, parse_poly("x^3 - 2*x@(0,1)", d=2))
    v = integrate(g, gm_cycle(P, 4), 8)
    # the relation element is g(lift of 4) - g(1) = 471, outside the default height
    assert period_reduce(v).status == "nonzero_at_precision"
    rep = period_reduce(v, height=500)
    assert rep.status == "zero_within_bound"
    a = rep.witness[0]
    assert abs(a) == 471
    assert v.translate([-a, a]).is_zero()


def test_reduce_examples():
    v = PeriodValue(P, 6, (0, 0)).translate([Fraction(2, 7), Fraction(-2, 7)])
    assert period_reduce(v).status == "zero_within_bound"
    one = PeriodValue(P, 6, (1, 0))
    assert period_reduce(one, 20).status == "nonzero_at_precision"
    shifted = one.translate([3, -3])
    assert period_reduce(shifted, 20).status == period_reduce(one, 20).status


def test_chain_validation():
    with pytest.raises(ChainError):
        _chain((3, 2), (5, 7))
    with pytest.raises(ChainError):
        chain_from_json({"points": [{"prime": 3, "base_x": "1", "kind": "weird"}]})


def test_json_interface():
    obj = {"omega": "gm_omega_e", "points": [
        {"prime": 3, "base_x": "1", "kind": "canonical_lift"}, {"prime": 3, "base_x": "2", "kind": "canonical_lift"},
        {"prime": 5, "base_x": "2", "kind": "canonical_lift"}, {"prime": 5, "base_x": "1", "kind": "canonical_lift"},
        {"prime": 3, "base_x": "1", "kind": "canonical_lift"}]}
    rep = period_report(obj, 8)
    assert rep["reduced"] == "nonzero_at_precision"
    assert [c["prime"] for c in rep["components"]] == [3, 5]
    assert all(c["precision"] == 8 for c in rep["components"])


def test_jet_point_kind():
    # an explicit jet point equal to the lift of 2 gives the same primitive value
    from djet.jet_spaces import RationalPoint, canonical_lift, gm_open

    vals = canonical_lift(RationalPoint(gm_open(P), {"x": 2}), P.e).values()
    jets = {v.text(): str(c) for v, c in vals.items()}
    omega, ch = chain_from_json({"primes": [3, 5], "points": [
        {"prime": 3, "base_x": "1"}, {"prime": 3, "kind": "jet_point", "jets": jets}]})
    v = integrate(omega, ch, 8)
    assert v == integrate(W, _chain((3, 1), (3, 2)), 8)
