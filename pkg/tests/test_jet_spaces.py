from fractions import Fraction

from hypothesis import given, strategies as st

from djet.delta_calculus import phi_multi
from djet.exact_algebra import CoeffRing, JetPoly, JetVar, PrimeSet, canonical_text, parse_poly
from djet.jet_spaces import (
    RationalPoint,
    affine_line,
    canonical_lift,
    coghost_images,
    coghost_values,
    fiber_lifts,
    gm_hyperbola,
    gm_localization_check,
    gm_open,
    invert_coghost_over_Q,
    jet_presentation,
    lift_relations_vanish,
)

P2 = PrimeSet([2])
P3 = PrimeSet([3])
P23 = PrimeSet([2, 3])


def test_affine_line_presentation():
    J = jet_presentation(affine_line(P23, "T"), (1, 0))
    assert [v.text() for v in J.generators] == ["T", "T@(1,0)"]
    assert J.relations == []


def test_hyperbola_order_one():
    J = jet_presentation(gm_hyperbola(P3), (1,))
    assert len(J.relations) == 2
    rel = J.relations[1]
    R = CoeffRing.localized(P3)
    x, y = JetPoly.var(JetVar("x", (0,)), R), JetPoly.var(JetVar("y", (0,)), R)
    x1, y1 = JetPoly.var(JetVar("x", (1,)), R), JetPoly.var(JetVar("y", (1,)), R)
    core = x ** 3 * y1 + y ** 3 * x1 + (x1 * y1).scale(3)
    # the remainder is a multiple of xy - 1 (it comes from delta of the constant -1 and C_p terms)
    rest = rel - core
    assert not rest.is_zero()
    for a, j1, j2 in ((2, 1, 4), (5, -3, 7), (Fraction(1, 7), 2, 2)):
        pt = {JetVar("x", (0,)): a, JetVar("y", (0,)): 1 / Fraction(a), JetVar("x", (1,)): j1, JetVar("y", (1,)): j2}
        assert rest.evaluate(pt) == 0


def test_gm_localizer():
    J = jet_presentation(gm_open(P23), (1, 1))
    x = parse_poly("x", CoeffRing.localized(P23), 2)
    want = x * phi_multi(P23, (1, 0), x) * phi_multi(P23, (0, 1), x) * phi_multi(P23, (1, 1), x)
    assert J.localizer == want


def test_canonical_lifts():
    X = gm_open(P3)
    lift = canonical_lift(RationalPoint(X, {"x": 2}), (1,))
    assert lift.values()[JetVar("x", (1,))] == -2
    lift = canonical_lift(RationalPoint(X, {"x": -1}), (1,))
    assert lift.values()[JetVar("x", (1,))] == 0
    lift = canonical_lift(RationalPoint(gm_open(P23), {"x": 1}), (1, 1))
    assert all(v == 0 for k, v in lift.values().items() if any(k.index))


@given(st.integers(-30, 30).filter(lambda n: n % 2 and n % 3))
def test_lift_satisfies_relations(n):
    X = gm_hyperbola(P23)
    pt = RationalPoint(X, {"x": n, "y": Fraction(1, n)})
    assert lift_relations_vanish(canonical_lift(pt, (1, 1)))


def test_coghost():
    T = parse_poly("T", d=1)
    assert coghost_images(P2, T, (0,), (1,)) == T
    assert coghost_images(P2, T, (1,), (1,)) == parse_poly("T^2 + 2*T@(1)", d=1)
    sol = invert_coghost_over_Q(P2, {(0,): 3, (1,): 11}, (1,))
    assert sol[JetVar("T", (1,))] == Fraction(11 - 9, 2)


@given(st.lists(st.fractions(max_denominator=7), min_size=4, max_size=4))
def test_coghost_roundtrip(vals):
    jets = {JetVar("T", i): v for i, v in zip([(0, 0), (0, 1), (1, 0), (1, 1)], vals)}
    w = coghost_values(P23, jets, (1, 1))
    assert invert_coghost_over_Q(P23, w, (1, 1)) == jets


def test_group_compatibility():
    x, y = parse_poly("x", d=2), parse_poly("y", d=2)
    for s in ((1, 0), (0, 1), (1, 1)):
        assert phi_multi(P23, s, x * y) == phi_multi(P23, s, x) * phi_multi(P23, s, y)


def test_gm_localization():
    assert gm_localization_check(P2, (1,))
    assert gm_localization_check(P23, (1, 1))


def test_fiber_lifts_smooth():
    assert fiber_lifts(affine_line(P2, "T"), 4, (0,), 0)
    assert fiber_lifts(gm_hyperbola(P3), 3, (0,), 0)
    assert canonical_text(jet_presentation(gm_open(P2), (1,)).localizer) == "x^3 + 2*x*x@(1)"
