"""Presentations of arithmetic jet rings, canonical lifts and the coghost map."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .delta_calculus import DeltaDenominatorError, delta_int, delta_multi, delta_ring, phi_multi
from .exact_algebra import (
    AlgebraError,
    CoeffRing,
    JetPoly,
    JetVar,
    LocalizedJetElem,
    PrimeSet,
    _normc,
    canonical_text,
    indices_below,
    mi_le,
)


@dataclass
class AffinePresentation:
    """X = Spec A_0[T]/(f), optionally the principal open where g is invertible."""

    primes: PrimeSet
    variables: list
    relations: list = field(default_factory=list)
    localizer: JetPoly | None = None

    def __post_init__(self):
        zero = self.primes.zero
        allowed = {JetVar(v, zero) for v in self.variables}
        for f in list(self.relations) + ([self.localizer] if self.localizer is not None else []):
            if not set(f.variables()) <= allowed:
                raise AlgebraError(f"{f} uses variables outside the base variables {self.variables}")

    @property
    def ring(self) -> CoeffRing:
        return CoeffRing.localized(self.primes)

    def base_var(self, name: str) -> JetVar:
        return JetVar(name, self.primes.zero)


def affine_line(primes: PrimeSet, name: str = "T") -> AffinePresentation:
    return AffinePresentation(primes, [name])


def gm_open(primes: PrimeSet, name: str = "x") -> AffinePresentation:
    """G_m as the principal open x != 0 of the affine line."""
    R = CoeffRing.localized(primes)
    return AffinePresentation(primes, [name], [], JetPoly.var(JetVar(name, primes.zero), R))


def gm_hyperbola(primes: PrimeSet) -> AffinePresentation:
    """G_m as Spec A_0[x, y]/(xy - 1)."""
    R = CoeffRing.localized(primes)
    z = primes.zero
    x, y = JetPoly.var(JetVar("x", z), R), JetPoly.var(JetVar("y", z), R)
    return AffinePresentation(primes, ["x", "y"], [x * y - 1])


@dataclass
class JetRingPresentation:
    primes: PrimeSet
    order: tuple
    generators: list
    relations: list
    localizer: JetPoly | None
    variables: list

    def as_dict(self) -> dict:
        return {
            "vars": [v.text() for v in self.generators],
            "order": list(self.order),
            "relations": [canonical_text(f) for f in self.relations],
            "localizer": canonical_text(self.localizer) if self.localizer is not None else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))


def jet_presentation(X: AffinePresentation, r) -> JetRingPresentation:
    P = X.primes
    r = tuple(r)
    if len(r) != P.d:
        raise AlgebraError("order has the wrong length")
    idx = indices_below(r)
    gens = [JetVar(v, i) for v in X.variables for i in idx]
    rels = [delta_multi(P, i, f) for f in X.relations for i in idx]
    loc = None
    if X.localizer is not None:
        loc = JetPoly.const(1, X.ring)
        for i in idx:
            loc = loc * phi_multi(P, i, X.localizer)
    return JetRingPresentation(P, r, gens, rels, loc, list(X.variables))


def frobenius_factor(primes: PrimeSet):
    """The callable (g, i) -> phi^i(g) used by LocalizedJetElem."""

    @lru_cache(maxsize=None)
    def frob(g: JetPoly, i) -> JetPoly:
        return phi_multi(primes, i, g)

    return frob


def localized(primes: PrimeSet, num: JetPoly, g: JetPoly, den=None) -> LocalizedJetElem:
    return LocalizedJetElem(num, g, dict(den or {}), _frob_for(primes))


_FROBS: dict = {}


def _frob_for(primes: PrimeSet):
    f = _FROBS.get(primes)
    if f is None:
        f = _FROBS.setdefault(primes, frobenius_factor(primes))
    return f


def localized_phi(primes: PrimeSet, p: int, u: LocalizedJetElem) -> LocalizedJetElem:
    """phi_p on N / prod phi^i(g)^m; the Frobenius lifts commute, so indices shift by e_k."""
    k = primes.index(p)
    num = delta_ring(primes, u.ring).phi(p, u.num)
    den = {}
    for i, m in u.den.items():
        j = list(i)
        j[k] += 1
        den[tuple(j)] = m
    return LocalizedJetElem(num, u.g, den, u.frob)


def localized_delta(primes: PrimeSet, p: int, u: LocalizedJetElem) -> LocalizedJetElem:
    """delta_p(u) = (phi_p(u) - u^p)/p, the division by p being exact on numerators."""
    diff = localized_phi(primes, p, u) - u ** p
    return LocalizedJetElem(diff.num.exact_div_scalar(p), diff.g, diff.den, diff.frob)


def localized_delta_multi(primes: PrimeSet, i, u: LocalizedJetElem) -> LocalizedJetElem:
    for k in reversed(range(primes.d)):
        for _ in range(i[k]):
            u = localized_delta(primes, primes.primes[k], u)
    return u


def gm_localization_check(primes: PrimeSet, r) -> bool:
    """The jet ring of xy = 1 maps into the localization of the jet ring of A^1 at f_r.

    y and its jets go to delta^i(1/x) as localized elements; every relation
    delta^i(xy - 1) must map to zero.
    """
    X = gm_hyperbola(primes)
    J = jet_presentation(X, r)
    R = X.ring
    x = JetPoly.var(JetVar("x", primes.zero), R)
    inv = localized(primes, JetPoly.const(1, R), x, {primes.zero: 1})
    images = {}
    for i in indices_below(r):
        images[JetVar("y", i)] = localized_delta_multi(primes, i, inv)
        images[JetVar("x", i)] = localized(primes, JetPoly.var(JetVar("x", i), R), x)
    for rel in J.relations:
        if not substitute_localized(rel, images, x, primes).is_zero():
            return False
    # every denominator index appearing lies below r, so the localizer f_r suffices
    return all(mi_le(i, r) for im in images.values() for i in im.den)


def substitute_localized(f: JetPoly, images: dict, g: JetPoly, primes: PrimeSet) -> LocalizedJetElem:
    R = f.ring
    total = localized(primes, JetPoly.zero(R), g)
    for mono, c in f.terms():
        term = localized(primes, JetPoly.const(c, R), g)
        for v, k in mono:
            term = term * images[v] ** k
        total = total + term
    return total


@dataclass
class RationalPoint:
    presentation: AffinePresentation
    assignment: dict

    def __post_init__(self):
        X = self.presentation
        vals = {X.base_var(v): Fraction(c) for v, c in self.assignment.items()}
        for f in X.relations:
            if f.evaluate(vals) != 0:
                raise AlgebraError(f"relation {f} does not vanish at {self.assignment}")
        if X.localizer is not None:
            g = Fraction(X.localizer.evaluate(vals))
            if g == 0 or not _is_unit(g, X.primes):
                raise AlgebraError("localizer is not a unit at this point")


def _is_unit(c: Fraction, primes: PrimeSet) -> bool:
    c = Fraction(c)
    return c != 0 and all(c.numerator % p and c.denominator % p for p in primes)


def delta_int_multi(primes: PrimeSet, i, c):
    """delta^i on A_0 in canonical order (last prime innermost)."""
    for k in reversed(range(primes.d)):
        for _ in range(i[k]):
            c = delta_int(primes.primes[k], c)
    return c


@dataclass
class CanonicalLift:
    point: RationalPoint
    order: tuple
    jet_assignment: dict

    def values(self) -> dict:
        return dict(self.jet_assignment)


def canonical_lift(point: RationalPoint, r) -> CanonicalLift:
    X = point.presentation
    P = X.primes
    jets = {}
    for v, c in point.assignment.items():
        c = Fraction(c)
        for p in P:
            if c.denominator % p == 0:
                raise DeltaDenominatorError(f"{c} has a denominator divisible by {p}")
        for i in indices_below(r):
            jets[JetVar(v, i)] = _normc(delta_int_multi(P, i, c))
    return CanonicalLift(point, tuple(r), jets)


def lift_relations_vanish(lift: CanonicalLift) -> bool:
    J = jet_presentation(lift.point.presentation, lift.order)
    return all(f.evaluate(lift.jet_assignment) == 0 for f in J.relations)


def coghost_images(primes: PrimeSet, f: JetPoly, s, r) -> JetPoly:
    if not mi_le(s, r):
        raise AlgebraError(f"{s} is not below {r}")
    return phi_multi(primes, tuple(s), f)


def invert_coghost_over_Q(primes: PrimeSet, values: dict, r, name: str = "T") -> dict:
    """Solve phi^s(T) = values[s] (s <= r) for the jet coordinates delta^i T over Q."""
    Q = CoeffRing.rational()
    T = JetPoly.var(JetVar(name, primes.zero), Q)
    sol: dict = {}
    for s in indices_below(r):
        target = JetVar(name, tuple(s))
        f = phi_multi(primes, tuple(s), T)
        known = {v: c for v, c in sol.items()}
        g = f.partial_evaluate(known)
        lin = g.diff(target)
        if not lin.is_constant() or g.degree() > 1 or set(g.variables()) - {target}:
            raise AlgebraError("coghost map is not triangular here")
        c = lin.constant_term()
        rest = g.constant_term()
        sol[target] = _normc((Fraction(values[tuple(s)]) - rest) / c)
    return sol


def coghost_values(primes: PrimeSet, jets: dict, r, name: str = "T") -> dict:
    Q = CoeffRing.rational()
    T = JetPoly.var(JetVar(name, primes.zero), Q)
    return {tuple(s): phi_multi(primes, tuple(s), T).evaluate(jets) for s in indices_below(r)}


def fiber_lifts(X: AffinePresentation, m: int, r, k: int) -> bool:
    """Every Z/m-point of J^r(X) lifts to J^{r+e_k}(X), checked by enumeration."""
    import itertools

    r1 = list(r)
    r1[k] += 1
    J0 = jet_presentation(X, r)
    J1 = jet_presentation(X, tuple(r1))
    new = [v for v in J1.generators if v not in J0.generators]
    pts0 = []
    for vals in itertools.product(range(m), repeat=len(J0.generators)):
        pt = dict(zip(J0.generators, vals))
        if all(f.evaluate(pt) % m == 0 for f in J0.relations):
            pts0.append(pt)
    for pt in pts0:
        ok = False
        for vals in itertools.product(range(m), repeat=len(new)):
            full = dict(pt)
            full.update(zip(new, vals))
            if all(_ev_mod(f, full, m) == 0 for f in J1.relations):
                ok = True
                break
        if not ok:
            return False
    return True


def _ev_mod(f: JetPoly, pt: dict, m: int) -> int:
    v = Fraction(f.evaluate(pt))
    return v.numerator * pow(v.denominator, -1, m) % m
