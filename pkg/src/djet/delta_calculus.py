"""p-derivations and Frobenius lifts on jet polynomial rings.

``apply_delta`` works only from the three axioms (unit, sum, product), the
integer formula on constants, and the action on generators (index shift for
the outermost prime, commutator correction otherwise).
``frobenius_lift`` is the ring endomorphism fixed by its generator images.
The two routes are tied together by phi(f) = f^p + p*delta(f), which the test
suite checks instead of assuming.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from functools import lru_cache
from math import comb

from .exact_algebra import (
    QQ,
    AlgebraError,
    CoeffRing,
    JetPoly,
    JetVar,
    PadicJetSeries,
    PrimeSet,
    _normc,
    is_prime,
    poly_sum,
)


class DeltaDenominatorError(AlgebraError):
    """A constant has a denominator divisible by the prime."""


def delta_int(p: int, n):
    """The unique p-derivation on Z_(p): (n - n^p)/p."""
    n = Fraction(n)
    if n.denominator % p == 0:
        raise DeltaDenominatorError(f"{n} has a denominator divisible by {p}")
    out = (n - n ** p) / p
    if out.denominator % p == 0:
        raise DeltaDenominatorError("result left Z_(p)")
    return _normc(out)


def _xy():
    return JetPoly.var(JetVar("X")), JetPoly.var(JetVar("Y"))


@lru_cache(maxsize=None)
def cp_polynomial(p: int) -> JetPoly:
    """C_p(X, Y) = (X^p + Y^p - (X+Y)^p)/p."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    X, Y = _xy()
    return ((X ** p + Y ** p - (X + Y) ** p)).exact_div_scalar(p)


def _cp(p: int, a: JetPoly, b: JetPoly) -> JetPoly:
    """C_p(a, b) evaluated by the binomial expansion."""
    ring = a.ring
    pa = [JetPoly.const(1, ring)]
    pb = [JetPoly.const(1, ring)]
    for _ in range(p - 1):
        pa.append(pa[-1] * a)
        pb.append(pb[-1] * b)
    parts = [(pa[j] * pb[p - j]).scale(-(comb(p, j) // p)) for j in range(1, p)]
    return poly_sum(parts, ring)


class DeltaRing:
    """The delta_P-structure on jet polynomials over a prime set.

    Generators are delta^i T = delta_{p_1}^{i_1} o ... o delta_{p_d}^{i_d} T.
    delta_{p_k} raises the index by e_k when p_k is the outermost prime of the
    generator (no nonzero index before position k); otherwise it is moved
    inwards with the commutator polynomial.
    """

    def __init__(self, primes: PrimeSet, ring: CoeffRing | None = None, D: int | None = None):
        self.primes = primes
        self.ring = ring if ring is not None else CoeffRing.localized(primes)
        if self.ring.kind == "ZpN":
            raise AlgebraError("delta needs an exact coefficient ring")
        # with a degree cap, everything is computed modulo monomials of degree > D;
        # this is only meaningful in coordinates vanishing at the base point
        self.D = D
        self._memo: dict = {}
        self._gen: dict = {}
        self._lock = threading.Lock()

    def _v(self, v: JetVar) -> JetPoly:
        return JetPoly.var(v, self.ring)

    def _check(self, f: JetPoly):
        if f.ring != self.ring:
            raise AlgebraError(f"operator over {self.ring} applied to polynomial over {f.ring}")
        for v in f.gens:
            if len(v.index) != self.primes.d:
                raise AlgebraError(f"jet variable {v} does not match {self.primes}")

    def _store(self, table, key, val):
        with self._lock:
            table[key] = val
        return val

    def gen_delta(self, k: int, v: JetVar) -> JetPoly:
        """delta_{p_k} of the generator v."""
        key = (k, v)
        hit = self._gen.get(key)
        if hit is not None:
            return hit
        i = v.index
        l = next((j for j, x in enumerate(i) if x), None)
        if l is None or k <= l:
            return self._store(self._gen, key, self._v(v.shift(k)))
        # v = delta_l(a); delta_k delta_l a = delta_l delta_k a + C_{p_k,p_l}(a, delta_k a, delta_l a)
        a = v.shift(l, -1)
        dka = self.gen_delta(k, a)
        C = commutator_polynomial(self.primes.primes[k], self.primes.primes[l]).with_ring(self.ring)
        corr = C.substitute({JetVar("X0"): self._v(a), JetVar("X1"): dka, JetVar("X2"): self._v(v)}, self.D)
        out = self.delta(self.primes.primes[l], dka) + corr
        return self._store(self._gen, key, out)

    # delta through the axioms
    def _delta_pair(self, p, x, dx, y, dy) -> JetPoly:
        # product axiom: delta(xy) = x^p dy + y^p dx + p dx dy
        return x ** p * dy + y ** p * dx + (dx * dy).scale(p)

    def _delta_mono(self, k: int, mono: tuple) -> JetPoly:
        key = (k, mono)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        p = self.primes.primes[k]
        if not mono:
            out = JetPoly.zero(self.ring)
        elif len(mono) == 1 and mono[0][1] == 1:
            out = self.gen_delta(k, mono[0][0])
        else:
            if len(mono) == 1:
                v, a = mono[0]
                h = a // 2
                left, right = ((v, h),), ((v, a - h),)
            else:
                h = len(mono) // 2
                left, right = mono[:h], mono[h:]
            x = JetPoly.from_terms([(left, 1)], self.ring)
            y = JetPoly.from_terms([(right, 1)], self.ring)
            out = self._delta_pair(p, x, self._delta_mono(k, left), y, self._delta_mono(k, right))
        return self._store(self._memo, key, out)

    def _delta_term(self, k, mono, c) -> JetPoly:
        dm = self._delta_mono(k, mono)
        if c == 1:
            return dm
        p = self.primes.primes[k]
        m = JetPoly.from_terms([(mono, 1)], self.ring)
        cpoly = JetPoly.const(c, self.ring)
        dc = JetPoly.const(delta_int(p, c), self.ring)
        return self._delta_pair(p, cpoly, dc, m, dm)

    def _delta_terms(self, k, terms):
        """Returns (sum, delta(sum)) for a list of (monomial, coeff)."""
        if len(terms) == 1:
            mono, c = terms[0]
            return JetPoly.from_terms([terms[0]], self.ring), self._delta_term(k, mono, c)
        h = len(terms) // 2
        a, da = self._delta_terms(k, terms[:h])
        b, db = self._delta_terms(k, terms[h:])
        # sum axiom: delta(a+b) = delta a + delta b + C_p(a, b)
        return a + b, da + db + _cp(self.primes.primes[k], a, b)

    def delta(self, p: int, f: JetPoly) -> JetPoly:
        self._check(f)
        k = self.primes.index(p)
        if f.is_zero():
            return JetPoly.zero(self.ring)
        if self.D is not None:
            # truncated mode goes through phi: delta(f) = (phi(f) - f^p)/p
            return (self.phi(p, f) - f.pow_trunc(p, self.D)).exact_div_scalar(p)
        return self._delta_terms(k, f.terms())[1]

    # Frobenius as a ring endomorphism
    def phi_image(self, k: int, v: JetVar) -> JetPoly:
        key = ("phi", k, v)
        hit = self._gen.get(key)
        if hit is not None:
            return hit
        p = self.primes.primes[k]
        if self.D is None:
            out = self._v(v) ** p + self.gen_delta(k, v).scale(p)
        else:
            out = (self._v(v).pow_trunc(p, self.D) + self.gen_delta(k, v).scale(p)).truncate(self.D)
        return self._store(self._gen, key, out)

    def phi(self, p: int, f: JetPoly) -> JetPoly:
        self._check(f)
        k = self.primes.index(p)
        return f.substitute({v: self.phi_image(k, v) for v in f.variables()}, self.D)

    def phi_series(self, p: int, s: PadicJetSeries) -> PadicJetSeries:
        k = self.primes.index(p)
        mapping = {}
        for v in s.variables():
            img = self.phi_image(k, v)
            mapping[v] = PadicJetSeries.from_poly(img, s.p, s.N, s.D, s.primes)
        return s.substitute(mapping)


class DeltaOperator:
    """delta_p for one prime of a prime set (a view on DeltaRing)."""

    def __init__(self, primes: PrimeSet, p: int, ring: CoeffRing | None = None):
        self.primes = primes
        self.p = p
        self.k = primes.index(p)
        self.ring = ring if ring is not None else CoeffRing.localized(primes)
        self.dring = delta_ring(primes, self.ring)

    def delta(self, f: JetPoly) -> JetPoly:
        return self.dring.delta(self.p, f)

    def phi(self, f: JetPoly) -> JetPoly:
        return self.dring.phi(self.p, f)

    def phi_image(self, v: JetVar) -> JetPoly:
        return self.dring.phi_image(self.k, v)


@lru_cache(maxsize=64)
def delta_ring(primes: PrimeSet, ring: CoeffRing | None = None, D: int | None = None) -> DeltaRing:
    return DeltaRing(primes, ring, D)


def delta_operator(primes: PrimeSet, p: int, ring: CoeffRing | None = None) -> DeltaOperator:
    return DeltaOperator(primes, p, ring)


def apply_delta(primes: PrimeSet, p: int, f: JetPoly) -> JetPoly:
    return delta_ring(primes, f.ring).delta(p, f)


def frobenius_lift(primes: PrimeSet, p: int, f):
    """phi_p on a JetPoly, a PadicJetSeries or a constant."""
    if isinstance(f, (int, Fraction)):
        return f
    if isinstance(f, PadicJetSeries):
        return delta_ring(primes, QQ).phi_series(p, f)
    return delta_ring(primes, f.ring).phi(p, f)


def delta_via_frobenius(primes: PrimeSet, p: int, f: JetPoly) -> JetPoly:
    """(phi_p(f) - f^p)/p, the second route to delta_p."""
    return (frobenius_lift(primes, p, f) - f ** p).exact_div_scalar(p)


def delta_multi(primes: PrimeSet, i, f: JetPoly) -> JetPoly:
    """delta^i = delta_{p_1}^{i_1} o ... o delta_{p_d}^{i_d} (innermost last prime)."""
    for k in reversed(range(primes.d)):
        for _ in range(i[k]):
            f = apply_delta(primes, primes.primes[k], f)
    return f


def phi_multi(primes: PrimeSet, s, f):
    for k in reversed(range(primes.d)):
        for _ in range(s[k]):
            f = frobenius_lift(primes, primes.primes[k], f)
    return f


@lru_cache(maxsize=None)
def commutator_polynomial(p1: int, p2: int) -> JetPoly:
    """C_{p1,p2}(X0, X1, X2) with X1 = delta_{p1} a, X2 = delta_{p2} a."""
    if p1 == p2:
        raise ValueError("commutator polynomial needs two distinct primes")
    X0, X1, X2 = (JetPoly.var(JetVar(n)) for n in ("X0", "X1", "X2"))
    c1, c2 = cp_polynomial(p1), cp_polynomial(p2)
    X, Y = JetVar("X"), JetVar("Y")
    t1 = c2.substitute({X: X0 ** p1, Y: X1.scale(p1)}).exact_div_scalar(p1)
    t2 = c1.substitute({X: X0 ** p2, Y: X2.scale(p2)}).exact_div_scalar(p2)
    t3 = (X2 ** p1).scale(Fraction(delta_int(p1, p2), p2))
    t4 = (X1 ** p2).scale(Fraction(delta_int(p2, p1), p1))
    out = t1 - t2 - t3 + t4
    for c in out.coefficients():
        if Fraction(c).denominator != 1:
            raise AlgebraError("commutator polynomial is not integral")
    return out


def commutator_defect(primes: PrimeSet, p: int, q: int, g: JetPoly) -> JetPoly:
    """delta_p delta_q g - delta_q delta_p g - C_{p,q}(g, delta_p g, delta_q g)."""
    dp = apply_delta(primes, p, g)
    dq = apply_delta(primes, q, g)
    lhs = apply_delta(primes, p, dq) - apply_delta(primes, q, dp)
    C = commutator_polynomial(p, q).with_ring(g.ring)
    rhs = C.substitute({JetVar("X0"): g, JetVar("X1"): dp, JetVar("X2"): dq})
    return lhs - rhs
