"""Exterior calculus on jet rings, divided Frobenius pullbacks and conjugate derivations.

A form is a map from strictly increasing tuples of JetVar (the wedge monomial
dv_1 ^ ... ^ dv_i) to coefficients.  Coefficients may be JetPoly,
LocalizedJetElem or PadicJetSeries; the code only relies on +, *, diff,
variables and is_zero.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .delta_calculus import delta_ring, phi_multi
from .exact_algebra import (
    AlgebraError,
    JetPoly,
    JetVar,
    LocalizedJetElem,
    PadicJetSeries,
    PrimeSet,
    QQ as _QQ,
    canonical_text,
    indices_below,
    mi_le,
    mi_sub,
    vp,
)
from .jet_spaces import localized_phi


class IntegralityFailure(AlgebraError):
    pass


def _is_zero(c) -> bool:
    if isinstance(c, PadicJetSeries):
        return c.equals(0)
    if isinstance(c, (int, Fraction)):
        return c == 0
    return c.is_zero()


def _sort_sign(vs):
    """Sort a wedge monomial, returning (sign, sorted tuple) or (0, None) on repeats."""
    vs = list(vs)
    if len(set(vs)) < len(vs):
        return 0, None
    sign = 1
    # insertion sort counting transpositions
    for i in range(1, len(vs)):
        j = i
        while j > 0 and vs[j - 1] > vs[j]:
            vs[j - 1], vs[j] = vs[j], vs[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(vs)


class DifferentialForm:
    __slots__ = ("degree", "terms")

    def __init__(self, degree: int, terms=None):
        self.degree = degree
        out: dict = {}
        for w, c in (terms or {}).items():
            if len(w) != degree:
                raise AlgebraError("wedge monomial of the wrong degree")
            sign, key = _sort_sign(w)
            if not sign:
                continue
            c = c if sign > 0 else -c
            out[key] = out[key] + c if key in out else c
        self.terms = {w: c for w, c in out.items() if not _is_zero(c)}

    @classmethod
    def zero(cls, degree: int = 1):
        return cls(degree, {})

    @classmethod
    def function(cls, f):
        return cls(0, {(): f})

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, wedge) -> object:
        sign, key = _sort_sign(wedge)
        c = self.terms.get(key)
        if c is None or not sign:
            return None
        return c if sign > 0 else -c

    def __add__(self, other):
        if other.degree != self.degree:
            raise AlgebraError("adding forms of different degree")
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out[w] + c if w in out else c
        return DifferentialForm(self.degree, out)

    def __neg__(self):
        return DifferentialForm(self.degree, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f) -> "DifferentialForm":
        """Multiply by a ring element (or a number)."""
        return DifferentialForm(self.degree, {w: _times(f, c) for w, c in self.terms.items()})

    def wedge(self, other: "DifferentialForm") -> "DifferentialForm":
        out: dict = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                sign, key = _sort_sign(w1 + w2)
                if not sign:
                    continue
                c = c1 * c2
                if sign < 0:
                    c = -c
                out[key] = out[key] + c if key in out else c
        return DifferentialForm(self.degree + other.degree, out)

    __xor__ = wedge

    def equals(self, other: "DifferentialForm") -> bool:
        return (self - other).is_zero()

    def variables(self) -> tuple:
        vs = set()
        for w, c in self.terms.items():
            vs |= set(w)
            vs |= set(c.variables())
        return tuple(sorted(vs))

    def map_coeffs(self, fn) -> "DifferentialForm":
        return DifferentialForm(self.degree, {w: fn(c) for w, c in self.terms.items()})

    def to_json(self) -> list:
        return [{"wedge": [v.text() for v in w], "coeff": canonical_text(c)}
                for w, c in sorted(self.terms.items())]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def __repr__(self):
        return f"DifferentialForm({self.degree}, {self.to_json()})"


def _times(f, c):
    if isinstance(f, (int, Fraction)):
        if isinstance(c, LocalizedJetElem):
            return c.scale(f)
        return c.scale(f)
    return f * c


def d(f) -> DifferentialForm:
    """Exterior derivative of a function."""
    return DifferentialForm(1, {(v,): f.diff(v) for v in f.variables()})


def exterior_derivative(x) -> DifferentialForm:
    if not isinstance(x, DifferentialForm):
        return d(x)
    out: dict = {}
    for w, c in x.terms.items():
        for v in c.variables():
            dc = c.diff(v)
            if _is_zero(dc):
                continue
            sign, key = _sort_sign((v,) + w)
            if not sign:
                continue
            dc = dc if sign > 0 else -dc
            out[key] = out[key] + dc if key in out else dc
    return DifferentialForm(x.degree + 1, out)


def pullback(form: DifferentialForm, coeff_map, dvar_map) -> DifferentialForm:
    """Pull back along a ring map given on coefficients and on the differentials dv."""
    total = DifferentialForm.zero(form.degree)
    for w, c in form.terms.items():
        piece = DifferentialForm.function(coeff_map(c))
        for v in w:
            piece = piece.wedge(dvar_map(v))
        total = total + piece
    return total


# ---------------------------------------------------------------------------
# Frobenius pullbacks


def _phi_coeff(primes: PrimeSet, k: int, c, D=None):
    p = primes.primes[k]
    if isinstance(c, LocalizedJetElem):
        return localized_phi(primes, p, c)
    if isinstance(c, PadicJetSeries):
        return delta_ring(primes, _QQ, c.D).phi_series(p, c)
    return delta_ring(primes, c.ring, D).phi(p, c)


def frobenius_pullback(form: DifferentialForm, primes: PrimeSet, k: int) -> DifferentialForm:
    """phi_{p_k}^* of a form."""
    sample = next(iter(form.terms.values()), None)
    series = isinstance(sample, PadicJetSeries)
    ring = None
    if sample is not None and not series:
        ring = sample.ring
    cache: dict = {}

    def dvar(v):
        if v not in cache:
            if series:
                img = delta_ring(primes, _QQ, sample.D + 1).phi_image(k, v)
            else:
                img = delta_ring(primes, ring).phi_image(k, v)
            if series:
                s = sample
                cache[v] = DifferentialForm(1, {(u,): PadicJetSeries.from_poly(img.diff(u), s.p, s.N, s.D, s.primes)
                                                for u in img.variables()})
            else:
                cache[v] = d(img)
        return cache[v]

    return pullback(form, lambda c: _phi_coeff(primes, k, c), dvar)


def _ring_of(primes):
    from .exact_algebra import CoeffRing

    return CoeffRing.localized(primes)


def _divide_coeff(c, p: int, times: int):
    if times == 0:
        return c
    if isinstance(c, PadicJetSeries):
        for _ in range(times):
            c = c.divide_by_p()
        return c
    if isinstance(c, LocalizedJetElem):
        return LocalizedJetElem(_divide_poly(c.num, p, times), c.g, c.den, c.frob)
    return _divide_poly(c, p, times)


def _divide_poly(f: JetPoly, p: int, times: int) -> JetPoly:
    m = p ** times
    for c in f.coefficients():
        if vp(c, p) < times:
            raise IntegralityFailure(f"Frobenius pullback not divisible by {p}^{times}")
    return f.exact_div_scalar(m)


def divided_frobenius(form: DifferentialForm, primes: PrimeSet, r) -> DifferentialForm:
    """omega_r = phi^{r*} omega / P^{i r}, applied one prime at a time."""
    out = form
    for k in range(primes.d):
        p = primes.primes[k]
        for _ in range(r[k]):
            out = frobenius_pullback(out, primes, k)
            out = out.map_coeffs(lambda c: _divide_coeff(c, p, form.degree))
    return out


# ---------------------------------------------------------------------------
# conjugate derivations


class ConjugateDerivation:
    """The derivation partial_r on the order-n jet ring, as a table on generators.

    ``table`` gives the source derivation on base variables: name -> value.
    """

    def __init__(self, primes: PrimeSet, table: dict, r, n, D: int | None = None):
        self.primes = primes
        self.table = table
        self.r = tuple(r)
        self.n = tuple(n)
        # degree cap for polynomial tables in coordinates vanishing at the base point
        self.D = D
        self._memo: dict = {}
        sample = next(iter(table.values()))
        self.ring = None if isinstance(sample, PadicJetSeries) else sample.ring
        self.values = {}
        for a in table:
            for s in indices_below(self.n):
                self.values[JetVar(a, s)] = self.value(self.r, s, a)

    def _zero(self):
        sample = next(iter(self.table.values()))
        if isinstance(sample, PadicJetSeries):
            return PadicJetSeries.zero(sample.p, sample.N, sample.D, sample.primes)
        return JetPoly.zero(sample.ring)

    def _phi(self, k, c):
        return _phi_coeff(self.primes, k, c, self.D)

    def _mul(self, a, b):
        if self.D is not None and isinstance(a, JetPoly) and isinstance(b, JetPoly):
            return a.mul_trunc(b, self.D)
        return a * b

    def value(self, r, s, a):
        """partial_r(delta^s T_a) by the recursion on the outermost prime of s."""
        key = (r, s, a)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if any(x < 0 for x in r):
            out = self._zero()
        elif not any(s):
            out = self.table[a] if not any(r) else self._zero()
        else:
            k = next(j for j, x in enumerate(s) if x)
            p = self.primes.primes[k]
            sk = list(s)
            sk[k] -= 1
            sk = tuple(sk)
            y = self._gen(a, sk)
            rk = list(r)
            rk[k] -= 1
            first = self._phi(k, self.value(tuple(rk), sk, a)) if r[k] else self._zero()
            out = first - self._mul(self._pow(y, p - 1), self.value(r, sk, a))
        self._memo[key] = out
        return out

    def _pow(self, y, k):
        if self.D is not None and isinstance(y, JetPoly):
            return y.pow_trunc(k, self.D)
        return y ** k

    def _gen(self, a, s):
        v = JetVar(a, tuple(s))
        sample = next(iter(self.table.values()))
        if isinstance(sample, PadicJetSeries):
            return PadicJetSeries.var(v, sample.p, sample.N, sample.D, sample.primes)
        return JetPoly.var(v, sample.ring)

    def __call__(self, f):
        return self.apply(f)

    def apply(self, f):
        if isinstance(f, LocalizedJetElem):
            return f.apply_derivation(self._apply_poly)
        if isinstance(f, PadicJetSeries):
            return self._apply_series(f)
        return self._apply_poly(f)

    def _val(self, v):
        if v not in self.values:
            if v.base not in self.table or len(v.index) != self.primes.d:
                raise AlgebraError(f"no value of the derivation on {v}")
            self.values[v] = self.value(self.r, v.index, v.base)
        return self.values[v]

    def _apply_poly(self, f: JetPoly) -> JetPoly:
        total = None
        for v in f.variables():
            term = f.diff(v) * self._val(v)
            total = term if total is None else total + term
        if total is None:
            return JetPoly.zero(f.ring)
        return total

    def _apply_series(self, f: PadicJetSeries):
        total = PadicJetSeries.zero(f.p, f.N, f.D - 1, f.primes)
        for v in f.variables():
            total = total + f.diff(v) * self._val(v)
        return total

    def check_integral(self) -> bool:
        """All table values have coefficients in A_0 (or are p-integral series)."""
        for val in self.values.values():
            if isinstance(val, JetPoly) and val.ring.kind == "QQ":
                for c in val.coefficients():
                    if any(vp(c, p) < 0 for p in self.primes):
                        return False
        return True


def conjugate_derivation(primes: PrimeSet, table: dict, r, n) -> ConjugateDerivation:
    return ConjugateDerivation(primes, table, r, n)


def claim_consistency(D: ConjugateDerivation, a: str) -> bool:
    """partial_r(delta_{p_k}(delta^{s-e_k} T)) equals phi_k(partial_{r-e_k} y) - y^(p-1) partial_r y for every k.

    For the outermost prime this is the defining recursion; for the other
    primes delta_{p_k}(delta^{s-e_k} T) is a polynomial that differs from
    delta^s T by commutator corrections, so the check is a real test.
    """
    P = D.primes
    dr = delta_ring(P, D.ring)
    for s in indices_below(D.n):
        for k in range(P.d):
            if not s[k]:
                continue
            p = P.primes[k]
            sk = list(s)
            sk[k] -= 1
            y = JetPoly.var(JetVar(a, tuple(sk)), D.ring)
            Q = dr.gen_delta(k, JetVar(a, tuple(sk)))
            lhs = D.apply(Q)
            rk = list(D.r)
            rk[k] -= 1
            first = _phi_coeff(P, k, D.value(tuple(rk), tuple(sk), a)) if D.r[k] else JetPoly.zero(D.ring)
            rhs = first - y ** (p - 1) * D.value(D.r, tuple(sk), a)
            if lhs != rhs:
                return False
    return True


def pairing(form: DifferentialForm, D: ConjugateDerivation):
    """<sum c dv, D> = sum c D(v)."""
    if form.degree != 1:
        raise AlgebraError("pairing needs a 1-form")
    total = None
    for (v,), c in form.terms.items():
        term = c * D._val(v)
        total = term if total is None else total + term
    return total if total is not None else D._zero()


def df_expansion(f, derivations: dict, forms: dict) -> dict:
    """Coefficients partial_r f and a check that sum (partial_r f) omega_r equals df."""
    coeffs = {r: derivations[r].apply(f) for r in derivations}
    recon = DifferentialForm.zero(1)
    for r, c in coeffs.items():
        recon = recon + forms[r].scale(c)
    if not recon.equals(d(f)):
        raise AlgebraError("df expansion does not reconstruct df")
    return coeffs


def volume_form(forms: list) -> DifferentialForm:
    out = DifferentialForm.function(1) if not forms else forms[0]
    for w in forms[1:]:
        out = out.wedge(w)
    return out


def top_coefficient(form: DifferentialForm, basis: list):
    """Coefficient of d b_1 ^ ... ^ d b_m (in the given order) in a top form."""
    c = form.coeff(tuple(basis))
    return c


def gm_chart(primes: PrimeSet):
    """omega = dx/x and partial = x d/dx on the G_m chart x != 0."""
    from .jet_spaces import localized

    R = _ring_of(primes)
    x = JetPoly.var(JetVar("x", primes.zero), R)
    inv = localized(primes, JetPoly.const(1, R), x, {primes.zero: 1})
    omega = DifferentialForm(1, {(JetVar("x", primes.zero),): inv})
    return omega, {"x": x}


def gm_divided_forms(primes: PrimeSet, n) -> dict:
    omega, _ = gm_chart(primes)
    return {r: divided_frobenius(omega, primes, r) for r in indices_below(n)}


def gm_conjugates(primes: PrimeSet, n) -> dict:
    _, table = gm_chart(primes)
    return {r: ConjugateDerivation(primes, table, r, n) for r in indices_below(n)}


def gram_matrix(forms: dict, derivations: dict) -> dict:
    return {(r, s): pairing(forms[r], derivations[s]) for r in forms for s in derivations}


def is_identity_gram(G: dict) -> bool:
    for (r, s), val in G.items():
        want = 1 if r == s else 0
        if isinstance(val, LocalizedJetElem):
            if not (val - want).is_zero():
                return False
        elif val != want:
            return False
    return True


def defining_relation_holds(D: ConjugateDerivation, base_table: dict) -> bool:
    """partial_r(phi^s T_a) = delta_{rs} P^r phi^s(partial T_a) for all s <= n."""
    P = D.primes
    for a, val in base_table.items():
        T = JetPoly.var(JetVar(a, P.zero), D.ring)
        for s in indices_below(D.n):
            lhs = D.apply(phi_multi(P, s, T))
            if tuple(s) == D.r:
                rhs = phi_multi(P, s, val) * P.power(s)
            else:
                rhs = JetPoly.zero(D.ring)
            if lhs != rhs:
                return False
    return True


def commutation_holds(Ds: dict, primes: PrimeSet, n, names) -> bool:
    """partial_r o phi^s = P^s phi^s o partial_{r-s} on generators delta^i T with i + s <= n."""
    for r, D in Ds.items():
        for s in indices_below(n):
            for a in names:
                for i in indices_below(n):
                    if not mi_le(tuple(x + y for x, y in zip(i, s)), n):
                        continue
                    g = JetPoly.var(JetVar(a, i), D.ring)
                    lhs = D.apply(phi_multi(primes, s, g))
                    if mi_le(s, r):
                        inner = Ds[mi_sub(r, s)].apply(g)
                        rhs = phi_multi(primes, s, inner) * primes.power(s)
                    else:
                        rhs = JetPoly.zero(D.ring)
                    if lhs != rhs:
                        return False
    return True
