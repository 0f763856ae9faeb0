"""Arithmetic Laplacians of G_m and of elliptic curves.

Both are computed in the formal neighborhood of the canonical lift of the
origin, in the uniform coordinates delta^i T (x = 1 + T for G_m, T = x/(2y)
for y^2 = x^3 + a x + b).  Series live in Z/p^N truncated at total degree D,
so every verified identity holds "mod (p^N, deg D)".  Differentiating lowers
the degree cap by one.

For G_m the primitives f_k are also available as functions on the x-chart
(``gm_f_at_point``), which is what the period integrals evaluate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .delta_calculus import delta_ring, phi_multi
from .differential_forms import (
    ConjugateDerivation,
    DifferentialForm,
    divided_frobenius,
    gm_divided_forms,
)
from .exact_algebra import (
    QQ,
    AlgebraError,
    CoeffRing,
    JetPoly,
    JetVar,
    PadicJetSeries,
    PrimeSet,
    indices_below,
    mi_norm,
    vp,
)


class VerificationFailure(AlgebraError):
    """A verified identity failed; treated as a bug."""


class IntegralityFailure(AlgebraError):
    pass


@dataclass
class IdentityReport:
    identity: str
    prime: int
    precision: int
    degree: int
    defect_valuation: int
    detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.defect_valuation >= self.precision

    def as_dict(self) -> dict:
        out = {"identity": self.identity, "prime": self.prime, "precision": self.precision,
               "degree": self.degree, "status": "verified" if self.ok else "failed",
               "defect_valuation": self.defect_valuation}
        out.update(self.detail)
        return out


# ---------------------------------------------------------------------------
# helpers in the formal T-chart


def _T(primes: PrimeSet, name: str = "T", index=None) -> JetPoly:
    return JetPoly.var(JetVar(name, tuple(index) if index is not None else primes.zero), QQ)


def phi_trunc(primes: PrimeSet, s, f: JetPoly, D: int) -> JetPoly:
    """phi^s(f) modulo monomials of degree > D."""
    dr = delta_ring(primes, QQ, D)
    for k in reversed(range(primes.d)):
        for _ in range(s[k]):
            f = dr.phi(primes.primes[k], f)
    return f


def _subsets(ks):
    for m in range(len(ks) + 1):
        yield from itertools.combinations(ks, m)


def _subset_index(primes: PrimeSet, S) -> tuple:
    return tuple(1 if k in S else 0 for k in range(primes.d))


def _series(f: JetPoly, p, N, D, primes):
    return PadicJetSeries.from_poly(f, p, N, D, primes)


def _min_valuation(series_list, N) -> int:
    return min([N] + [s.valuation() for s in series_list])


def _form_defect(a: dict, b: dict, N: int) -> int:
    keys = set(a) | set(b)
    vals = []
    for v in keys:
        if v in a and v in b:
            vals.append((a[v] - b[v]).valuation())
        else:
            vals.append((a.get(v) or b.get(v)).valuation())
    return min([N] + vals)


def series_d(f: PadicJetSeries, variables) -> dict:
    """df as {variable: coefficient series} (degree cap drops by one)."""
    return {v: f.diff(v) for v in variables}


def moebius_decompose(m: int):
    """m = m1 * m2^2 with m1, m2 squarefree and coprime; returns (m1, m2, mu(m1))."""
    if m < 1:
        raise ValueError("m must be positive")
    m1, m2 = 1, 1
    rest = m
    q = 2
    while q * q <= rest or rest > 1:
        if q * q > rest:
            q = rest
        e = 0
        while rest % q == 0:
            rest //= q
            e += 1
        if e >= 3:
            raise ValueError(f"{m} has a cube factor {q}^{e}")
        if e == 1:
            m1 *= q
        elif e == 2:
            m2 *= q
        q += 1
    mu = (-1) ** sum(1 for _ in _prime_factors(m1))
    return m1, m2, mu


def _prime_factors(m):
    q = 2
    while m > 1:
        if m % q == 0:
            yield q
            while m % q == 0:
                m //= q
        q += 1


# ---------------------------------------------------------------------------
# G_m


def gm_psi1_coeffs(p: int, N: int, D: int) -> list:
    """(n, (-1)^(n-1) p^(n-1)/n) for the terms kept in the window."""
    out = []
    for n in range(1, D + 1):
        c = Fraction((-1) ** (n - 1) * p ** (n - 1), n)
        if vp(c, p) < N:
            out.append((n, c))
    return out


def gm_psi1_localized(primes: PrimeSet, k: int, N: int, D: int):
    """psi^1_{p_k} on the x-chart as a localized element (truncated log series)."""
    from .jet_spaces import localized

    R = CoeffRing.rational()
    p = primes.primes[k]
    x = JetPoly.var(JetVar("x", primes.zero), R)
    dx = JetPoly.var(JetVar("x", primes.unit(k)), R)
    total = localized(primes, JetPoly.zero(R), x)
    for n, c in gm_psi1_coeffs(p, N, D):
        total = total + localized(primes, (dx ** n).scale(c), x, {primes.zero: p * n})
    return total


def _horner(coeffs, u: PadicJetSeries) -> PadicJetSeries:
    """sum c_n u^n for (n, c_n) pairs."""
    top = max(n for n, _ in coeffs)
    cmap = dict(coeffs)
    acc = PadicJetSeries.zero(u.p, u.N, u.D, u.primes)
    for n in range(top, 0, -1):
        acc = (acc + cmap.get(n, 0)) * u
    return acc


def gm_f_series(primes: PrimeSet, k: int, N: int, D: int) -> PadicJetSeries:
    """f_k = prod_{l != k}(1 - phi_l/p_l) psi^1_{p_k}, expanded at x = 1 + T."""
    p = primes.primes[k]
    dr = delta_ring(primes, QQ, D)
    x = _T(primes) + 1
    xk = dr.delta(p, x)
    coeffs = gm_psi1_coeffs(p, N, D)
    others = [l for l in range(primes.d) if l != k]
    parts = []
    for S in _subsets(others):
        s = _subset_index(primes, S)
        a = _series(phi_trunc(primes, s, xk, D), p, N, D, primes)
        b = _series(phi_trunc(primes, s, x, D), p, N, D, primes)
        u = a * b.inverse() ** p
        coef = Fraction((-1) ** len(S), math.prod(primes.primes[l] for l in S))
        parts.append(_horner(coeffs, u).scale(coef))
    total = parts[0]
    for s_ in parts[1:]:
        total = total + s_
    return total


def gm_omega_r_series(primes: PrimeSet, r, p: int, N: int, D: int) -> dict:
    """omega_r = d(phi^r x)/(P^r phi^r x) at x = 1 + T; coefficients known to degree D."""
    g = phi_trunc(primes, r, _T(primes) + 1, D + 1)
    inv = _series(g, p, N, D, primes).inverse()
    m = primes.power(r)
    out = {}
    for v in _jet_vars(primes, "T", r):
        dv = g.diff(v).exact_div_scalar(m)
        out[v] = _series(dv, p, N, D, primes) * inv
    return out


def _jet_vars(primes: PrimeSet, name: str, n) -> list:
    return [JetVar(name, i) for i in indices_below(n)]


def _form_combination(parts) -> dict:
    out: dict = {}
    for c, form in parts:
        for v, s in form.items():
            term = s.scale(c)
            out[v] = out[v] + term if v in out else term
    return out


def gm_omega_e_series(primes: PrimeSet, p: int, N: int, D: int) -> dict:
    e = primes.e
    return _form_combination([(-((-1) ** mi_norm(r)), gm_omega_r_series(primes, r, p, N, D))
                              for r in indices_below(e)])


def gm_omega_e(primes: PrimeSet) -> DifferentialForm:
    """omega^(e) = -sum_{r <= e} (-1)^{|r|} omega_r on the x-chart (exact)."""
    forms = gm_divided_forms(primes, primes.e)
    out = DifferentialForm.zero(1)
    for r, w in forms.items():
        out = out + w.scale(-((-1) ** mi_norm(r)))
    return out


def gm_omega_e_moebius(primes: PrimeSet) -> DifferentialForm:
    """-sum_{m | p_1...p_d} mu(m) omega_[m]."""
    forms = gm_divided_forms(primes, primes.e)
    out = DifferentialForm.zero(1)
    for r, w in forms.items():
        m = primes.power(r)
        _, _, mu = moebius_decompose(m)
        out = out + w.scale(-mu)
    return out


gm_psi1 = gm_psi1_localized


def gm_omega_closed(primes: PrimeSet) -> bool:
    """d omega^(e) = 0 on the x-chart."""
    from .differential_forms import exterior_derivative

    return exterior_derivative(gm_omega_e(primes)).is_zero()


def gm_psi1_derivative_check(p: int, N: int, D: int) -> IdentityReport:
    """Exact x-chart check of d psi^1 = -(1 - phi^*/p) omega (single prime).

    The difference is d of the dropped tail of the log series, so its p-adic
    valuation must be at least N.
    """
    from .differential_forms import d, frobenius_pullback, gm_chart

    P = PrimeSet([p])
    psi = gm_psi1_localized(P, 0, N, D)
    omega, _ = gm_chart(P)
    omega = omega.map_coeffs(lambda c: c.__class__(c.num.with_ring(QQ), c.g.with_ring(QQ), c.den, c.frob))
    phi_w = frobenius_pullback(omega, P, 0).map_coeffs(lambda c: c.scale(Fraction(1, p)))
    rhs = (omega - phi_w).scale(-1)
    diff = d(psi) - rhs
    v = min([N] + [int(min(c.valuation(p), N)) for c in diff.terms.values()])
    return IdentityReport("dpsi1=-(1-phi/p)omega", p, N, D, v, {"chart": "x"})


@dataclass
class GmLaplacianData:
    primes: PrimeSet
    N: int
    D: int
    f: list
    omega_e: DifferentialForm
    reports: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)


def gm_expected_partial(r) -> int:
    """Coefficient of omega_r in omega^(e), i.e. the value of partial_r f_k."""
    return -((-1) ** mi_norm(r))


def gm_psi_e_m_0(primes: PrimeSet, D: int) -> JetPoly:
    """-(prod_l (1 - phi_l/p_l)) l(T) over Q, l(T) = sum (-1)^(n-1) T^n/n, to degree D."""
    T = _T(primes)
    l = JetPoly.from_terms([(((JetVar("T", primes.zero), n),), Fraction((-1) ** (n - 1), n)) for n in range(1, D + 1)])
    out = l
    for k in range(primes.d):
        p = primes.primes[k]
        out = out - phi_trunc(primes, primes.unit(k), out, D).scale(Fraction(1, p))
    out = -out
    for c in out.coefficients():
        if any(vp(c, p) < 0 for p in primes):
            raise IntegralityFailure(f"coefficient {c} is not in A_0")
    del T
    return out


def gm_partial_checks(primes: PrimeSet, k: int, f: PadicJetSeries, N: int, D: int) -> list:
    e = primes.e
    table = {"T": _T(primes) + 1}
    reports = []
    for r in indices_below(e):
        Dr = ConjugateDerivation(primes, table, r, e, D=D)
        val = Dr.apply(f)
        want = gm_expected_partial(r)
        v = (val - want).valuation()
        literal = (val - (-1) ** mi_norm(r)).valuation()
        reports.append(IdentityReport("partial_r f_k", primes.primes[k], N, D - 1, v,
                                      {"r": list(r), "value": want,
                                       "literal_sign_holds": literal >= N}))
    return reports


def gm_laplacian(primes: PrimeSet, N: int = 8, D: int = 12, partials: bool = True, origin: bool = True) -> GmLaplacianData:
    e = primes.e
    fs = []
    reports = []
    psi0 = gm_psi_e_m_0(primes, D) if origin else None
    for k in range(primes.d):
        p = primes.primes[k]
        f = gm_f_series(primes, k, N, D)
        fs.append(f)
        df = series_d(f, _jet_vars(primes, "T", e))
        om = gm_omega_e_series(primes, p, N, D - 1)
        reports.append(IdentityReport("df_k=omega_e", p, N, D, _form_defect(df, om, N), {"k": k + 1}))
        if partials:
            reports.extend(gm_partial_checks(primes, k, f, N, D))
        if origin:
            s0 = _series(psi0, p, N, D, primes)
            reports.append(IdentityReport("f_k=psi_e_m_0", p, N, D, (f - s0).valuation(), {"k": k + 1}))
    return GmLaplacianData(primes, N, D, fs, gm_omega_e(primes), reports)


def _log_terms(p: int, N: int) -> int:
    """Past this n every p^(n-1)/n has valuation >= N."""
    n = N + 1
    while any(m - 1 - vp(m, p) < N for m in range(n + 1, n * p + 2)):
        n += 1
    return n


def gm_f_at_point(primes: PrimeSet, k: int, values: dict, N: int) -> int:
    """f_k evaluated at a jet point of the x-chart (exact rationals), as a residue mod p_k^N."""
    p = primes.primes[k]
    q = p ** N
    R = CoeffRing.localized(primes)
    x = JetPoly.var(JetVar("x", primes.zero), R)
    xk = JetPoly.var(JetVar("x", primes.unit(k)), R)
    coeffs = [(n, Fraction((-1) ** (n - 1) * p ** (n - 1), n)) for n in range(1, _log_terms(p, N) + 1)]
    coeffs = [(n, c) for n, c in coeffs if vp(c, p) < N]
    others = [l for l in range(primes.d) if l != k]
    total = Fraction(0)
    for S in _subsets(others):
        s = _subset_index(primes, S)
        a = Fraction(phi_multi(primes, s, xk).evaluate(values))
        b = Fraction(phi_multi(primes, s, x).evaluate(values))
        u = a / b ** p
        if vp(u, p) < 0:
            raise AlgebraError("point is not in the p-adic domain of f_k")
        val = sum((c * u ** n for n, c in coeffs), Fraction(0))
        total += val / math.prod(primes.primes[l] for l in S) * (-1) ** len(S)
    return total.numerator * pow(total.denominator, -1, q) % q


# ---------------------------------------------------------------------------
# formal groups


@dataclass
class FormalGroup:
    name: str
    D: int
    F: JetPoly          # in T1, T2
    log_coeffs: list    # c_1 .. c_D, c_1 = 1

    def log_poly(self, v: JetVar) -> JetPoly:
        return JetPoly.from_terms([(((v, n),), c) for n, c in enumerate(self.log_coeffs, 1) if c])

    def log_derivative(self, v: JetVar) -> JetPoly:
        return JetPoly.from_terms([(((v, n - 1),) if n > 1 else (), c * n)
                                   for n, c in enumerate(self.log_coeffs, 1) if c])

    def check(self) -> dict:
        D = self.D
        T1, T2, T3 = (JetVar(f"T{i}") for i in (1, 2, 3))
        t1, t2, t3 = (JetPoly.var(v) for v in (T1, T2, T3))
        F = self.F
        ident = F.substitute({T2: JetPoly.zero()}, D) == t1
        comm = F == F.substitute({T1: t2, T2: t1}, D)
        left = F.substitute({T1: F, T2: t3}, D)
        right = F.substitute({T2: F.substitute({T1: t2, T2: t3}, D), T1: t1}, D)
        assoc = left.truncate(D) == right.truncate(D)
        lx = self.log_poly(JetVar("U"))
        lhs = lx.substitute({JetVar("U"): F}, D)
        rhs = self.log_poly(T1) + self.log_poly(T2)
        additive = lhs.truncate(D) == rhs.truncate(D)
        return {"identity": ident, "commutative": comm, "associative": assoc,
                "log_additive": additive, "c1_is_1": self.log_coeffs[0] == 1}


def gm_formal_group(D: int = 10) -> FormalGroup:
    t1, t2 = JetPoly.var(JetVar("T1")), JetPoly.var(JetVar("T2"))
    return FormalGroup("Gm", D, t1 + t2 + t1 * t2, [Fraction((-1) ** (n - 1), n) for n in range(1, D + 1)])


def _uinv(f: JetPoly, D: int) -> JetPoly:
    """1/f for a series with invertible constant term, to degree D."""
    c0 = f.constant_term()
    if not c0:
        raise AlgebraError("constant term is zero")
    h = (f - c0).scale(Fraction(1, c0))
    acc = JetPoly.const(1)
    term = JetPoly.const(1)
    for _ in range(D):
        term = term.mul_trunc(-h, D)
        if term.is_zero():
            break
        acc = acc + term
    return acc.scale(Fraction(1, c0))


@dataclass
class EllipticCurve:
    a: int
    b: int

    @property
    def disc(self) -> int:
        return -16 * (4 * self.a ** 3 + 27 * self.b ** 2)

    def good_at(self, p: int) -> bool:
        return (4 * self.a ** 3 + 27 * self.b ** 2) % p != 0

    def w_series(self, D: int) -> JetPoly:
        """w(z) = z^3 + a z w^2 + b w^3 with z = -x/y, w = -1/y."""
        z = JetPoly.var(JetVar("z"))
        w = z ** 3
        for _ in range(D):
            nw = (z ** 3 + (z * w.mul_trunc(w, D)).scale(self.a).truncate(D)
                  + w.mul_trunc(w, D).mul_trunc(w, D).scale(self.b)).truncate(D)
            if nw == w:
                break
            w = nw
        return w

    def h_series(self, D: int) -> JetPoly:
        """h = w/z^3 to degree D."""
        z = JetVar("z")
        w = self.w_series(D + 3)
        return JetPoly.from_terms([(((z, m[0][1] - 3),) if m[0][1] > 3 else (), c) for m, c in w.terms()])


def ec_trace(a: int, b: int, p: int) -> int:
    """a_p = p + 1 - #E(F_p), by counting points (including infinity)."""
    if p < 5:
        raise ValueError("primes must be >= 5")
    if (4 * a ** 3 + 27 * b ** 2) % p == 0:
        raise AlgebraError(f"singular reduction at {p}")
    squares = {}
    for y in range(p):
        squares[y * y % p] = squares.get(y * y % p, 0) + 1
    count = 1
    for x in range(p):
        count += squares.get((x ** 3 + a * x + b) % p, 0)
    return p + 1 - count


def hasse_ok(ap: int, p: int) -> bool:
    return ap * ap <= 4 * p


def ec_formal_group(a: int, b: int, D: int = 10) -> FormalGroup:
    """Group law in T = x/(2y) = -z/2 and the logarithm normalized by c_1 = 1."""
    E = EllipticCurve(a, b)
    z = JetVar("z")
    w = E.w_series(D + 3)
    A = {m[0][1]: c for m, c in w.terms()}
    z1, z2 = JetPoly.var(JetVar("z1")), JetPoly.var(JetVar("z2"))
    # lambda = (w(z2) - w(z1))/(z2 - z1)
    lam = JetPoly.zero()
    for n, c in A.items():
        if n - 1 > D:
            continue
        lam = lam + JetPoly.from_terms([(((JetVar("z1"), i), (JetVar("z2"), n - 1 - i)), c) for i in range(n)])
    w1 = w.substitute({z: z1}, D)
    nu = w1 - lam.mul_trunc(z1, D)
    lam2 = lam.mul_trunc(lam, D)
    num = (lam.mul_trunc(nu, D).scale(2 * a) + lam2.mul_trunc(nu, D).scale(3 * b)).truncate(D)
    den = JetPoly.const(1) + lam2.scale(a) + lam2.mul_trunc(lam, D).scale(b)
    h = den - 1
    inv = JetPoly.const(1)
    term = JetPoly.const(1)
    for _ in range(D):
        term = term.mul_trunc(-h, D)
        if term.is_zero():
            break
        inv = inv + term
    Fz = (z1 + z2 + num.mul_trunc(inv, D)).truncate(D)
    T1, T2 = JetPoly.var(JetVar("T1")), JetPoly.var(JetVar("T2"))
    FT = Fz.substitute({JetVar("z1"): T1.scale(-2), JetVar("z2"): T2.scale(-2)}, D).scale(Fraction(-1, 2))
    lp = ec_log_derivative(E, D)
    coeffs = [lp.coeff(((JetVar("T"), n - 1),) if n > 1 else ()) / Fraction(n) for n in range(1, D + 1)]
    return FormalGroup(f"E({a},{b})", D, FT, [Fraction(c) if isinstance(c, Fraction) else Fraction(c) for c in coeffs])


def ec_log_derivative(E: EllipticCurve, D: int) -> JetPoly:
    """l_E'(T) from dx/y = (2 + z h'/h) dz and dz = -2 dT, so dx/y = -4 l_E'(T) dT."""
    z = JetVar("z")
    h = E.h_series(D)
    zh = JetPoly.var(z) * h.diff(z)
    q = (zh.mul_trunc(_uinv(h, D), D) + 2).scale(Fraction(1, 2))
    return q.substitute({z: JetPoly.var(JetVar("T")).scale(-2)}, D - 1).truncate(D - 1)


def ec_log_derivative_alt(E: EllipticCurve, D: int) -> JetPoly:
    """Second route: dx/y = 2 dy/(3x^2 + a) = 2(3h + z h')/(3 + a z^4 h^2) dz."""
    z = JetVar("z")
    h = E.h_series(D)
    zv = JetPoly.var(z)
    num = h.scale(3) + zv * h.diff(z)
    den = JetPoly.const(3) + (zv ** 4 * h.mul_trunc(h, D)).scale(E.a)
    q = num.mul_trunc(_uinv(den.truncate(D), D), D)
    return q.substitute({z: JetPoly.var(JetVar("T")).scale(-2)}, D - 1).truncate(D - 1)


# ---------------------------------------------------------------------------
# elliptic Laplacian


def ec_log(E: EllipticCurve, primes: PrimeSet, D: int) -> JetPoly:
    fg = ec_formal_group(E.a, E.b, D)
    return fg.log_poly(JetVar("T", primes.zero))


def ec_traces(E: EllipticCurve, primes: PrimeSet) -> list:
    return [ec_trace(E.a, E.b, p) for p in primes]


def _ec_operator(primes: PrimeSet, l: int, ap: int, f: JetPoly, D: int) -> JetPoly:
    """(1 - a_p phi/p + phi^2/p) f over Q."""
    p = primes.primes[l]
    f1 = phi_trunc(primes, primes.unit(l), f, D)
    f2 = phi_trunc(primes, primes.unit(l), f1, D)
    return f - f1.scale(Fraction(ap, p)) + f2.scale(Fraction(1, p))


def ec_psi2_exact(E: EllipticCurve, primes: PrimeSet, k: int, D: int):
    """(Q, psi2) with Q = (phi^2 - a_p phi + p) l_E and psi2 = Q/p, over Q."""
    p = primes.primes[k]
    ap = ec_trace(E.a, E.b, p)
    l = ec_log(E, primes, D)
    f1 = phi_trunc(primes, primes.unit(k), l, D)
    f2 = phi_trunc(primes, primes.unit(k), f1, D)
    Q = f2 - f1.scale(ap) + l.scale(p)
    psi = Q.scale(Fraction(1, p))
    for c in psi.coefficients():
        if vp(c, p) < 0:
            raise IntegralityFailure(f"psi^2 coefficient {c} is not {p}-integral")
    return Q, psi


def ec_psi2(a: int, b: int, p: int, N: int, D: int, primes: PrimeSet | None = None) -> PadicJetSeries:
    primes = primes or PrimeSet([p])
    E = EllipticCurve(a, b)
    _, psi = ec_psi2_exact(E, primes, primes.index(p), D)
    return _series(psi, p, N, D, primes)


def ec_omega_r_series(E: EllipticCurve, primes: PrimeSet, r, p: int, N: int, D: int, lp: JetPoly) -> dict:
    """omega_r = phi^r(l'(T)) d(phi^r T)/P^r, coefficients to degree D."""
    T = _T(primes)
    g = phi_trunc(primes, r, T, D + 1)
    coef = _series(phi_trunc(primes, r, lp, D), p, N, D, primes)
    m = primes.power(r)
    out = {}
    for v in _jet_vars(primes, "T", r):
        dv = g.diff(v).exact_div_scalar(m)
        out[v] = _series(dv, p, N, D, primes) * coef
    return out


def ec_coefficients(primes: PrimeSet, traces: list) -> dict:
    """Coefficient of omega_r in prod_l (1 - a_l phi^*/p_l + p_l (phi^*/p_l)^2) omega."""
    out = {}
    for r in indices_below(tuple(2 for _ in primes)):
        c = 1
        for l, rl in enumerate(r):
            c *= (1, -traces[l], primes.primes[l])[rl]
        out[r] = c
    return out


def ec_coefficients_moebius(primes: PrimeSet, traces: list) -> dict:
    """mu(m') m'' a_{m'} with m = P^r = m' m''^2."""
    out = {}
    tr = dict(zip(primes.primes, traces))
    for r in indices_below(tuple(2 for _ in primes)):
        m = primes.power(r)
        m1, m2, mu = moebius_decompose(m)
        am = math.prod(tr[q] for q in _prime_factors(m1))
        out[r] = mu * m2 * am
    return out


def ec_omega_2e_series(E, primes, traces, p, N, D, lp) -> dict:
    coeffs = ec_coefficients(primes, traces)
    return _form_combination([(c, ec_omega_r_series(E, primes, r, p, N, D, lp))
                              for r, c in coeffs.items() if c])


@dataclass
class EcLaplacianData:
    curve: EllipticCurve
    primes: PrimeSet
    N: int
    D: int
    traces: list
    psi2: list
    f: list
    reports: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)


def ec_laplacian(a: int, b: int, primes: PrimeSet, N: int = 6, D: int = 10, partials: bool = True) -> EcLaplacianData:
    E = EllipticCurve(a, b)
    for p in primes:
        if p < 5:
            raise ValueError("all primes must be >= 5")
        if not E.good_at(p):
            raise AlgebraError(f"bad reduction at {p}")
    traces = ec_traces(E, primes)
    two_e = tuple(2 for _ in primes)
    lp = ec_log(E, primes, D).diff(JetVar("T", primes.zero))
    reports = []
    psis, fs = [], []
    if ec_coefficients(primes, traces) != ec_coefficients_moebius(primes, traces):
        raise VerificationFailure("Moebius expansion disagrees with the product expansion")
    full = ec_log(E, primes, D)
    for l in range(primes.d):
        full = _ec_operator(primes, l, traces[l], full, D)
    for k in range(primes.d):
        p = primes.primes[k]
        Q, psi = ec_psi2_exact(E, primes, k, D)
        s = _series(psi, p, N, D, primes)
        psis.append(s)
        s2 = _series(Q, p, N + 1, D, primes).divide_by_p()
        reports.append(IdentityReport("psi2=Q/p", p, N, D, (s - s2).valuation(),
                                      {"integral": True, "vanishes_at_origin": s.constant_term() == 0}))
        f = psi
        for l in range(primes.d):
            if l != k:
                f = _ec_operator(primes, l, traces[l], f, D)
        fs_ = _series(f, p, N, D, primes)
        fs.append(fs_)
        df = series_d(fs_, _jet_vars(primes, "T", two_e))
        om = ec_omega_2e_series(E, primes, traces, p, N, D - 1, lp)
        reports.append(IdentityReport("df_k=omega_2e", p, N, D, _form_defect(df, om, N), {"k": k + 1}))
        reports.append(IdentityReport("f_k=psi_2e_E_0", p, N, D, (fs_ - _series(full, p, N, D, primes)).valuation(),
                                      {"k": k + 1}))
        if partials:
            reports.extend(ec_partial_checks(E, primes, k, fs_, traces, lp, N, D))
    return EcLaplacianData(E, primes, N, D, traces, psis, fs, reports)


def ec_partial_checks(E, primes, k, f, traces, lp, N, D) -> list:
    p = primes.primes[k]
    inv = _series(lp, p, N, D, primes).inverse()
    table = {"T": inv}
    coeffs = ec_coefficients(primes, traces)
    two_e = tuple(2 for _ in primes)
    out = []
    for r in indices_below(two_e):
        Dr = ConjugateDerivation(primes, table, r, two_e)
        val = Dr.apply(f)
        v = (val - coeffs[r]).valuation()
        out.append(IdentityReport("partial_r f_k", p, N, D - 1, v, {"r": list(r), "value": coeffs[r]}))
    return out


# ---------------------------------------------------------------------------
# wedge absorption


def gm_wedge_absorption(primes: PrimeSet):
    """wedge_{r <= e} omega_r = sign * omega^(e) ^ wedge_{0 != r <= e} omega_r on the x-chart."""
    forms = gm_divided_forms(primes, primes.e)
    order = indices_below(primes.e)
    full = forms[order[0]]
    for r in order[1:]:
        full = full.wedge(forms[r])
    rest = None
    for r in order[1:]:
        rest = forms[r] if rest is None else rest.wedge(forms[r])
    oe = gm_omega_e(primes)
    other = oe.wedge(rest) if rest is not None else oe
    for sign in (1, -1):
        if full.equals(other.scale(sign)):
            return sign
    return 0


def ec_wedge_absorption(a: int, b: int, p: int, N: int, D: int):
    """omega_0 ^ omega_1 ^ omega_2 = sign * omega^(2e) ^ omega_1 ^ omega_2 mod (p^N, deg D)."""
    P = PrimeSet([p])
    E = EllipticCurve(a, b)
    ap = ec_trace(a, b, p)
    lp = ec_log(E, P, D + 1).diff(JetVar("T", P.zero))
    ws = [DifferentialForm(1, {(v,): s for v, s in ec_omega_r_series(E, P, (i,), p, N, D, lp).items()})
          for i in range(3)]
    o2 = DifferentialForm(1, {(v,): s for v, s in ec_omega_2e_series(E, P, [ap], p, N, D, lp).items()})
    full = ws[0].wedge(ws[1]).wedge(ws[2])
    other = o2.wedge(ws[1]).wedge(ws[2])
    for sign in (1, -1):
        if full.equals(other.scale(sign)):
            return sign
    return 0


def ec_divided_frobenius_crosscheck(a: int, b: int, p: int, N: int, D: int) -> bool:
    """omega_1 via the generic divided Frobenius (dividing series by p) matches the exact route."""
    P = PrimeSet([p])
    E = EllipticCurve(a, b)
    lp = ec_log(E, P, D + 1).diff(JetVar("T", P.zero))
    T = JetVar("T", P.zero)
    base = DifferentialForm(1, {(T,): _series(lp, p, N + 1, D, P)})
    w1 = divided_frobenius(base, P, (1,))
    exact = ec_omega_r_series(E, P, (1,), p, N, D, lp)
    return all((w1.terms.get((v,), PadicJetSeries.zero(p, N, D, P)) - s).valuation() >= N
               for v, s in exact.items())


# ---------------------------------------------------------------------------
# invariance on G_m


def _pull_series(coeff: PadicJetSeries, images: dict) -> PadicJetSeries:
    return coeff.substitute(images)


def gm_invariance_check(form: dict, primes: PrimeSet, p: int, N: int, D: int) -> int:
    """Valuation of mu^* w - pr_1^* w - pr_2^* w for a 1-form w = {T-jet: coefficient series}.

    mu is the group law F = T1 + T2 + T1 T2 prolonged to jets; returns N when
    the defect vanishes in the window.
    """
    dr = delta_ring(primes, QQ, D + 1)
    n = tuple(max(v.index[k] for v in form) if form else 0 for k in range(primes.d))
    t1 = JetPoly.var(JetVar("T1", primes.zero), QQ)
    t2 = JetPoly.var(JetVar("T2", primes.zero), QQ)
    F = t1 + t2 + t1 * t2
    mu_img, pr1, pr2 = {}, {}, {}
    for i in indices_below(n):
        g = F
        for k in reversed(range(primes.d)):
            for _ in range(i[k]):
                g = dr.delta(primes.primes[k], g)
        mu_img[JetVar("T", i)] = g.truncate(D + 1)
        pr1[JetVar("T", i)] = JetPoly.var(JetVar("T1", i), QQ)
        pr2[JetVar("T", i)] = JetPoly.var(JetVar("T2", i), QQ)
    total: dict = {}

    def add(dct, key, val):
        dct[key] = dct[key] + val if key in dct else val

    for sign, images in ((1, mu_img), (-1, pr1), (-1, pr2)):
        simg = {v: _series(g, p, N, D, primes) for v, g in images.items()}
        for v, c in form.items():
            cc = _pull_series(c, simg)
            img = images[v]
            for u in img.variables():
                term = cc * _series(img.diff(u), p, N, D, primes)
                add(total, u, term.scale(sign))
    return min([N] + [s.valuation() for s in total.values()])


def gm_x_dx_series(primes: PrimeSet, p: int, N: int, D: int) -> dict:
    """x dx = (1 + T) dT."""
    return {JetVar("T", primes.zero): _series(_T(primes) + 1, p, N, D, primes)}


def wedge_absorption_check(kind: str, primes: PrimeSet, N: int = 6, D: int = 10, a: int = 1, b: int = 1) -> dict:
    if kind == "gm":
        sign = gm_wedge_absorption(primes)
        return {"identity": "wedge_absorption", "kind": "gm", "primes": list(primes.primes),
                "status": "verified" if sign else "failed", "sign": sign, "exact": True}
    if primes.d != 1:
        raise ValueError("elliptic wedge absorption is implemented for a single prime")
    p = primes.primes[0]
    sign = ec_wedge_absorption(a, b, p, N, D)
    return {"identity": "wedge_absorption", "kind": "ec", "primes": [p], "precision": N, "degree": D,
            "status": "verified" if sign else "failed", "sign": sign, "exact": False}
