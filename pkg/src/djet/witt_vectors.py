"""p-typical Witt vectors of finite length.

The universal sum and product polynomials are obtained from the ghost
identities by recursion over Z with an exact division by p^i at each step.
Coordinates may live in Z/m, in Q (ints and Fractions) or be JetPoly symbols.
"""

from __future__ import annotations

import itertools
import threading
from fractions import Fraction

from .exact_algebra import QQ, AlgebraError, JetPoly, JetVar, _unpack, is_prime, poly_sum, vp


class IntegralityFailure(AlgebraError):
    """A universal Witt polynomial came out non-integral (a bug, never expected)."""


class EnumerationBoundExceeded(AlgebraError):
    pass


def xvar(i: int) -> JetVar:
    return JetVar(f"X{i}")


def yvar(i: int) -> JetVar:
    return JetVar(f"Y{i}")


def _int_div(f: JetPoly, m: int) -> JetPoly:
    out = {}
    for e, c in f.t.items():
        if isinstance(c, Fraction) or c % m:
            raise IntegralityFailure(f"coefficient {c} not divisible by {m}")
        out[e] = c // m
    return JetPoly(f.gens, out, f.ring)


def ghost_poly(p: int, i: int, name: str = "X") -> JetPoly:
    """w_i = sum_{j<=i} p^j X_j^(p^(i-j))."""
    parts = [JetPoly.var(JetVar(f"{name}{j}")) ** (p ** (i - j)) * p ** j for j in range(i + 1)]
    return poly_sum(parts)


class WittLaw:
    """Universal polynomials S_0..S_n and P_0..P_n for the prime p."""

    def __init__(self, p: int, n: int):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.n = n
        self.sum_polys = self._solve(lambda i: ghost_poly(p, i, "X") + ghost_poly(p, i, "Y"))
        self.prod_polys = self._solve(lambda i: ghost_poly(p, i, "X") * ghost_poly(p, i, "Y"))

    def _solve(self, target) -> tuple:
        # Q_i = (target_i - sum_{j<i} p^j Q_j^(p^(i-j))) / p^i
        p = self.p
        out = []
        powers: list = []  # powers[j] holds Q_j^(p^(i-j)) for the current i
        for i in range(self.n + 1):
            powers = [q ** p for q in powers]
            acc = target(i)
            for j, qp in enumerate(powers):
                acc = acc - qp * p ** j
            q = _int_div(acc, p ** i)
            out.append(q)
            powers.append(q)
        return tuple(out)

    def check_integral(self) -> bool:
        for f in self.sum_polys + self.prod_polys:
            for c in f.coefficients():
                if isinstance(c, Fraction):
                    return False
        return True


_LAWS: dict = {}
_LAW_LOCK = threading.Lock()


def witt_law(p: int, n: int) -> WittLaw:
    key = (p, n)
    law = _LAWS.get(key)
    if law is None:
        law = WittLaw(p, n)
        with _LAW_LOCK:
            law = _LAWS.setdefault(key, law)
    return law


def _eval(f: JetPoly, values: dict, modulus: int | None):
    """Evaluate an integer polynomial; values may be numbers or JetPoly."""
    n = len(f.gens)
    vals = [values[v] for v in f.gens]
    cache: dict = {}

    def pw(i, k):
        key = (i, k)
        r = cache.get(key)
        if r is None:
            r = vals[i] ** k if modulus is None else pow(vals[i], k, modulus)
            cache[key] = r
        return r

    total = 0
    for e, c in f.t.items():
        term = c
        for i, k in enumerate(_unpack(e, n)):
            if k:
                term = term * pw(i, k)
                if modulus is not None:
                    term %= modulus
        total = total + term
    if modulus is not None:
        return total % modulus
    if isinstance(total, Fraction) and total.denominator == 1:
        return total.numerator
    return total


class WittVector:
    """(x_0, ..., x_n) in W_n(A); ``modulus`` selects A = Z/m, None means Q or symbols."""

    __slots__ = ("p", "coords", "modulus")

    def __init__(self, p: int, coords, modulus: int | None = None):
        self.p = p
        self.modulus = modulus
        coords = tuple(coords)
        if modulus is not None:
            coords = tuple(c % modulus for c in coords)
        self.coords = coords

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    def _check(self, other: "WittVector"):
        if (self.p, self.n, self.modulus) != (other.p, other.n, other.modulus):
            raise AlgebraError("Witt vectors of different shape")

    def _apply(self, polys, other) -> "WittVector":
        self._check(other)
        values = {}
        for i, (a, b) in enumerate(zip(self.coords, other.coords)):
            values[xvar(i)] = a
            values[yvar(i)] = b
        return WittVector(self.p, [_eval(f, values, self.modulus) for f in polys], self.modulus)

    def __add__(self, other):
        return self._apply(witt_law(self.p, self.n).sum_polys, other)

    def __mul__(self, other):
        return self._apply(witt_law(self.p, self.n).prod_polys, other)

    def __neg__(self):
        return self.from_int(-1) * self

    def __sub__(self, other):
        return self + (-other)

    def __pow__(self, k: int):
        out = self.from_int(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, WittVector):
            return NotImplemented
        return (self.p, self.modulus) == (other.p, other.modulus) and self.coords == other.coords

    def __hash__(self):
        return hash((self.p, self.modulus, self.coords))

    def __repr__(self):
        return f"WittVector(p={self.p}, {self.coords}, mod={self.modulus})"

    def from_int(self, c: int) -> "WittVector":
        return witt_from_int(self.p, self.n, c, self.modulus)

    def truncate(self, n: int) -> "WittVector":
        return WittVector(self.p, self.coords[: n + 1], self.modulus)


def zero_vector(p: int, n: int, modulus=None) -> WittVector:
    return WittVector(p, [0] * (n + 1), modulus)


def teichmuller(p: int, n: int, c, modulus=None) -> WittVector:
    return WittVector(p, [c] + [0] * n, modulus)


def ghost(w: WittVector) -> tuple:
    p = w.p
    out = []
    for i in range(w.n + 1):
        s = 0
        for j in range(i + 1):
            x = w.coords[j]
            term = (x ** (p ** (i - j)) if w.modulus is None else pow(x, p ** (i - j), w.modulus)) * p ** j
            s = s + term
        out.append(s % w.modulus if w.modulus is not None else s)
    return tuple(out)


def from_ghost(p: int, values, exact: bool = True) -> tuple:
    """Invert the ghost map over a p-torsion-free ring (numbers or JetPoly)."""
    coords: list = []
    for i, w in enumerate(values):
        acc = w
        for j, x in enumerate(coords):
            acc = acc - x ** (p ** (i - j)) * p ** j
        coords.append(_divide(acc, p ** i, exact))
    return tuple(coords)


def _divide(a, m: int, exact: bool):
    if isinstance(a, JetPoly):
        if exact:
            for c in a.coefficients():
                if vp(c, m if is_prime(m) else _prime_of(m)) < _exp_of(m):
                    raise AlgebraError("non-divisible ghost component (p-torsion input?)")
        return a.exact_div_scalar(m)
    q = Fraction(a) / m
    if exact and q.denominator % _prime_of(m) == 0:
        raise AlgebraError("non-divisible ghost component (p-torsion input?)")
    return q.numerator if q.denominator == 1 else q


def _prime_of(m: int) -> int:
    if m == 1:
        return 2
    for q in range(2, m + 1):
        if m % q == 0:
            return q
    return m


def _exp_of(m: int) -> int:
    if m == 1:
        return 0
    p = _prime_of(m)
    k = 0
    while m % p == 0:
        m //= p
        k += 1
    return k


def witt_from_int(p: int, n: int, c: int, modulus=None) -> WittVector:
    """The image of the integer c in W_n (ghost components all equal to c)."""
    coords = from_ghost(p, [c] * (n + 1))
    return WittVector(p, coords, modulus)


def witt_frobenius_delta(w: WittVector):
    """(F(w), delta_W(w)) in W_{n-1}, for a p-torsion-free coefficient ring."""
    if w.modulus is not None:
        raise AlgebraError("Frobenius/delta need a p-torsion-free coefficient ring")
    if w.n < 1:
        raise AlgebraError("need length n >= 1")
    p = w.p
    g = ghost(w)
    fg = g[1:]
    F = WittVector(p, from_ghost(p, fg), None)
    dg = [_divide(fg[i] - g[i] ** p, p, True) for i in range(w.n)]
    return F, WittVector(p, from_ghost(p, dg), None)


def symbolic_vector(p: int, n: int, name: str = "a") -> WittVector:
    return WittVector(p, [JetPoly.var(JetVar(f"{name}{i}")) for i in range(n + 1)])


_DJ: dict = {}


def delta_coordinate_polys(p: int, n: int) -> tuple:
    """J_i(a_0..a_i) = delta_W^i(a)_0 for i <= n, integer polynomials.

    These realize the comparison X(W_n(A)) -> J^n(X)(A): a Witt point a goes to
    the jet point with T-coordinates (J_0(a), ..., J_n(a)).
    """
    key = (p, n)
    if key in _DJ:
        return _DJ[key]
    w = symbolic_vector(p, n)
    out = [w.coords[0]]
    cur = w
    for _ in range(n):
        _, cur = witt_frobenius_delta(cur)
        out.append(cur.coords[0])
    for f in out:
        if any(isinstance(c, Fraction) for c in f.coefficients()):
            raise IntegralityFailure("delta coordinate polynomial not integral")
    _DJ[key] = tuple(out)
    return _DJ[key]


def eq_39_holds(p: int, n: int) -> bool:
    """(0,...,0,b)(0,...,0,b') = (0,...,0,p^n b b') as a polynomial identity."""
    b, bb = JetPoly.var(JetVar("b")), JetPoly.var(JetVar("c"))
    zero = JetPoly.zero(QQ)
    u = WittVector(p, [zero] * n + [b])
    v = WittVector(p, [zero] * n + [bb])
    prod = u * v
    want = [zero] * n + [b * bb * p ** n]
    return all(JetPoly.const(0) + x == y for x, y in zip(prod.coords, want))


def ghost_hom_identity(p: int, n: int) -> bool:
    """ghost(S) = ghost(X) + ghost(Y) and ghost(P) = ghost(X) ghost(Y), symbolically."""
    law = witt_law(p, n)
    for i in range(n + 1):
        wx, wy = ghost_poly(p, i, "X"), ghost_poly(p, i, "Y")
        sub_s = {xvar(j): law.sum_polys[j] for j in range(i + 1)}
        sub_p = {xvar(j): law.prod_polys[j] for j in range(i + 1)}
        if wx.substitute(sub_s) != wx + wy:
            return False
        if wx.substitute(sub_p) != wx * wy:
            return False
    return True


# ---------------------------------------------------------------------------
# the jet-space adjunction on finite rings


def _witt_poly_eval(f: JetPoly, point: dict, p: int, n: int, m: int) -> WittVector:
    """Evaluate an integer polynomial f at Witt vectors (one per variable)."""
    total = zero_vector(p, n, m)
    nvars = len(f.gens)
    for e, c in f.t.items():
        term = witt_from_int(p, n, int(c), m)
        for i, k in enumerate(_unpack(e, nvars)):
            for _ in range(k):
                term = term * point[f.gens[i]]
        total = total + term
    return total


class AdjunctionReport:
    def __init__(self, jet_count, witt_count, bijective, images_ok):
        self.jet_count = jet_count
        self.witt_count = witt_count
        self.bijective = bijective
        self.images_ok = images_ok

    @property
    def ok(self) -> bool:
        return self.jet_count == self.witt_count and self.bijective and self.images_ok

    def as_dict(self):
        return {"jet_points": self.jet_count, "witt_points": self.witt_count,
                "bijective": self.bijective, "images_are_jet_points": self.images_ok}


def adjunction_check(variables, relations, m: int, p: int, n: int, cap: int = 10 ** 6) -> AdjunctionReport:
    """Compare J^n(X)(Z/m) with X(W_n(Z/m)) for X = Spec Z[vars]/(relations), single prime p.

    Relations are JetPoly with integer coefficients in base variables.
    """
    from .delta_calculus import delta_multi
    from .exact_algebra import PrimeSet

    P = PrimeSet([p])
    nv = len(variables)
    size = m ** (nv * (n + 1))
    if size > cap:
        raise EnumerationBoundExceeded(f"{size} candidate points exceed the cap {cap}")
    base = [JetVar(v, (0,)) for v in variables]
    rels = [f.substitute({JetVar(v): JetPoly.var(JetVar(v, (0,))) for v in variables}) for f in relations]
    jet_rels = [delta_multi(P, (i,), f) for f in rels for i in range(n + 1)]
    jet_points = set()
    for vals in itertools.product(range(m), repeat=nv * (n + 1)):
        point = {}
        for a, v in enumerate(base):
            for i in range(n + 1):
                point[v.at((i,))] = vals[a * (n + 1) + i]
        if all(_eval_mod(f, point, m) == 0 for f in jet_rels):
            jet_points.add(vals)
    J = delta_coordinate_polys(p, n)
    witt_sol = []
    for vals in itertools.product(range(m), repeat=nv * (n + 1)):
        wp = {JetVar(v): WittVector(p, vals[a * (n + 1):(a + 1) * (n + 1)], m) for a, v in enumerate(variables)}
        if all(all(c == 0 for c in _witt_poly_eval(f, wp, p, n, m).coords) for f in relations):
            witt_sol.append(vals)
    images = []
    for vals in witt_sol:
        img = []
        for a in range(nv):
            coords = {JetVar(f"a{i}"): vals[a * (n + 1) + i] for i in range(n + 1)}
            img.extend(_eval_mod(J[i], coords, m) for i in range(n + 1))
        images.append(tuple(img))
    bij = len(set(images)) == len(images)
    ok = all(im in jet_points for im in images)
    return AdjunctionReport(len(jet_points), len(witt_sol), bij, ok)


def _eval_mod(f: JetPoly, point: dict, m: int) -> int:
    vals = {v: point[v] for v in f.gens}
    return _eval(f, vals, m)


def square_zero_kernel(p: int, n: int, k: int = 2) -> bool:
    """Over B = Z/p^k with I = pB, the kernel of W_{n}(B) -> W_{n-1}(B) x B/I squares to 0.

    The kernel consists of (0,...,0,b) with b in I.
    """
    m = p ** k
    ker = [WittVector(p, [0] * n + [b], m) for b in range(0, m, p)]
    z = zero_vector(p, n, m)
    return all(u * v == z for u in ker for v in ker)
