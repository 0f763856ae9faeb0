"""Exact coefficient rings, jet-variable polynomials, localized fractions and
truncated p-adic series.

Polynomials keep their generators as a sorted tuple of ``JetVar`` and store
monomials as packed integers: the exponent of generator ``i`` lives in bits
``[W*i, W*(i+1))``.  Multiplying monomials is then a single integer addition.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

W = 24
MASK = (1 << W) - 1


class AlgebraError(ValueError):
    """Base class for arithmetic precondition failures."""


class CoeffRingMismatch(AlgebraError):
    pass


class NotInRing(AlgebraError):
    pass


class NotDivisible(AlgebraError):
    pass


class PrecisionExhausted(AlgebraError):
    pass


class LossySubstitution(AlgebraError):
    pass


class ParseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# primes and multi-indices


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def vp(x, p: int) -> int | float:
    """p-adic valuation of an int or Fraction; inf for 0."""
    if x == 0:
        return float("inf")
    if isinstance(x, Fraction):
        return vp(x.numerator, p) - vp(x.denominator, p)
    x = abs(x)
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


class PrimeSet:
    """Ordered set of distinct primes p_1 < ... < p_d."""

    __slots__ = ("primes",)

    def __init__(self, primes: Iterable[int]):
        ps = tuple(int(p) for p in primes)
        if not ps:
            raise ValueError("prime set must be non-empty")
        for p in ps:
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
        if list(ps) != sorted(set(ps)):
            raise ValueError("primes must be distinct and ascending")
        self.primes = ps

    @classmethod
    def parse(cls, text: str) -> "PrimeSet":
        try:
            return cls(int(t) for t in text.split(",") if t.strip())
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad prime list {text!r}: {exc}") from None

    @property
    def d(self) -> int:
        return len(self.primes)

    def index(self, p: int) -> int:
        try:
            return self.primes.index(p)
        except ValueError:
            raise ValueError(f"{p} is not in {list(self.primes)}") from None

    def unit(self, k: int) -> tuple:
        return tuple(int(i == k) for i in range(self.d))

    @property
    def zero(self) -> tuple:
        return (0,) * self.d

    @property
    def e(self) -> tuple:
        return (1,) * self.d

    def power(self, r) -> int:
        out = 1
        for p, k in zip(self.primes, r):
            out *= p ** k
        return out

    def __iter__(self):
        return iter(self.primes)

    def __len__(self):
        return len(self.primes)

    def __eq__(self, other):
        return isinstance(other, PrimeSet) and self.primes == other.primes

    def __hash__(self):
        return hash(("PrimeSet", self.primes))

    def __repr__(self):
        return f"PrimeSet({list(self.primes)})"


def mi_le(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


def mi_add(a, b) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def mi_sub(a, b) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def mi_norm(a) -> int:
    return sum(a)


def indices_below(r) -> list:
    """All multi-indices i <= r, in lexicographic order."""
    return [tuple(i) for i in itertools.product(*(range(k + 1) for k in r))]


# ---------------------------------------------------------------------------
# coefficient rings


@dataclass(frozen=True)
class CoeffRing:
    """One of RationalField, LocalizedIntegers(primes), ModPrimePower(p, N)."""

    kind: str
    primes: PrimeSet | None = None
    p: int | None = None
    N: int | None = None

    @staticmethod
    def rational() -> "CoeffRing":
        return CoeffRing("QQ")

    @staticmethod
    def localized(primes: PrimeSet) -> "CoeffRing":
        return CoeffRing("A0", primes=primes)

    @staticmethod
    def mod_prime_power(p: int, N: int) -> "CoeffRing":
        if not is_prime(p) or N < 1:
            raise ValueError("ModPrimePower needs a prime and N >= 1")
        return CoeffRing("ZpN", p=p, N=N)

    @property
    def modulus(self) -> int | None:
        return self.p ** self.N if self.kind == "ZpN" else None

    def coerce(self, c):
        c = _normc(Fraction(c) if isinstance(c, str) else c)
        if self.kind == "QQ":
            return c
        if self.kind == "A0":
            if isinstance(c, Fraction):
                for p in self.primes:
                    if c.denominator % p == 0:
                        raise NotInRing(f"{c} has denominator divisible by {p}")
            return c
        q = self.p ** self.N
        if isinstance(c, Fraction):
            if c.denominator % self.p == 0:
                raise NotInRing(f"{c} is not {self.p}-integral")
            return c.numerator * pow(c.denominator, -1, q) % q
        return c % q

    def __str__(self):
        if self.kind == "QQ":
            return "QQ"
        if self.kind == "A0":
            return f"A0{list(self.primes.primes)}"
        return f"Z/{self.p}^{self.N}"


QQ = CoeffRing.rational()


def _normc(c):
    if type(c) is Fraction and c.denominator == 1:
        return c.numerator
    return c


def fraction_text(c) -> str:
    c = _normc(c)
    if isinstance(c, Fraction):
        return f"{c.numerator}/{c.denominator}"
    return str(c)


# ---------------------------------------------------------------------------
# jet variables and packed monomials


class JetVar(NamedTuple):
    """delta^index applied to the base variable ``base``."""

    base: str
    index: tuple = ()

    def shift(self, k: int, by: int = 1) -> "JetVar":
        idx = list(self.index)
        idx[k] += by
        return JetVar(self.base, tuple(idx))

    def at(self, index) -> "JetVar":
        return JetVar(self.base, tuple(index))

    @property
    def is_base(self) -> bool:
        return not any(self.index)

    def text(self) -> str:
        if not any(self.index):
            return self.base
        return f"{self.base}@({','.join(str(i) for i in self.index)})"

    def __str__(self):
        return self.text()


_ONES: dict = {}


def _ones(n: int) -> int:
    o = _ONES.get(n)
    if o is None:
        o = sum(1 << (W * i) for i in range(n))
        _ONES[n] = o
    return o


def _deg(e: int, n: int) -> int:
    if n == 0:
        return 0
    return ((e * _ones(n)) >> (W * (n - 1))) & MASK


def _unpack(e: int, n: int) -> tuple:
    return tuple((e >> (W * i)) & MASK for i in range(n))


def _pack(exps) -> int:
    e = 0
    for i, k in enumerate(exps):
        if k:
            e |= k << (W * i)
    return e


def _regen(t: dict, old: tuple, new: tuple) -> dict:
    if old == new:
        return t
    pos = {v: i for i, v in enumerate(new)}
    shifts = [W * pos[v] for v in old]
    out = {}
    for e, c in t.items():
        ne = 0
        i = 0
        while e:
            k = e & MASK
            if k:
                ne |= k << shifts[i]
            e >>= W
            i += 1
        out[ne] = c
    return out


def _merge_gens(a: tuple, b: tuple) -> tuple:
    if a == b:
        return a
    return tuple(sorted(set(a) | set(b)))


def _mono_sparse(e: int, gens: tuple) -> tuple:
    out = []
    i = 0
    while e:
        k = e & MASK
        if k:
            out.append((gens[i], k))
        e >>= W
        i += 1
    return tuple(out)


def monomial_key(mono: tuple):
    """Sort key for the canonical graded-lex order (first = largest)."""
    deg = sum(k for _, k in mono)
    return (-deg, tuple((v, -k) for v, k in mono))


def monomial_text(mono: tuple) -> str:
    return "*".join(v.text() if k == 1 else f"{v.text()}^{k}" for v, k in mono)


def _mul_terms(ta: dict, tb: dict, q: int | None = None) -> dict:
    if len(ta) > len(tb):
        ta, tb = tb, ta
    out: dict = {}
    get = out.get
    items_b = list(tb.items())
    for ea, ca in ta.items():
        for eb, cb in items_b:
            e = ea + eb
            out[e] = get(e, 0) + ca * cb
    if q is None:
        return {e: _normc(c) for e, c in out.items() if c}
    return {e: c % q for e, c in out.items() if c % q}


def _buckets(t: dict, n: int) -> list:
    by: dict = {}
    for e, c in t.items():
        by.setdefault(_deg(e, n), []).append((e, c))
    return sorted(by.items())


def _mul_trunc(ta: dict, tb: dict, n: int, D: int, q: int | None = None) -> tuple:
    """Truncated product; also reports whether anything was dropped."""
    ba = _buckets(ta, n)
    bb = _buckets(tb, n)
    out: dict = {}
    get = out.get
    dropped = False
    for da, la in ba:
        for db, lb in bb:
            if da + db > D:
                dropped = True
                break
            for ea, ca in la:
                for eb, cb in lb:
                    e = ea + eb
                    out[e] = get(e, 0) + ca * cb
    if q is None:
        return {e: _normc(c) for e, c in out.items() if c}, dropped
    return {e: c % q for e, c in out.items() if c % q}, dropped


# ---------------------------------------------------------------------------
# JetPoly


class JetPoly:
    """Exact polynomial in jet variables over a CoeffRing."""

    __slots__ = ("gens", "t", "ring", "_canon")

    def __init__(self, gens: tuple, t: dict, ring: CoeffRing = QQ):
        self.gens = gens
        self.t = t
        self.ring = ring
        self._canon = None

    # construction
    @classmethod
    def zero(cls, ring: CoeffRing = QQ) -> "JetPoly":
        return cls((), {}, ring)

    @classmethod
    def const(cls, c, ring: CoeffRing = QQ) -> "JetPoly":
        c = ring.coerce(c)
        return cls((), {0: c} if c else {}, ring)

    @classmethod
    def var(cls, v: JetVar, ring: CoeffRing = QQ) -> "JetPoly":
        return cls((v,), {1: 1}, ring)

    @classmethod
    def from_terms(cls, terms, ring: CoeffRing = QQ) -> "JetPoly":
        """Build from an iterable of (monomial, coeff); monomial = ((JetVar, exp), ...)."""
        items = list(terms.items() if isinstance(terms, dict) else terms)
        gens = tuple(sorted({v for mono, _ in items for v, k in mono if k}))
        pos = {v: i for i, v in enumerate(gens)}
        t: dict = {}
        for mono, c in items:
            c = ring.coerce(c)
            e = 0
            for v, k in mono:
                if k < 0:
                    raise ValueError("negative exponent")
                e += k << (W * pos[v]) if k else 0
            t[e] = t.get(e, 0) + c
        q = ring.modulus
        if q:
            t = {e: c % q for e, c in t.items() if c % q}
        else:
            t = {e: _normc(c) for e, c in t.items() if c}
        return cls(gens, t, ring)

    def _lift(self, other) -> "JetPoly":
        if isinstance(other, JetPoly):
            if other.ring != self.ring:
                raise CoeffRingMismatch(f"{self.ring} vs {other.ring}")
            return other
        if isinstance(other, (int, Fraction)):
            return JetPoly.const(other, self.ring)
        return NotImplemented

    def with_ring(self, ring: CoeffRing) -> "JetPoly":
        t = {}
        for e, c in self.t.items():
            c = ring.coerce(c)
            if c:
                t[e] = c
        return JetPoly(self.gens, t, ring)

    # inspection
    def is_zero(self) -> bool:
        return not self.t

    def __bool__(self):
        return bool(self.t)

    def terms(self) -> list:
        """(monomial, coeff) pairs in canonical order."""
        items = [(_mono_sparse(e, self.gens), c) for e, c in self.t.items()]
        items.sort(key=lambda mc: monomial_key(mc[0]))
        return items

    def canonical(self) -> tuple:
        if self._canon is None:
            self._canon = tuple(self.terms())
        return self._canon

    def variables(self) -> tuple:
        used = 0
        for e in self.t:
            used |= e
        return tuple(v for i, v in enumerate(self.gens) if (used >> (W * i)) & MASK)

    def degree(self) -> int:
        n = len(self.gens)
        return max((_deg(e, n) for e in self.t), default=-1)

    def constant_term(self):
        return self.t.get(0, 0)

    def is_constant(self) -> bool:
        return all(e == 0 for e in self.t)

    def coefficients(self):
        return self.t.values()

    def coeff(self, mono: tuple):
        pos = {v: i for i, v in enumerate(self.gens)}
        e = 0
        for v, k in mono:
            if v not in pos:
                return 0
            e += k << (W * pos[v])
        return self.t.get(e, 0)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = JetPoly.const(other, self.ring)
        if not isinstance(other, JetPoly):
            return NotImplemented
        if self.ring != other.ring:
            return False
        if self.gens == other.gens:
            return self.t == other.t
        return self.canonical() == other.canonical()

    def __hash__(self):
        return hash((self.ring, self.canonical()))

    def __repr__(self):
        return f"JetPoly({canonical_text(self)!r})"

    def __str__(self):
        return canonical_text(self)

    # arithmetic
    def _align(self, other: "JetPoly"):
        gens = _merge_gens(self.gens, other.gens)
        return gens, _regen(self.t, self.gens, gens), _regen(other.t, other.gens, gens)

    def _fix(self, t: dict) -> dict:
        q = self.ring.modulus
        if q:
            return {e: c % q for e, c in t.items() if c % q}
        return {e: _normc(c) for e, c in t.items() if c}

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        if not other.t:
            return self
        if not self.t:
            return other
        gens, a, b = self._align(other)
        out = dict(a)
        for e, c in b.items():
            out[e] = out.get(e, 0) + c
        return JetPoly(gens, self._fix(out), self.ring)

    __radd__ = __add__

    def __neg__(self):
        q = self.ring.modulus
        if q:
            return JetPoly(self.gens, {e: (-c) % q for e, c in self.t.items()}, self.ring)
        return JetPoly(self.gens, {e: -c for e, c in self.t.items()}, self.ring)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def scale(self, c) -> "JetPoly":
        c = self.ring.coerce(c) if self.ring.kind != "QQ" else _normc(Fraction(c))
        if not c:
            return JetPoly.zero(self.ring)
        return JetPoly(self.gens, self._fix({e: v * c for e, v in self.t.items()}), self.ring)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._lift(other)
        if other is NotImplemented:
            return other
        if not self.t or not other.t:
            return JetPoly.zero(self.ring)
        gens, a, b = self._align(other)
        return JetPoly(gens, _mul_terms(a, b, self.ring.modulus), self.ring)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = JetPoly.const(1, self.ring)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def mul_trunc(self, other: "JetPoly", D: int) -> "JetPoly":
        gens, a, b = self._align(other)
        t, _ = _mul_trunc(a, b, len(gens), D, self.ring.modulus)
        return JetPoly(gens, t, self.ring)

    def pow_trunc(self, n: int, D: int) -> "JetPoly":
        result = JetPoly.const(1, self.ring)
        base = self.truncate(D)
        while n:
            if n & 1:
                result = result.mul_trunc(base, D)
            n >>= 1
            if n:
                base = base.mul_trunc(base, D)
        return result

    def truncate(self, D: int) -> "JetPoly":
        n = len(self.gens)
        return JetPoly(self.gens, {e: c for e, c in self.t.items() if _deg(e, n) <= D}, self.ring)

    def homogeneous_part(self, k: int) -> "JetPoly":
        n = len(self.gens)
        return JetPoly(self.gens, {e: c for e, c in self.t.items() if _deg(e, n) == k}, self.ring)

    def exact_div_scalar(self, m) -> "JetPoly":
        """Divide every coefficient by m, staying inside the coefficient ring."""
        m = Fraction(m)
        if m == 0:
            raise ZeroDivisionError("division by zero")
        out = {}
        for e, c in self.t.items():
            out[e] = self.ring.coerce(Fraction(c) / m)
        return JetPoly(self.gens, out, self.ring)

    def map_coeffs(self, fn, ring: CoeffRing | None = None) -> "JetPoly":
        ring = ring or self.ring
        out = {}
        for e, c in self.t.items():
            c = fn(c)
            if c:
                out[e] = c
        return JetPoly(self.gens, out, ring)

    # calculus and substitution
    def diff(self, v: JetVar) -> "JetPoly":
        try:
            i = self.gens.index(v)
        except ValueError:
            return JetPoly.zero(self.ring)
        sh = W * i
        one = 1 << sh
        out = {}
        for e, c in self.t.items():
            k = (e >> sh) & MASK
            if k:
                out[e - one] = c * k
        return JetPoly(self.gens, self._fix(out), self.ring)

    def substitute(self, mapping: dict, D: int | None = None) -> "JetPoly":
        """Replace variables by polynomials (others stay); optional degree cap."""
        if not mapping:
            return self
        pieces = {}
        for i, v in enumerate(self.gens):
            img = mapping.get(v)
            pieces[i] = self._lift(img) if img is not None else JetPoly.var(v, self.ring)
        cache: dict = {}

        def power(i, k):
            key = (i, k)
            r = cache.get(key)
            if r is None:
                if k == 1:
                    r = pieces[i] if D is None else pieces[i].truncate(D)
                else:
                    r = power(i, k - 1) * pieces[i] if D is None else power(i, k - 1).mul_trunc(pieces[i], D)
                cache[key] = r
            return r

        n = len(self.gens)
        parts = []
        for e, c in self.t.items():
            term = JetPoly.const(c, self.ring)
            for i, k in enumerate(_unpack(e, n)):
                if k:
                    term = term * power(i, k) if D is None else term.mul_trunc(power(i, k), D)
            parts.append(term)
        return poly_sum(parts, self.ring)

    def evaluate(self, values: dict):
        """Evaluate at a point given as {JetVar: number}."""
        n = len(self.gens)
        vals = []
        for v in self.gens:
            vals.append(values.get(v))
        total = 0
        for e, c in self.t.items():
            term = c
            for i, k in enumerate(_unpack(e, n)):
                if k:
                    if vals[i] is None:
                        raise KeyError(f"no value for {self.gens[i]}")
                    term = term * vals[i] ** k
            total += term
        q = self.ring.modulus
        return total % q if q else _normc(total)

    def partial_evaluate(self, values: dict) -> "JetPoly":
        return self.substitute({v: JetPoly.const(c, self.ring) for v, c in values.items()})

    def content_valuation(self, p: int) -> int | float:
        return min((vp(c, p) for c in self.t.values()), default=float("inf"))

    def _lead(self):
        n = len(self.gens)
        return max(self.t, key=lambda e: (_deg(e, n), _unpack(e, n)[::-1]))

    def exact_div(self, other: "JetPoly") -> "JetPoly | None":
        """Exact quotient self/other, or None when other does not divide self."""
        other = self._lift(other)
        if not other.t:
            raise ZeroDivisionError("division by zero polynomial")
        gens, a, b = self._align(other)
        n = len(gens)
        rem = JetPoly(gens, a, self.ring)
        div = JetPoly(gens, b, self.ring)
        le = div._lead()
        lc = div.t[le]
        lexp = _unpack(le, n)
        quot: dict = {}
        while rem.t:
            re_ = rem._lead()
            rexp = _unpack(re_, n)
            if any(x < y for x, y in zip(rexp, lexp)):
                return None
            qe = re_ - le
            qc = _normc(Fraction(rem.t[re_]) / Fraction(lc))
            quot[qe] = qc
            rem = rem - JetPoly(gens, {qe: qc}, self.ring) * div
        return JetPoly(gens, quot, self.ring)


def poly_sum(parts, ring: CoeffRing = QQ) -> JetPoly:
    parts = [p for p in parts if p.t]
    if not parts:
        return JetPoly.zero(ring)
    gens = tuple(sorted({v for p in parts for v in p.gens}))
    out: dict = {}
    for p in parts:
        for e, c in _regen(p.t, p.gens, gens).items():
            out[e] = out.get(e, 0) + c
    q = ring.modulus
    if q:
        out = {e: c % q for e, c in out.items() if c % q}
    else:
        out = {e: _normc(c) for e, c in out.items() if c}
    return JetPoly(gens, out, ring)


def jv(name: str, index=()) -> JetVar:
    return JetVar(name, tuple(index))


def var(name: str, index=(), ring: CoeffRing = QQ) -> JetPoly:
    return JetPoly.var(JetVar(name, tuple(index)), ring)


# ---------------------------------------------------------------------------
# localized elements N / prod_i phi^i(g)^{m_i}


class LocalizedJetElem:
    """Numerator over a monomial in the Frobenius images of a localizer g.

    ``den`` maps a multi-index i to the exponent of phi^i(g).  The Frobenius
    images are produced by ``frob`` (a callable (g, i) -> JetPoly) so that this
    module stays independent of the delta calculus.
    """

    __slots__ = ("num", "g", "den", "frob")

    def __init__(self, num: JetPoly, g: JetPoly, den: dict, frob):
        self.num = num
        self.g = g
        self.den = {i: m for i, m in den.items() if m}
        self.frob = frob

    @property
    def ring(self):
        return self.num.ring

    def _factor(self, i) -> JetPoly:
        return self.frob(self.g, i)

    def denominator(self) -> JetPoly:
        out = JetPoly.const(1, self.ring)
        for i, m in sorted(self.den.items()):
            out = out * self._factor(i) ** m
        return out

    def _same(self, num, den):
        return LocalizedJetElem(num, self.g, den, self.frob)

    def _coerce(self, other):
        if isinstance(other, LocalizedJetElem):
            if other.g != self.g:
                raise CoeffRingMismatch("different localizers")
            return other
        if isinstance(other, (int, Fraction)):
            other = JetPoly.const(other, self.ring)
        if isinstance(other, JetPoly):
            return self._same(other, {})
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        keys = set(self.den) | set(other.den)
        den = {i: max(self.den.get(i, 0), other.den.get(i, 0)) for i in keys}
        a = self.num
        for i in keys:
            k = den[i] - self.den.get(i, 0)
            if k:
                a = a * self._factor(i) ** k
        b = other.num
        for i in keys:
            k = den[i] - other.den.get(i, 0)
            if k:
                b = b * self._factor(i) ** k
        return self._same(a + b, den)

    __radd__ = __add__

    def __neg__(self):
        return self._same(-self.num, dict(self.den))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        den = dict(self.den)
        for i, m in other.den.items():
            den[i] = den.get(i, 0) + m
        return self._same(self.num * other.num, den)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        return self._same(self.num ** n, {i: m * n for i, m in self.den.items()})

    def divide_by_factor(self, i, m: int = 1) -> "LocalizedJetElem":
        den = dict(self.den)
        den[i] = den.get(i, 0) + m
        return self._same(self.num, den)

    def scale(self, c) -> "LocalizedJetElem":
        return self._same(self.num.scale(c), dict(self.den))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return (self - other).num.is_zero()

    __hash__ = None

    def variables(self) -> tuple:
        vs = set(self.num.variables())
        for i in self.den:
            vs |= set(self._factor(i).variables())
        return tuple(sorted(vs))

    def diff(self, v: JetVar) -> "LocalizedJetElem":
        return self.apply_derivation(lambda f: f.diff(v))

    def apply_derivation(self, D) -> "LocalizedJetElem":
        """Quotient rule for a derivation D acting on JetPoly."""
        out = self._same(D(self.num), dict(self.den))
        for i, m in self.den.items():
            dg = D(self._factor(i))
            if dg.is_zero():
                continue
            den = dict(self.den)
            den[i] += 1
            out = out - self._same((self.num * dg).scale(m), den)
        return out

    def evaluate(self, values: dict):
        num = Fraction(self.num.evaluate(values))
        den = Fraction(1)
        for i, m in self.den.items():
            den *= Fraction(self._factor(i).evaluate(values)) ** m
        if den == 0:
            raise ZeroDivisionError("localizer vanishes at this point")
        return _normc(num / den)

    def valuation(self, p: int) -> int | float:
        """p-adic valuation; the localizer factors are primitive, so Gauss' lemma applies."""
        return self.num.content_valuation(p)

    def unit_certificate(self, indices=None):
        """Return (c, exps) with self == c * prod phi^i(g)^exps, or None.

        ``indices`` lists the Frobenius images allowed to appear in the
        numerator; by default those present in the denominator.
        """
        num = self.num
        exps = {i: -m for i, m in self.den.items()}
        cands = sorted(set(indices if indices is not None else self.den))
        changed = True
        while changed and not num.is_constant():
            changed = False
            for i in cands:
                f = self._factor(i)
                if f.is_constant():
                    continue
                q = num.exact_div(f)
                if q is not None:
                    num = q
                    exps[i] = exps.get(i, 0) + 1
                    changed = True
                    break
        if not num.is_constant() or num.is_zero():
            return None
        c = num.constant_term()
        if self.ring.kind == "A0":
            cf = Fraction(c)
            for p in self.ring.primes:
                if cf.numerator % p == 0:
                    return None
        return c, {i: m for i, m in exps.items() if m}

    def __repr__(self):
        return f"LocalizedJetElem({canonical_text(self)!r})"

    def __str__(self):
        return canonical_text(self)


# ---------------------------------------------------------------------------
# truncated p-adic series


class PadicJetSeries:
    """Power series in jet variables over Z/p^N, truncated at total degree D.

    Coefficients are residues in [0, p^N).  ``prec`` records the terms whose
    precision is below the series precision N (after division by p).  The flag
    ``truncated`` is set once a degree truncation has discarded a nonzero term.
    """

    __slots__ = ("p", "N", "D", "gens", "t", "prec", "truncated", "primes")

    def __init__(self, p, N, D, gens, t, prec=None, truncated=False, primes=None):
        if N < 1:
            raise PrecisionExhausted("precision must stay >= 1")
        self.p = p
        self.N = N
        self.D = D
        self.gens = gens
        self.t = t
        self.prec = prec or {}
        self.truncated = truncated
        self.primes = primes

    @property
    def q(self) -> int:
        return self.p ** self.N

    # construction
    @classmethod
    def zero(cls, p, N, D, primes=None):
        return cls(p, N, D, (), {}, primes=primes)

    @classmethod
    def const(cls, c, p, N, D, primes=None):
        c = _to_residue(c, p, p ** N)
        return cls(p, N, D, (), {0: c} if c else {}, primes=primes)

    @classmethod
    def var(cls, v: JetVar, p, N, D, primes=None):
        return cls(p, N, D, (v,), {1: 1} if D >= 1 else {}, primes=primes)

    @classmethod
    def from_poly(cls, f: JetPoly, p, N, D, primes=None):
        """Reduce a p-integral polynomial modulo (p^N, deg > D)."""
        q = p ** N
        n = len(f.gens)
        t = {}
        dropped = False
        for e, c in f.t.items():
            if _deg(e, n) > D:
                dropped = True
                continue
            r = _to_residue(c, p, q)
            if r:
                t[e] = r
        return cls(p, N, D, f.gens, t, truncated=dropped, primes=primes)

    def like(self, t, gens=None, N=None, D=None, prec=None, truncated=None):
        return PadicJetSeries(self.p, self.N if N is None else N, self.D if D is None else D,
                              self.gens if gens is None else gens, t, prec,
                              self.truncated if truncated is None else truncated, self.primes)

    def _coerce(self, other):
        if isinstance(other, PadicJetSeries):
            if other.p != self.p:
                raise CoeffRingMismatch(f"series over different primes {self.p}, {other.p}")
            return other
        if isinstance(other, (int, Fraction)):
            return PadicJetSeries.const(other, self.p, self.N, self.D, self.primes)
        if isinstance(other, JetPoly):
            return PadicJetSeries.from_poly(other, self.p, self.N, self.D, self.primes)
        return NotImplemented

    # inspection
    def is_zero(self) -> bool:
        return not self.t

    def term_precision(self, e) -> int:
        return self.prec.get(e, self.N)

    def terms(self) -> list:
        items = [(_mono_sparse(e, self.gens), c, self.prec.get(e, self.N)) for e, c in self.t.items()]
        items.sort(key=lambda it: monomial_key(it[0]))
        return items

    def variables(self) -> tuple:
        used = 0
        for e in self.t:
            used |= e
        return tuple(v for i, v in enumerate(self.gens) if (used >> (W * i)) & MASK)

    def constant_term(self) -> int:
        return self.t.get(0, 0)

    def coeff(self, mono: tuple) -> int:
        pos = {v: i for i, v in enumerate(self.gens)}
        e = 0
        for v, k in mono:
            if v not in pos:
                return 0
            e += k << (W * pos[v])
        return self.t.get(e, 0)

    def valuation(self) -> int:
        """Smallest p-adic valuation of a coefficient, capped by precision."""
        best = self.N
        p = self.p
        for e, c in self.t.items():
            pr = self.prec.get(e, self.N)
            v = vp(c, p)
            best = min(best, v if v < pr else pr)
        for e, pr in self.prec.items():
            if e not in self.t:
                best = min(best, pr)
        return int(best)

    def equals(self, other) -> bool:
        other = self._coerce(other)
        d = self - other
        return d.is_zero() or all(vp(c, self.p) >= d.prec.get(e, d.N) for e, c in d.t.items())

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def __repr__(self):
        return f"PadicJetSeries(p={self.p}, N={self.N}, D={self.D}, {canonical_text(self)!r})"

    def __str__(self):
        return canonical_text(self)

    # arithmetic
    def _align(self, other):
        gens = _merge_gens(self.gens, other.gens)
        return gens, _regen(self.t, self.gens, gens), _regen(other.t, other.gens, gens)

    def _window(self, other):
        return min(self.N, other.N), min(self.D, other.D)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        N, D = self._window(other)
        q = self.p ** N
        gens, a, b = self._align(other)
        n = len(gens)
        out = {}
        for src in (a, b):
            for e, c in src.items():
                if _deg(e, n) <= D:
                    out[e] = out.get(e, 0) + c
        out = {e: c % q for e, c in out.items() if c % q}
        prec = {}
        for s, src in ((self, a), (other, b)):
            if s.prec:
                for e, pr in _regen(s.prec, s.gens, gens).items():
                    if pr < N:
                        prec[e] = min(prec.get(e, N), pr)
        if prec:
            out = {e: c % self.p ** prec.get(e, N) for e, c in out.items() if c % self.p ** prec.get(e, N)}
        return PadicJetSeries(self.p, N, D, gens, out, prec,
                              self.truncated or other.truncated, self.primes or other.primes)

    __radd__ = __add__

    def __neg__(self):
        q = self.q
        return self.like({e: (-c) % q for e, c in self.t.items()}, prec=dict(self.prec))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "PadicJetSeries":
        """Multiply by a p-integral rational."""
        c = Fraction(c)
        v = vp(c, self.p) if c else 0
        if v < 0:
            raise NotInRing(f"{c} is not {self.p}-integral")
        r = _to_residue(c, self.p, self.q)
        q = self.q
        out = {e: x * r % q for e, x in self.t.items() if x * r % q}
        prec = {}
        if self.prec and c:
            for e, pr in self.prec.items():
                prec[e] = min(self.N, pr + v)
        return self.like(out, prec=prec)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        N, D = self._window(other)
        q = self.p ** N
        gens, a, b = self._align(other)
        t, dropped = _mul_trunc(a, b, len(gens), D, q)
        prec = {}
        if self.prec or other.prec:
            prec = _product_precision(self, other, gens, a, b, N, D)
            t = {e: c % self.p ** prec.get(e, N) for e, c in t.items()}
            t = {e: c for e, c in t.items() if c}
        return PadicJetSeries(self.p, N, D, gens, t, prec,
                              self.truncated or other.truncated or dropped, self.primes or other.primes)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        result = PadicJetSeries.const(1, self.p, self.N, self.D, self.primes)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def truncate(self, D: int) -> "PadicJetSeries":
        n = len(self.gens)
        t = {e: c for e, c in self.t.items() if _deg(e, n) <= D}
        return self.like(t, D=min(D, self.D), prec={e: v for e, v in self.prec.items() if e in t},
                         truncated=self.truncated or len(t) < len(self.t))

    def reduce_precision(self, N: int) -> "PadicJetSeries":
        N = min(N, self.N)
        q = self.p ** N
        t = {e: c % q for e, c in self.t.items() if c % q}
        prec = {e: v for e, v in self.prec.items() if v < N}
        return self.like(t, N=N, prec=prec)

    def inverse(self) -> "PadicJetSeries":
        c0 = self.t.get(0, 0)
        if c0 % self.p == 0:
            raise NotDivisible("constant term is not a unit")
        inv0 = pow(c0, -1, self.q)
        h = (self - c0) * inv0
        # 1/(c0 (1 + h)) = inv0 * sum (-h)^k, h has no constant term
        acc = PadicJetSeries.const(1, self.p, self.N, self.D, self.primes)
        term = acc
        mh = -h
        for _ in range(self.D):
            term = term * mh
            if term.is_zero():
                break
            acc = acc + term
        return acc * inv0

    def divide_by_p(self) -> "PadicJetSeries":
        p = self.p
        for e, c in self.t.items():
            if c % p:
                raise NotDivisible("a coefficient has valuation 0")
        if self.N - 1 < 1 or any(pr - 1 < 1 for pr in self.prec.values()):
            raise PrecisionExhausted("precision would reach 0")
        N = self.N - 1
        t = {e: (c // p) % p ** self.prec.get(e, self.N) for e, c in self.t.items()}
        t = {e: c % p ** N for e, c in t.items() if c % p ** N}
        prec = {e: pr - 1 for e, pr in self.prec.items()}
        return self.like(t, N=N, prec=prec)

    def diff(self, v: JetVar) -> "PadicJetSeries":
        """Partial derivative; the result is known one degree less."""
        D = self.D - 1
        try:
            i = self.gens.index(v)
        except ValueError:
            return self.like({}, D=D, prec={})
        sh = W * i
        one = 1 << sh
        q = self.q
        out = {}
        prec = {}
        for e, c in self.t.items():
            k = (e >> sh) & MASK
            if k:
                r = c * k % q
                if r:
                    out[e - one] = r
                if e in self.prec:
                    prec[e - one] = min(self.N, self.prec[e] + vp(k, self.p))
        return self.like(out, D=D, prec=prec)

    def substitute(self, mapping: dict, allow_lossy: bool = False) -> "PadicJetSeries":
        """Compose with series images; the window is (min precision, min degree)."""
        imgs = {}
        N, D = self.N, self.D
        for v, img in mapping.items():
            img = self._coerce(img)
            imgs[v] = img
            N, D = min(N, img.N), min(D, img.D)
            if img.constant_term() and self.truncated and not allow_lossy:
                raise LossySubstitution(f"image of {v} has a constant term")
        if any(s.prec for s in imgs.values()) or self.prec:
            N = min([N] + [min(s.prec.values()) for s in list(imgs.values()) + [self] if s.prec])
        base = self.reduce_precision(N)
        cache: dict = {}
        n = len(base.gens)

        def piece(i):
            v = base.gens[i]
            s = imgs.get(v)
            if s is None:
                s = PadicJetSeries.var(v, self.p, N, D, self.primes)
            return s.reduce_precision(N).truncate(D)

        def power(i, k):
            key = (i, k)
            r = cache.get(key)
            if r is None:
                r = piece(i) if k == 1 else power(i, k - 1) * piece(i)
                cache[key] = r
            return r

        parts = []
        for e, c in base.t.items():
            term = PadicJetSeries.const(c, self.p, N, D, self.primes)
            for i, k in enumerate(_unpack(e, n)):
                if k:
                    term = term * power(i, k)
                    if term.is_zero():
                        break
            parts.append(term)
        out = series_sum(parts, self.p, N, D, self.primes)
        out.truncated = out.truncated or self.truncated
        return out

    def evaluate_zero(self) -> int:
        return self.constant_term()


def _to_residue(c, p: int, q: int) -> int:
    if isinstance(c, Fraction):
        if c.denominator % p == 0:
            raise NotInRing(f"{c} is not {p}-integral")
        return c.numerator * pow(c.denominator, -1, q) % q
    return int(c) % q


def _product_precision(a, b, gens, ta, tb, N, D) -> dict:
    n = len(gens)
    pa = _regen(a.prec, a.gens, gens) if a.prec else {}
    pb = _regen(b.prec, b.gens, gens) if b.prec else {}
    prec: dict = {}
    p = a.p
    for ea, pra in pa.items():
        for eb, cb in tb.items():
            e = ea + eb
            if _deg(e, n) <= D:
                pr = min(N, pra + int(min(vp(cb, p), N)))
                prec[e] = min(prec.get(e, N), pr)
    for eb, prb in pb.items():
        for ea, ca in ta.items():
            e = ea + eb
            if _deg(e, n) <= D:
                pr = min(N, prb + int(min(vp(ca, p), N)))
                prec[e] = min(prec.get(e, N), pr)
    return {e: v for e, v in prec.items() if v < N}


def series_sum(parts, p, N, D, primes=None) -> PadicJetSeries:
    parts = [s for s in parts if s.t or s.prec]
    if not parts:
        return PadicJetSeries.zero(p, N, D, primes)
    N = min([N] + [s.N for s in parts])
    D = min([D] + [s.D for s in parts])
    if any(s.prec for s in parts):
        acc = parts[0]
        for s in parts[1:]:
            acc = acc + s
        return acc
    gens = tuple(sorted({v for s in parts for v in s.gens}))
    n = len(gens)
    out: dict = {}
    for s in parts:
        for e, c in _regen(s.t, s.gens, gens).items():
            out[e] = out.get(e, 0) + c
    q = p ** N
    out = {e: c % q for e, c in out.items() if c % q and _deg(e, n) <= D}
    return PadicJetSeries(p, N, D, gens, out, None, any(s.truncated for s in parts), primes)


# ---------------------------------------------------------------------------
# canonical text


def _sym(c: int, q: int) -> int:
    c %= q
    return c - q if c > q // 2 else c


def _render(items) -> str:
    """items: list of (monomial, coeff) already in canonical order."""
    if not items:
        return "0"
    out = []
    for idx, (mono, c) in enumerate(items):
        neg = c < 0
        a = -c if neg else c
        if not mono:
            body = fraction_text(a)
        elif a == 1:
            body = monomial_text(mono)
        else:
            body = f"{fraction_text(a)}*{monomial_text(mono)}"
        if idx == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


def canonical_text(x) -> str:
    if isinstance(x, JetPoly):
        q = x.ring.modulus
        items = x.terms()
        if q:
            items = [(m, _sym(c, q)) for m, c in items]
        return _render(items)
    if isinstance(x, PadicJetSeries):
        return _render([(m, _sym(c, x.p ** pr)) for m, c, pr in x.terms()])
    if isinstance(x, LocalizedJetElem):
        num = canonical_text(x.num)
        if not x.den:
            return num
        g = canonical_text(x.g)
        facs = []
        for i, m in sorted(x.den.items()):
            head = "phi" if not any(i) else f"phi@({','.join(map(str, i))})"
            facs.append(f"{head}[{g}]" + (f"^{m}" if m != 1 else ""))
        return f"({num})/({'*'.join(facs)})"
    raise TypeError(f"no canonical text for {type(x).__name__}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)(@\(\s*-?\d+(?:\s*,\s*-?\d+)*\s*\))?|(.))")


def _tokenize(text: str) -> list:
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected input at {pos}: {text[pos:]!r}")
        num, name, idx, op = m.groups()
        if num is not None:
            out.append(("num", int(num)))
        elif name is not None:
            index = None
            if idx:
                index = tuple(int(s) for s in idx[2:-1].split(","))
                if any(i < 0 for i in index):
                    raise ParseError("negative jet index")
            out.append(("var", (name, index)))
        elif op is not None:
            if op.isspace():
                pos = m.end()
                continue
            if op not in "+-*/^()[]":
                raise ParseError(f"unexpected character {op!r}")
            out.append(("op", op))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text, ring, d, make_var):
        self.toks = _tokenize(text)
        self.i = 0
        self.ring = ring
        self.d = d
        self.make_var = make_var

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, val=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (val and tok[1] != val):
            raise ParseError(f"expected {val or kind}, got {tok[1]!r}")
        self.i += 1
        return tok

    def expr(self):
        sign = 1
        if self.peek() == ("op", "-"):
            self.take()
            sign = -1
        elif self.peek() == ("op", "+"):
            self.take()
        acc = self.term()
        if sign < 0:
            acc = -acc
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self):
        acc = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                acc = acc * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    raise ParseError("division only by nonzero constants")
                acc = acc.scale(Fraction(1) / Fraction(rhs.constant_term()))
        return acc

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            n = self.take("num")[1]
            base = base ** n
        return base

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return JetPoly.const(val, self.ring)
        if kind == "var":
            self.take()
            return JetPoly.var(self.make_var(*val), self.ring)
        if (kind, val) == ("op", "("):
            self.take()
            e = self.expr()
            self.take("op", ")")
            return e
        raise ParseError(f"unexpected token {val!r}")


def parse_poly(text: str, ring: CoeffRing = QQ, d: int | None = None) -> JetPoly:
    """Parse the canonical grammar (plus parentheses) into a JetPoly.

    ``d`` fixes the multi-index length; bare names get the zero index.
    """

    def make_var(name, index):
        if index is None:
            return JetVar(name, (0,) * d if d is not None else ())
        if d is not None and len(index) != d:
            raise ParseError(f"{name}@{index}: index length must be {d}")
        return JetVar(name, index)

    if not text or not text.strip():
        raise ParseError("empty expression")
    p = _Parser(text, ring, d, make_var)
    out = p.expr()
    if p.i != len(p.toks):
        raise ParseError(f"trailing input near {p.peek()[1]!r}")
    return out


def parse_series(text: str, p: int, N: int, D: int, d: int | None = None, primes=None) -> PadicJetSeries:
    f = parse_poly(text, QQ, d)
    return PadicJetSeries.from_poly(f, p, N, D, primes)


_LOC = re.compile(r"^\((.*)\)/\((.*)\)$", re.S)
_FAC = re.compile(r"phi(?:@\(([\d,\s]+)\))?\[(.*?)\](?:\^(\d+))?$")


def parse_localized(text: str, frob, ring: CoeffRing = QQ, d: int | None = None) -> LocalizedJetElem:
    m = _LOC.match(text.strip())
    if not m:
        raise ParseError("localized element must look like (num)/(phi[g]^m*...)")
    num = parse_poly(m.group(1), ring, d)
    den = {}
    g = None
    for fac in _split_top(m.group(2), "*"):
        fm = _FAC.match(fac.strip())
        if not fm:
            raise ParseError(f"bad denominator factor {fac!r}")
        idx = tuple(int(s) for s in fm.group(1).split(",")) if fm.group(1) else None
        gg = parse_poly(fm.group(2), ring, d)
        if g is not None and gg != g:
            raise ParseError("denominator uses two localizers")
        g = gg
        if idx is None:
            idx = (0,) * (d if d is not None else 0)
        den[idx] = den.get(idx, 0) + int(fm.group(3) or 1)
    return LocalizedJetElem(num, g, den, frob)


def _split_top(s: str, sep: str) -> list:
    depth = 0
    out, cur = [], []
    for ch in s:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return out


# ---------------------------------------------------------------------------
# JSON


def _mono_json(mono) -> list:
    return [[[v.base, list(v.index)], k] for v, k in mono]


def _mono_from_json(m) -> tuple:
    return tuple((JetVar(name, tuple(idx)), int(k)) for (name, idx), k in m)


def series_to_json(s: PadicJetSeries) -> dict:
    terms = []
    for mono, c, pr in s.terms():
        item = {"monomial": _mono_json(mono), "coeff": str(_sym(c, s.p ** pr))}
        if pr != s.N:
            item["precision"] = pr
        terms.append(item)
    return {
        "primes": list(s.primes.primes) if s.primes else [s.p],
        "prime": s.p,
        "precision": s.N,
        "degree": s.D,
        "terms": terms,
    }


def series_from_json(obj: dict) -> PadicJetSeries:
    p = int(obj.get("prime", obj["primes"][0]))
    N = int(obj["precision"])
    D = int(obj["degree"])
    primes = PrimeSet(obj["primes"]) if obj.get("primes") else None
    items = []
    precs = []
    for term in obj["terms"]:
        mono = _mono_from_json(term["monomial"])
        items.append((mono, Fraction(term["coeff"])))
        precs.append((mono, term.get("precision")))
    f = JetPoly.from_terms(items)
    s = PadicJetSeries.from_poly(f, p, N, D, primes)
    prec = {}
    for mono, pr in precs:
        if pr is not None:
            prec[_pack([dict(mono).get(v, 0) for v in s.gens])] = int(pr)
    if prec:
        s = s.like({e: c % p ** prec.get(e, N) for e, c in s.t.items()}, prec=prec)
    return s


def poly_to_json(f: JetPoly, primes: PrimeSet | None = None) -> dict:
    return {
        "primes": list(primes.primes) if primes else [],
        "ring": str(f.ring),
        "terms": [{"monomial": _mono_json(m), "coeff": fraction_text(c)} for m, c in f.terms()],
    }


def poly_from_json(obj: dict, ring: CoeffRing = QQ) -> JetPoly:
    return JetPoly.from_terms([(_mono_from_json(t["monomial"]), Fraction(t["coeff"])) for t in obj["terms"]], ring)


def dumps(obj) -> str:
    """Deterministic JSON rendering used by every report."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
