"""Chains on G_m jet spaces, integrals of p-adically exact forms and the period group.

A chain point is a point of the p_k-adic completion of J^e(G_m), tagged by
its prime.  Consecutive points with the same prime form a vertical segment,
and the integral picks up f_k(end) - f_k(start) in component k.  Consecutive
points with different primes must be induced by one A_0-point (horizontal);
their contribution is evaluated and checked to be zero.

Equality in the period group is only decided up to a height bound and the
working precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .exact_algebra import AlgebraError, JetPoly, JetVar, PrimeSet, parse_poly, vp
from .jet_spaces import RationalPoint, canonical_lift, gm_open


class ChainError(AlgebraError):
    pass


@dataclass(frozen=True)
class ChainPoint:
    prime: int
    base_x: Fraction | None = None
    kind: str = "canonical_lift"
    jets: tuple = ()  # ((JetVar, Fraction), ...) for kind == "jet_point"

    def values(self, primes: PrimeSet) -> dict:
        if self.kind == "canonical_lift":
            pt = RationalPoint(gm_open(primes), {"x": self.base_x})
            return canonical_lift(pt, primes.e).values()
        return dict(self.jets)

    def to_json(self) -> dict:
        out = {"prime": self.prime, "kind": self.kind}
        if self.base_x is not None:
            out["base_x"] = str(self.base_x)
        if self.jets:
            out["jets"] = {v.text(): str(c) for v, c in self.jets}
        return out


@dataclass
class Chain:
    primes: PrimeSet
    points: list

    def __post_init__(self):
        for P in self.points:
            if P.prime not in self.primes.primes:
                raise ChainError(f"point prime {P.prime} is not in {self.primes.primes}")
        for a, b in zip(self.points, self.points[1:]):
            self.segment_kind(a, b)

    @staticmethod
    def segment_kind(a: ChainPoint, b: ChainPoint) -> str:
        if a.prime == b.prime:
            return "vertical"
        if a.kind == b.kind == "canonical_lift" and a.base_x == b.base_x:
            return "horizontal"
        raise ChainError("points with different primes must be canonical lifts of one A_0-point")

    def segments(self):
        for a, b in zip(self.points, self.points[1:]):
            yield self.segment_kind(a, b), a, b

    @property
    def is_cycle(self) -> bool:
        return len(self.points) > 1 and self.points[0] == self.points[-1]

    def reversed(self) -> "Chain":
        return Chain(self.primes, list(reversed(self.points)))

    def __add__(self, other: "Chain") -> "Chain":
        if self.points[-1] != other.points[0]:
            raise ChainError("chains do not share an endpoint")
        return Chain(self.primes, self.points + other.points[1:])

    def to_json(self) -> dict:
        return {"primes": list(self.primes.primes), "points": [P.to_json() for P in self.points]}


@dataclass
class PeriodValue:
    primes: PrimeSet
    precision: int
    components: tuple
    reduced: bool = False

    def modulus(self, k: int) -> int:
        return self.primes.primes[k] ** self.precision

    def __add__(self, other: "PeriodValue") -> "PeriodValue":
        return PeriodValue(self.primes, self.precision,
                           tuple((a + b) % self.modulus(k) for k, (a, b) in enumerate(zip(self.components, other.components))))

    def __neg__(self) -> "PeriodValue":
        return PeriodValue(self.primes, self.precision,
                           tuple(-a % self.modulus(k) for k, a in enumerate(self.components)))

    def __eq__(self, other) -> bool:
        return isinstance(other, PeriodValue) and self.components == other.components

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.components)

    def translate(self, rel) -> "PeriodValue":
        """Add a relation element (a_1, ..., a_d) in A_0^d with sum zero."""
        rel = [Fraction(a) for a in rel]
        if sum(rel) != 0:
            raise AlgebraError("relation elements must sum to zero")
        return self + PeriodValue(self.primes, self.precision,
                                  tuple(_residue(a, p, self.precision) for a, p in zip(rel, self.primes.primes)))

    def to_json(self) -> dict:
        return {"components": [{"prime": p, "value": str(_sym(v, p ** self.precision)), "precision": self.precision}
                               for p, v in zip(self.primes.primes, self.components)]}


def _residue(c, p: int, N: int) -> int:
    c = Fraction(c)
    if vp(c, p) < 0:
        raise AlgebraError(f"{c} is not {p}-integral")
    q = p ** N
    return c.numerator * pow(c.denominator, -1, q) % q


def _sym(v: int, q: int) -> int:
    return v - q if v > q // 2 else v


class ExactForm:
    """omega = dg for a global function g on the chart; every f_k equals g."""

    def __init__(self, primes: PrimeSet, g: JetPoly):
        self.primes = primes
        self.g = g
        self.name = "exact"

    def primitive(self, k: int, values: dict, N: int) -> int:
        return _residue(self.g.evaluate(values), self.primes.primes[k], N)


class GmOmegaE:
    """omega^(e) with the Laplacian primitives f_k."""

    name = "gm_omega_e"

    def __init__(self, primes: PrimeSet):
        self.primes = primes

    def primitive(self, k: int, values: dict, N: int) -> int:
        from .laplacians import gm_f_at_point

        return gm_f_at_point(self.primes, k, values, N)


def integrate(omega, chain: Chain, N: int, check_horizontal: bool = True) -> PeriodValue:
    P = chain.primes
    comps = [0] * P.d
    cache: dict = {}

    def f(k, pt):
        key = (k, pt)
        if key not in cache:
            cache[key] = omega.primitive(k, pt.values(P), N)
        return cache[key]

    for kind, a, b in chain.segments():
        k = P.index(a.prime)
        if kind == "horizontal":
            if check_horizontal:
                # the primitive of a's prime at the two induced points
                v = (f(k, b.__class__(a.prime, b.base_x, b.kind, b.jets)) - f(k, a)) % P.primes[k] ** N
                if v:
                    raise AlgebraError("horizontal segment has nonzero contribution")
            continue
        comps[k] = (comps[k] + f(k, b) - f(k, a)) % P.primes[k] ** N
    return PeriodValue(P, N, tuple(comps))


def gm_cycle(primes: PrimeSet, x14, k1: int = 0, k3: int = 1, start=1) -> Chain:
    """P1 -> P2 vertical at k1, horizontal over x14, P3 -> P4 vertical at k3, horizontal back."""
    p1, p3 = primes.primes[k1], primes.primes[k3]
    x14, start = Fraction(x14), Fraction(start)
    pts = [ChainPoint(p1, start), ChainPoint(p1, x14), ChainPoint(p3, x14), ChainPoint(p3, start), ChainPoint(p1, start)]
    return Chain(primes, pts)


@dataclass
class ReductionReport:
    status: str  # "zero_within_bound" or "nonzero_at_precision"
    precision: int
    height: int
    witness: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"reduced": self.status, "precision": self.precision, "height": self.height,
                "witness": [str(w) for w in self.witness]}


def period_reduce(v: PeriodValue, height: int = 50) -> ReductionReport:
    """Look for a relation element with entries of height <= bound that kills v.

    Zero in the quotient at precision N means: there is a in A_0^d, sum a_k = 0,
    with a_k = v_k mod p_k^N.  For d = 1 only a = 0 is allowed.  For d >= 2
    we search a_1..a_{d-1} of bounded height and set a_d = -sum of the rest;
    for d = 2 the search is a CRT solve per denominator.
    """
    P = v.primes
    N = v.precision
    if v.is_zero():
        return ReductionReport("zero_within_bound", N, height, [0] * P.d)
    if P.d == 1:
        return ReductionReport("nonzero_at_precision", N, height)
    if P.d == 2:
        p1, p2 = P.primes
        q1, q2 = p1 ** N, p2 ** N
        M = q1 * q2
        for m in range(1, height + 1):
            if m % p1 == 0 or m % p2 == 0:
                continue
            # a = n/m with n/m = v1 mod q1 and -n/m = v2 mod q2
            n = _crt(v.components[0] * m % q1, q1, -v.components[1] * m % q2, q2) % M
            n = _sym(n, M)
            if abs(n) <= height:
                a = Fraction(n, m)
                return ReductionReport("zero_within_bound", N, height, [a, -a])
        return ReductionReport("nonzero_at_precision", N, height)
    cands = _small_rationals(P, height)
    import itertools

    for head in itertools.product(cands, repeat=P.d - 1):
        rel = list(head) + [-sum(head)]
        if all(_residue(a, p, N) == c for a, p, c in zip(rel, P.primes, v.components)):
            return ReductionReport("zero_within_bound", N, height, rel)
    return ReductionReport("nonzero_at_precision", N, height)


def _crt(a1, m1, a2, m2) -> int:
    t = (a2 - a1) * pow(m1, -1, m2) % m2
    return a1 + m1 * t


def _small_rationals(P: PrimeSet, H: int) -> list:
    out = set()
    for m in range(1, H + 1):
        if any(m % p == 0 for p in P):
            continue
        for n in range(-H, H + 1):
            out.add(Fraction(n, m))
    return sorted(out)


# ---------------------------------------------------------------------------
# JSON


def chain_from_json(obj) -> tuple:
    """Parse {"omega": ..., "primes": [...], "points": [...]} into (omega, chain)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "points" not in obj:
        raise ChainError("chain JSON needs a 'points' list")
    try:
        primes = PrimeSet(sorted(obj.get("primes") or {int(r["prime"]) for r in obj["points"]}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ChainError(f"bad chain JSON: {exc}") from exc
    pts = []
    for raw in obj["points"]:
        kind = raw.get("kind", "canonical_lift")
        prime = int(raw["prime"])
        if kind == "canonical_lift":
            pts.append(ChainPoint(prime, Fraction(raw["base_x"])))
        elif kind == "jet_point":
            jets = tuple(sorted(((_jetvar(k, primes.d), Fraction(c)) for k, c in raw["jets"].items()),
                                key=lambda t: t[0]))
            pts.append(ChainPoint(prime, None, "jet_point", jets))
        else:
            raise ChainError(f"unknown point kind {kind!r}")
    name = obj.get("omega", "gm_omega_e")
    if name == "gm_omega_e":
        omega = GmOmegaE(primes)
    elif name.startswith("exact:"):
        omega = ExactForm(primes, parse_poly(name[len("exact:"):], d=primes.d))
    else:
        raise ChainError(f"unknown form {name!r}")
    return omega, Chain(primes, pts)


def _jetvar(text: str, d: int) -> JetVar:
    f = parse_poly(text, d=d)
    vs = f.variables()
    if len(vs) != 1 or f != JetPoly.var(vs[0]):
        raise ChainError(f"{text!r} is not a jet variable")
    return vs[0]


def period_report(obj, N: int = 8, height: int = 50) -> dict:
    omega, chain = chain_from_json(obj)
    v = integrate(omega, chain, N)
    red = period_reduce(v, height)
    out = v.to_json()
    out["reduced"] = red.status
    out["height"] = height
    out["cycle"] = chain.is_cycle
    return out
