"""Hypothesis strategies shared by the property tests."""

from hypothesis import strategies as st

from djet.exact_algebra import QQ, JetPoly, JetVar, PrimeSet


def jet_polys(primes: PrimeSet, names=("x", "y"), jets=True, ring=QQ, max_terms=3, max_exp=2, coeffs=None):
    vs = [JetVar(n, primes.zero) for n in names]
    if jets:
        vs += [JetVar(names[0], primes.unit(k)) for k in range(primes.d)]
    coeffs = coeffs or st.integers(-4, 4)
    mono = st.lists(st.tuples(st.sampled_from(vs), st.integers(1, max_exp)), max_size=2, unique_by=lambda t: t[0])
    term = st.tuples(mono.map(tuple), coeffs)
    return st.lists(term, min_size=1, max_size=max_terms).map(lambda ts: JetPoly.from_terms(ts, ring))
