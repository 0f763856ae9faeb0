"""Acceptance criteria 1-12.

Each test runs its criterion inside the stated time limit and records one
PASS/FAIL line; conftest prints the collected lines in the terminal summary.
Run ``python tests/test_acceptance.py`` to get the same lines without pytest.
"""

import json
import subprocess
import sys
import time
from contextlib import contextmanager

import pytest

from djet import verification as V
from djet.differential_forms import ConjugateDerivation
from djet.exact_algebra import PrimeSet, indices_below, mi_norm
from djet.laplacians import (
    _T,
    _form_defect,
    _jet_vars,
    ec_laplacian,
    ec_trace,
    gm_f_series,
    gm_omega_e_series,
    series_d,
)

RESULTS: list = []


@contextmanager
def criterion(n: int, title: str, limit: float | None):
    t0 = time.perf_counter()
    ok, why = False, ""
    try:
        yield
        ok = True
    except AssertionError as exc:
        why = str(exc).splitlines()[0] if str(exc) else "assertion failed"
        raise
    finally:
        dt = time.perf_counter() - t0
        if ok and limit is not None and dt >= limit:
            ok, why = False, f"took {dt:.1f}s, limit {limit}s"
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'} ({dt:.1f}s) {title}" + (f": {why}" if why else "")
        RESULTS.append(line)
        print(line)
    if limit is not None:
        assert dt < limit, f"took {dt:.1f}s, limit {limit}s"


def _suite_ok(res):
    bad = [c.name for c in res.checks if not c.passed]
    assert not bad, f"{res.suite}: {bad[:5]}"


def test_01_delta_axioms():
    with criterion(1, "delta-ring axioms on 500 random polynomials", 10):
        res = V.suite_delta(42, count=500)
        _suite_ok(res)
        assert all(c.detail["samples"] == 500 for c in res.checks if "samples" in c.detail)


def test_02_commutator():
    with criterion(2, "commutator identity, 100 random g, all pairs", 30):
        _suite_ok(V.suite_commutator(42, count=100))


def test_03_witt():
    with criterion(3, "Witt integrality, ghost laws, adjunction counts", 60):
        _suite_ok(V.suite_witt(42))


def test_04_conjugate_duality():
    with criterion(4, "conjugate derivations and identity Gram matrix", 30):
        _suite_ok(V.suite_conjugate(42))


def test_05_df_expansion():
    with criterion(5, "df expansion reconstruction, 100 elements", 30):
        res = V.suite_df_expansion(42, count=100)
        _suite_ok(res)
        assert sum(c.detail["samples"] for c in res.checks) == 100


def _literal_partials(ps, N, D):
    """Evaluate partial_r f_k and compare with (-1)^|r| exactly as stated."""
    P = PrimeSet(ps)
    e = P.e
    table = {"T": _T(P) + 1}
    misses = []
    for k, p in enumerate(ps):
        f = gm_f_series(P, k, N, D)
        for r in indices_below(e):
            val = ConjugateDerivation(P, table, r, e, D=D).apply(f)
            if (val - (-1) ** mi_norm(r)).valuation() < N:
                misses.append((p, r))
    return misses


def test_06_gm_laplacian():
    N, D = 8, 12
    with criterion(6, "G_m Laplacian: df_k, partial_r f_k = (-1)^|r|, origin expansion", 120):
        res = V.suite_gm_laplacian(42, N, D)
        _suite_ok(res)
        # independent df_k check against omega_e built from the alternating sum
        for ps in ([3, 5], [5, 7], [2, 3]):
            P = PrimeSet(ps)
            for k, p in enumerate(ps):
                df = series_d(gm_f_series(P, k, N, D), _jet_vars(P, "T", P.e))
                assert _form_defect(df, gm_omega_e_series(P, p, N, D - 1), N) >= N
        misses = {str(ps): _literal_partials(ps, N, D) for ps in ([3, 5], [5, 7], [2, 3])}
        bad = {k: v for k, v in misses.items() if v}
        assert not bad, f"partial_r f_k != (-1)^|r| at {sum(map(len, bad.values()))} (p, r) pairs"


def _brute_trace(a, b, p):
    pts = 1 + sum(1 for x in range(p) for y in range(p) if (y * y - x ** 3 - a * x - b) % p == 0)
    return p + 1 - pts


def test_07_ec_laplacian():
    with criterion(7, "elliptic Laplacian for E(1,1), P={5} and {5,7}", 300):
        assert _brute_trace(1, 1, 5) == -3 == ec_trace(1, 1, 5)
        for p in (5, 7, 11, 13):
            t = _brute_trace(1, 1, p)
            assert t == ec_trace(1, 1, p) and t * t <= 4 * p
        for ps in ([5], [5, 7]):
            L = ec_laplacian(1, 1, PrimeSet(ps), 6, 10)
            ids = {r.identity for r in L.reports}
            assert {"df_k=omega_2e", "partial_r f_k", "psi2=Q/p"} <= ids
            bad = [(r.identity, r.prime) for r in L.reports if not r.ok]
            assert not bad, bad
            for r in L.reports:
                if r.identity == "psi2=Q/p":
                    assert r.detail["integral"] and r.detail["vanishes_at_origin"]
        _suite_ok(V.suite_ec_laplacian(42))


def test_08_formal_groups():
    with criterion(8, "formal group laws and logarithms mod deg 10", 30):
        _suite_ok(V.suite_formal_groups(42, 10))


def test_09_volume_wedge():
    with criterion(9, "volume determinant and wedge absorption", 30):
        _suite_ok(V.suite_volume(42))


def test_10_invariance():
    with criterion(10, "translation invariance of omega_e, failure for x dx", 60):
        res = V.suite_invariance(42, 8, 10)
        _suite_ok(res)
        assert any(c.name.startswith("x dx not invariant") for c in res.checks)


def test_11_periods():
    with criterion(11, "period integrals over chains", 30):
        _suite_ok(V.suite_periods(42, 8))


def test_12_determinism():
    cmd = [sys.executable, "-m", "djet", "verify", "--seed", "42", "--out", "json"]
    with criterion(12, "two verify --seed 42 runs are byte-identical", None):
        a = subprocess.run(cmd, capture_output=True, check=False)
        b = subprocess.run(cmd, capture_output=True, check=False)
        assert a.returncode == 0, a.stderr.decode()[-300:]
        assert a.stdout == b.stdout and a.stdout
        json.loads(a.stdout)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
