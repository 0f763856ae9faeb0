"""Command-line frontend: ``djet {delta,jet-ring,witt,laplacian,verify,period}``.

Exit codes: 0 success, 2 parse/usage error, 3 arithmetic precondition,
4 identity-verification failure.  Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .exact_algebra import (
    AlgebraError,
    CoeffRing,
    JetPoly,
    JetVar,
    ParseError,
    PrimeSet,
    canonical_text,
    parse_poly,
    series_to_json,
)

EXIT_USAGE, EXIT_ARITH, EXIT_VERIFY = 2, 3, 4


class UsageError(Exception):
    pass


class VerifyFailed(Exception):
    def __init__(self, payload):
        super().__init__("identity verification failed")
        self.payload = payload


def _emit(args, payload, text: str | None = None):
    if args.out == "json":
        print(json.dumps(payload, sort_keys=True, separators=(",", ":")))
    else:
        print(text if text is not None else json.dumps(payload, sort_keys=True, indent=1))


def _primes(args, default="2") -> PrimeSet:
    try:
        return PrimeSet.parse(args.primes or default)
    except (ValueError, AlgebraError) as exc:
        raise UsageError(f"bad --primes: {exc}") from exc


def _order(args, P: PrimeSet, default=None) -> tuple:
    if args.order is None:
        return default if default is not None else P.e
    try:
        r = tuple(int(t) for t in args.order.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --order {args.order!r}") from exc
    if len(r) != P.d or any(x < 0 for x in r):
        raise UsageError(f"--order needs {P.d} non-negative entries")
    return r


def _check_window(args):
    if args.prec is not None and args.prec < 1 or args.deg is not None and args.deg < 1:
        raise UsageError("--prec and --deg must be >= 1")


# ---------------------------------------------------------------------------


def cmd_delta(args):
    from .delta_calculus import apply_delta, delta_multi, frobenius_lift, phi_multi

    P = _primes(args)
    f = parse_poly(args.expr, CoeffRing.localized(P), P.d)
    if args.prime is not None:
        if args.prime not in P.primes:
            raise UsageError(f"--prime {args.prime} is not in --primes")
        times = args.times
        g = f
        for _ in range(times):
            g = frobenius_lift(P, args.prime, g) if args.phi else apply_delta(P, args.prime, g)
    else:
        r = _order(args, P, P.unit(0))
        g = phi_multi(P, r, f) if args.phi else delta_multi(P, r, f)
    text = canonical_text(g)
    _emit(args, {"input": canonical_text(f), "op": "phi" if args.phi else "delta", "result": text}, text)


def _presentation(args, P):
    from .jet_spaces import AffinePresentation, affine_line, gm_hyperbola, gm_open

    if args.scheme == "A1":
        return affine_line(P, "x")
    if args.scheme == "gm":
        return gm_open(P)
    if args.scheme == "xy":
        return gm_hyperbola(P)
    R = CoeffRing.localized(P)
    names = [v.strip() for v in (args.vars or "").split(",") if v.strip()]
    if not names:
        raise UsageError("--scheme custom needs --vars")
    rels = [parse_poly(t, R, P.d) for t in (args.relation or [])]
    loc = parse_poly(args.localizer, R, P.d) if args.localizer else None
    return AffinePresentation(P, names, rels, loc)


def cmd_jet_ring(args):
    from .jet_spaces import jet_presentation

    P = _primes(args)
    X = _presentation(args, P)
    r = _order(args, P)
    J = jet_presentation(X, r)
    d = J.as_dict()
    text = "\n".join([f"generators: {', '.join(d['vars'])}",
                      f"relations: {len(d['relations'])}"] + [f"  {t} = 0" for t in d["relations"]]
                     + ([f"localizer: {d['localizer']}"] if d["localizer"] else []))
    _emit(args, d, text)


def _witt_coords(text, n):
    try:
        vals = [int(t) for t in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad Witt coordinates {text!r}") from exc
    if len(vals) != n + 1:
        raise UsageError(f"Witt vectors of length {n} need {n + 1} coordinates")
    return vals


def cmd_witt(args):
    from .witt_vectors import WittVector, adjunction_check, ghost, witt_frobenius_delta, witt_law

    p, n = args.prime, args.length
    if args.action == "laws":
        law = witt_law(p, n)
        payload = {"prime": p, "length": n, "integral": law.check_integral(),
                   "S": [canonical_text(f) for f in law.sum_polys], "P": [canonical_text(f) for f in law.prod_polys]}
        text = "\n".join([f"S_{i} = {s}" for i, s in enumerate(payload["S"])]
                         + [f"P_{i} = {s}" for i, s in enumerate(payload["P"])])
        _emit(args, payload, text)
        return
    if args.action == "adjunction":
        x, y = JetPoly.var(JetVar("x")), JetPoly.var(JetVar("y"))
        vs, rels = (["x"], []) if args.scheme in (None, "A1") else (["x", "y"], [x * y - 1])
        rep = adjunction_check(vs, rels, args.mod, p, n)
        _emit(args, {"scheme": args.scheme or "A1", "mod": args.mod, "length": n, **rep.as_dict(), "ok": rep.ok})
        if not rep.ok:
            raise VerifyFailed(rep.as_dict())
        return
    if args.a is None:
        raise UsageError("--a is required")
    a = WittVector(p, _witt_coords(args.a, n), args.mod)
    if args.action == "ghost":
        vals = [str(Fraction(v)) for v in ghost(a)]
        _emit(args, {"ghost": vals}, " ".join(vals))
        return
    if args.action == "delta":
        if args.mod is not None:
            raise UsageError("delta on Witt vectors needs exact coordinates (omit --mod)")
        phi, dl = witt_frobenius_delta(a)
        out = {"phi": [str(c) for c in phi.coords], "delta": [str(c) for c in dl.coords]}
        _emit(args, out, f"phi = {out['phi']}\ndelta = {out['delta']}")
        return
    if args.b is None:
        raise UsageError("--b is required")
    b = WittVector(p, _witt_coords(args.b, n), args.mod)
    c = a + b if args.action == "add" else a * b
    coords = [str(v) for v in c.coords]
    _emit(args, {"result": coords}, ",".join(coords))


def cmd_laplacian(args):
    from .laplacians import ec_laplacian, gm_laplacian

    _check_window(args)
    P = _primes(args, "3,5")
    if args.kind == "gm":
        N, D = args.prec or 8, args.deg or 12
        L = gm_laplacian(P, N, D)
        payload = {"kind": "gm", "primes": list(P.primes), "precision": N, "degree": D,
                   "omega_e": L.omega_e.to_json(),
                   "f": [series_to_json(f) for f in L.f] if args.series else None,
                   "reports": [r.as_dict() for r in L.reports]}
    else:
        if any(p < 5 for p in P):
            raise UsageError("elliptic Laplacians need all primes >= 5")
        N, D = args.prec or 6, args.deg or 10
        L = ec_laplacian(args.a, args.b, P, N, D)
        payload = {"kind": "ec", "a": args.a, "b": args.b, "primes": list(P.primes), "precision": N, "degree": D,
                   "traces": {str(p): t for p, t in zip(P.primes, L.traces)},
                   "f": [series_to_json(f) for f in L.f] if args.series else None,
                   "reports": [r.as_dict() for r in L.reports]}
    if payload["f"] is None:
        del payload["f"]
    lines = []
    if args.kind == "ec":
        lines.append("traces: " + ", ".join(f"a_{p} = {t}" for p, t in payload["traces"].items()))
    for r in payload["reports"]:
        extra = f" r={tuple(r['r'])}" if "r" in r else ""
        lines.append(f"{r['status']:9s} {r['identity']} p={r['prime']}{extra} (valuation {r['defect_valuation']}/{r['precision']})")
    _emit(args, payload, "\n".join(lines))
    if not L.ok:
        raise VerifyFailed(payload)


def cmd_verify(args):
    from .verification import report_json, report_text, run_suites

    only = [s.strip() for s in args.only.split(",")] if args.only else None
    try:
        results = run_suites(args.seed, only)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    if args.out == "json":
        print(report_json(results, args.seed))
    else:
        print(report_text(results, args.seed))
    if not all(r.ok for r in results):
        return 1
    return 0


def cmd_period(args):
    from .periods import ChainError, period_report

    _check_window(args)
    raw = args.chain
    try:
        if not raw.lstrip().startswith("{"):
            with open(raw) as fh:
                raw = fh.read()
        obj = json.loads(raw)
        rep = period_report(obj, args.prec or 8, args.height)
    except (OSError, json.JSONDecodeError, ChainError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, AlgebraError) and not isinstance(exc, ChainError):
            raise
        raise UsageError(f"malformed chain: {exc}") from exc
    text = "\n".join([f"p={c['prime']}: {c['value']} mod p^{c['precision']}" for c in rep["components"]]
                     + [f"reduced: {rep['reduced']} (height {rep['height']})"])
    _emit(args, rep, text)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--primes", help="comma-separated primes, e.g. 2,3")
    common.add_argument("--order", help="multi-index, e.g. 1,1")
    common.add_argument("--prec", type=int, help="p-adic precision N")
    common.add_argument("--deg", type=int, help="total degree cap D")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", choices=("text", "json"), default="text")

    ap = argparse.ArgumentParser(prog="djet", description="Arithmetic jet spaces and Laplacians.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("delta", parents=[common], help="apply delta_p or phi_p to an expression")
    s.add_argument("--expr", required=True)
    s.add_argument("--prime", type=int)
    s.add_argument("--times", type=int, default=1)
    s.add_argument("--phi", action="store_true", help="apply the Frobenius lift instead")
    s.set_defaults(fn=cmd_delta)

    s = sub.add_parser("jet-ring", parents=[common], help="presentation of J^r(X)")
    s.add_argument("--scheme", choices=("A1", "gm", "xy", "custom"), default="A1")
    s.add_argument("--vars")
    s.add_argument("--relation", action="append")
    s.add_argument("--localizer")
    s.set_defaults(fn=cmd_jet_ring)

    s = sub.add_parser("witt", parents=[common], help="p-typical Witt vector arithmetic")
    s.add_argument("action", choices=("laws", "add", "mul", "ghost", "delta", "adjunction"))
    s.add_argument("--prime", type=int, default=2)
    s.add_argument("--length", type=int, default=1)
    s.add_argument("--a")
    s.add_argument("--b")
    s.add_argument("--mod", type=int)
    s.add_argument("--scheme", choices=("A1", "xy"))
    s.set_defaults(fn=cmd_witt)

    s = sub.add_parser("laplacian", parents=[common], help="G_m or elliptic Laplacian with identity reports")
    s.add_argument("kind", choices=("gm", "ec"))
    s.add_argument("--a", type=int, default=1)
    s.add_argument("--b", type=int, default=1)
    s.add_argument("--series", action="store_true", help="include the f_k series in the output")
    s.set_defaults(fn=cmd_laplacian)

    s = sub.add_parser("verify", parents=[common], help="run the verification suites")
    s.add_argument("--only", help="comma-separated suite names")
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("period", parents=[common], help="integrate omega along a chain")
    s.add_argument("--chain", required=True, help="chain JSON or a path to it")
    s.add_argument("--height", type=int, default=50)
    s.set_defaults(fn=cmd_period)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        code = args.fn(args)
    except (UsageError, ParseError) as exc:
        print(f"djet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerifyFailed as exc:
        print(f"djet: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (AlgebraError, ZeroDivisionError, ValueError) as exc:
        print(f"djet: arithmetic error: {exc}", file=sys.stderr)
        return EXIT_ARITH
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
