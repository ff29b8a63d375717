"""Command-line front end.

Subcommands: analyze (feasibility + multiplier + qualification
certificates at a point), gderiv (graphical-derivative membership for a
(d, w) pair), repro (pinned scenario suites with expected verdict
tables).  Exit codes: 0 completed, 1 verdict mismatch in repro, 2 input
error.
"""

import argparse
import json
import sys as _sys
import numpy as np

from ._sets import Tol
from .cone_core import normal_cone
from .cone_geometry import radial_probe
from .constraint_system import (
    example1_system, example3_system, section32_system,
    multiplier_solve, srcq_check, nondegeneracy_check,
    strict_complementarity_check, ngamma_graph_deriv_contains,
)
from .jsonio import SchemaError, load_json, parse_problem
from .stability import (
    PhiPoint, phi_subregularity_probe, solution_map_isolated_calm,
    kkt_isolated_calm, example41_problem, lp_kkt_data,
)
from .symmat import svec

ASSUMED = "ASSUMED: metric subregularity of x -> g(x) - K at the base point"
CHECKED = "CHECKED: multiplier-uniqueness qualification (certificate below)"


def _make_tol(value):
    if value is None:
        return Tol()
    return Tol(membership=value, zero=value / 10.0)


def _emit(report, fmt):
    if fmt == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        for line in report["lines"]:
            print(line)


def _cert_entry(name, cert):
    d = cert.to_json()
    d["name"] = name
    return d


def cmd_analyze(args):
    sysm, points = parse_problem(load_json(args.problem))
    pt = load_json(args.point)
    x = np.asarray(pt["x"], float)
    v = np.asarray(pt.get("v", np.zeros(sysm.dim_x)), float)
    tol = _make_tol(args.tol)

    gx = sysm.g(x)
    dist = np.linalg.norm(gx - sysm.cone.project(gx))
    if dist > tol.membership * (1 + np.linalg.norm(gx)):
        print(f"point infeasible: dist(g(x),K)={dist:.3e}", file=_sys.stderr)
        return 2

    lines = [f"problem: {sysm.name}  cone: {sysm.cone!r}",
             "feasibility: ok", ASSUMED, CHECKED]
    certs = []
    mres = multiplier_solve(sysm, x, v, tol)
    lines.append(f"multiplier: {'found' if mres.found else 'not found'} "
                 f"residual={mres.residual:.3e} members={len(mres.members)}")
    if mres.found:
        sc = srcq_check(sysm, x, v, mres.lam, tol)
        certs.append(_cert_entry("srcq", sc))
        lines.append(f"srcq: {sc.verdict}")
        st = strict_complementarity_check(sysm, x, v, tol)
        certs.append(_cert_entry("strict_complementarity", st))
        lines.append(f"strict_complementarity: {st.verdict}")
    nd = nondegeneracy_check(sysm, x, tol)
    certs.append(_cert_entry("nondegeneracy", nd))
    lines.append(f"nondegeneracy: {nd.verdict}")

    report = {"command": "analyze", "lines": lines, "certificates": certs}
    _emit(report, args.report)
    return 0


def cmd_gderiv(args):
    sysm, _ = parse_problem(load_json(args.problem))
    pr = load_json(args.pair)
    tol = _make_tol(args.tol)
    x = np.asarray(pr["x"], float)
    v = np.asarray(pr["v"], float)
    lam = np.asarray(pr["lam"], float)
    d = np.asarray(pr["d"], float)
    w = np.asarray(pr["w"], float)

    cert = ngamma_graph_deriv_contains(sysm, x, v, lam, d, w, tol)
    det = cert.details
    lines = [ASSUMED, CHECKED]
    if args.route in ("a", "both"):
        lines.append(f"route a: residual={det.get('route_a_residual', det['critical_gate']):.3e} "
                     f"holds={det.get('route_a_holds', False)}")
    if args.route in ("b", "both"):
        lines.append(f"route b: residual={det.get('route_b_residual', det['critical_gate']):.3e} "
                     f"holds={det.get('route_b_holds', False)}")
    if "route_a_residual" not in det:
        lines.append("reason: critical cone violation "
                     f"(gate residual {det['critical_gate']:.3e})")
    lines.append(f"verdict: {cert.verdict}")
    report = {"command": "gderiv", "lines": lines,
              "certificates": [_cert_entry("graph_deriv_membership", cert)]}
    _emit(report, args.report)
    return 0


# ---------------------------------------------------------------------------
# pinned reproduction scenarios

def _check(lines, failures, label, got, expected):
    ok = got == expected
    lines.append(f"{label}: {got} (expected {expected}) "
                 f"{'ok' if ok else 'MISMATCH'}")
    if not ok:
        failures.append(label)


def _repro_example1(lines, failures, tol):
    sysm = example1_system()
    xbar = np.array([-1.0, -1.0, 0.0])
    v0 = np.zeros(3)
    st = strict_complementarity_check(sysm, xbar, v0, tol)
    _check(lines, failures, "strict_complementarity(vbar=0)", st.verdict, "fails")
    N = normal_cone(sysm.cone, sysm.g(xbar), tol)
    table = [
        (np.concatenate([svec(-np.eye(2)), [-1.0]]), True),
        (np.concatenate([svec(np.diag([-1.0, 0.0])), [0.0]]), True),
        (np.concatenate([svec(np.eye(2)), [-1.0]]), False),
        (np.concatenate([svec(np.zeros((2, 2))), [1.0]]), False),
        (np.concatenate([svec(np.array([[0.0, 1.0], [1.0, 0.0]])), [0.0]]), False),
    ]
    got = [bool(N.contains(z, tol)) for z, _ in table]
    _check(lines, failures, "normal-cone membership table", got,
           [e for _, e in table])


def _repro_example2(lines, failures, tol):
    sysm = example1_system()
    xbar = np.array([-1.0, -1.0, 0.0])
    s1 = srcq_check(sysm, xbar, np.zeros(3), np.zeros(4), tol)
    _check(lines, failures, "srcq(vbar)", s1.verdict, "holds")
    lam_hat = np.concatenate([svec(np.diag([-1.0, 0.0])), [0.0]])
    v_hat = np.array([-1.0, 0.0, -1.0])
    s2 = srcq_check(sysm, xbar, v_hat, lam_hat, tol)
    _check(lines, failures, "srcq(vhat)", s2.verdict, "fails")
    _check(lines, failures, "srcq(vhat) witness nonzero",
           s2.witness is not None and float(np.linalg.norm(s2.witness)) > 1e-6,
           True)


def _repro_example3(lines, failures, tol):
    sysm = example3_system()
    xbar = svec(np.diag([0.0, 1.0]))
    vbar = svec(np.diag([-1.0, 0.0]))
    st = strict_complementarity_check(sysm, xbar, vbar, tol)
    _check(lines, failures, "strict_complementarity", st.verdict, "holds")
    mres = multiplier_solve(sysm, xbar, vbar, tol)
    _check(lines, failures, "distinct members found", len(mres.members) > 1, True)
    _check(lines, failures, "uniqueness", mres.uniqueness.verdict, "fails")


def _repro_example41(lines, failures, tol):
    problem = example41_problem()
    sysm = problem.sys
    lam = problem.lam_hint
    s = srcq_check(sysm, problem.xbar, problem.vbar, lam, tol)
    _check(lines, failures, "srcq", s.verdict, "holds")
    nd = nondegeneracy_check(sysm, problem.xbar, tol)
    _check(lines, failures, "nondegeneracy", nd.verdict, "fails")
    ic = solution_map_isolated_calm(problem, lam, tol)
    _check(lines, failures, "solution_map_isolated_calm", ic.verdict, "holds")


def _repro_kkt_lp(lines, failures, tol):
    cert = kkt_isolated_calm(*lp_kkt_data("nondegenerate"), tol=tol)
    _check(lines, failures, "kkt nondegenerate", cert.verdict, "holds")
    cert = kkt_isolated_calm(*lp_kkt_data("degenerate"), tol=tol)
    _check(lines, failures, "kkt degenerate", cert.verdict, "fails")


def _repro_section32(lines, failures, tol):
    sysm = section32_system()
    center = PhiPoint.at(sysm, [0.0], [0.5], [0.0])
    ks = [10, 100, 1000]
    seq = [([1.0 / k], [0.5], [1.0 / k]) for k in ks]
    ratios = phi_subregularity_probe(sysm, center, seq, tol=tol)
    ok = True
    for k, r in zip(ks, ratios):
        expect = 1.0 / (np.sqrt(2.0) * k)
        lines.append(f"k={k}: ratio={r:.6e} expected={expect:.6e}")
        ok = ok and abs(r - expect) <= 1e-12
    _check(lines, failures, "ratio table matches 1/(sqrt(2) k)", ok, True)


_REPRO = {
    "example1": _repro_example1,
    "example2": _repro_example2,
    "example3": _repro_example3,
    "example41": _repro_example41,
    "kkt_lp": _repro_kkt_lp,
    "section32": _repro_section32,
}


def cmd_repro(args):
    if args.name not in _REPRO:
        print(f"unknown scenario {args.name!r}; choose from "
              f"{sorted(_REPRO)}", file=_sys.stderr)
        return 2
    tol = _make_tol(args.tol)
    lines = [f"scenario: {args.name}", ASSUMED, CHECKED]
    failures = []
    _REPRO[args.name](lines, failures, tol)
    report = {"command": "repro", "name": args.name, "lines": lines,
              "failures": failures}
    _emit(report, args.report)
    return 1 if failures else 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="conestab",
        description="certificates for conic constraint systems")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="qualification certificates at a point")
    pa.add_argument("--problem", required=True)
    pa.add_argument("--point", required=True)
    pa.set_defaults(func=cmd_analyze)

    pg = sub.add_parser("gderiv", help="graphical-derivative membership")
    pg.add_argument("--problem", required=True)
    pg.add_argument("--pair", required=True)
    pg.add_argument("--route", choices=["a", "b", "both"], default="both")
    pg.set_defaults(func=cmd_gderiv)

    pr = sub.add_parser("repro", help="pinned scenario suites")
    pr.add_argument("name")
    pr.set_defaults(func=cmd_repro)

    for sp in (pa, pg, pr):
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--report", choices=["text", "json"], default="text")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"input error: {exc}", file=_sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"input error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    _sys.exit(main())
