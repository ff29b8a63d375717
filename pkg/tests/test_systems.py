import json

import numpy as np
import pytest

from conestab._sets import Tol, DEFAULT_TOL
from conestab.cone_core import ConeDesc, Orthant, SOC, PSD, Zero, Free
from conestab.constraint_system import (
    ConstraintSystem, NGammaImage,
    example1_system, example3_system, section32_system,
    affine_system, quadratic_system,
    gamma_tangent_contains, multiplier_solve, multiplier_verify,
    srcq_check, nondegeneracy_check, strict_complementarity_check,
    critical_cone_gamma_contains, ngamma_graph_deriv_contains,
)
from conestab.jsonio import SchemaError, parse_cone, emit_cone, parse_problem
from conestab.symmat import svec

XBAR1 = np.array([-1.0, -1.0, 0.0])


def test_self_check_builtins():
    rng = np.random.default_rng(0)
    assert example1_system().self_check(rng.standard_normal(3))
    assert example3_system().self_check(rng.standard_normal(3))
    assert section32_system().self_check(rng.standard_normal(1))
    K = ConeDesc([SOC(3, "plus")])
    Qs = [rng.standard_normal((2, 2)) for _ in range(3)]
    sys = quadratic_system(K, Qs, rng.standard_normal((3, 2)),
                           rng.standard_normal(3))
    assert sys.self_check(rng.standard_normal(2))


def test_gamma_tangent_contains():
    sys = example1_system()
    assert gamma_tangent_contains(sys, XBAR1, np.zeros(3))
    assert gamma_tangent_contains(sys, XBAR1, np.array([1.0, 1.0, 0.0]))
    assert not gamma_tangent_contains(sys, XBAR1, np.array([0.0, 0.0, -1.0]))
    # the slack coordinate pulls the matrix part with it
    assert gamma_tangent_contains(sys, XBAR1, np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        gamma_tangent_contains(sys, np.array([0.0, 0.0, -1.0]), np.zeros(3))


def test_multiplier_zero_target():
    sys = example1_system()
    res = multiplier_solve(sys, XBAR1, np.zeros(3))
    assert res.found
    assert np.linalg.norm(res.lam) <= 1e-8
    assert multiplier_verify(sys, XBAR1, np.zeros(3), res.lam)


def test_multiplier_image_membership():
    sys = example1_system()
    img = NGammaImage(sys, XBAR1)
    lam = np.concatenate([svec(-np.eye(2)), [-1.0]])
    v = sys.adjoint_apply(XBAR1, lam)
    assert np.allclose(v, [-1.0, -1.0, -3.0])
    assert img.contains(v)
    assert not img.contains(-v)


def test_multiplier_example3_segment():
    # the multiplier set at the reference data is a segment; both extreme
    # points verify and the search reports non-uniqueness with distinct
    # members
    sys = example3_system()
    xbar = svec(np.diag([0.0, 1.0]))
    vbar = svec(np.diag([-1.0, 0.0]))
    lam_a = np.concatenate([vbar, np.zeros(3)])
    lam_b = np.concatenate([np.zeros(3), vbar])
    assert multiplier_verify(sys, xbar, vbar, lam_a)
    assert multiplier_verify(sys, xbar, vbar, lam_b)
    res = multiplier_solve(sys, xbar, vbar)
    assert res.found
    assert len(res.members) > 1
    assert res.uniqueness.verdict == "fails"
    assert res.uniqueness.witness is not None


def test_srcq_example1_both_verdicts():
    sys = example1_system()
    holds = srcq_check(sys, XBAR1, np.zeros(3), np.zeros(4))
    assert holds.verdict == "holds"
    assert len(holds.checked) >= 3
    lam_hat = np.concatenate([svec(np.diag([-1.0, 0.0])), [0.0]])
    v_hat = np.array([-1.0, 0.0, -1.0])
    fails = srcq_check(sys, XBAR1, v_hat, lam_hat)
    assert fails.verdict == "fails"
    w = fails.witness
    assert w is not None and np.linalg.norm(w) > 1e-6
    # the witness lives in the adjoint kernel
    assert np.linalg.norm(sys.jacobian(XBAR1).T @ w) <= 1e-6 * np.linalg.norm(w)


def test_srcq_homogeneous_in_target():
    sys = example1_system()
    lam_hat = np.concatenate([svec(np.diag([-1.0, 0.0])), [0.0]])
    v_hat = np.array([-1.0, 0.0, -1.0])
    assert srcq_check(sys, XBAR1, 2 * v_hat, 2 * lam_hat).verdict == "fails"
    assert srcq_check(sys, XBAR1, np.zeros(3), np.zeros(4)).verdict == "holds"


def test_srcq_rejects_unverified_multiplier():
    sys = example1_system()
    with pytest.raises(ValueError):
        srcq_check(sys, XBAR1, np.array([1.0, 0.0, 0.0]), np.zeros(4))


def test_nondegeneracy_cases():
    free = affine_system(ConeDesc([Free(2)]), np.eye(2), np.zeros(2))
    assert nondegeneracy_check(free, np.zeros(2)).verdict == "holds"
    ortho = affine_system(ConeDesc([Orthant(2, "plus")]), np.eye(2), np.zeros(2))
    assert nondegeneracy_check(ortho, np.zeros(2)).verdict == "holds"
    # a wide cone with a thin Jacobian cannot be nondegenerate
    thin = affine_system(ConeDesc([Zero(3)]), np.ones((3, 1)), np.zeros(3))
    cert = nondegeneracy_check(thin, np.zeros(1))
    assert cert.verdict == "fails"
    assert cert.details["rank"] < cert.details["dim_y"]


def test_strict_complementarity_cases():
    sys3 = example3_system()
    xbar = svec(np.diag([0.0, 1.0]))
    vbar = svec(np.diag([-1.0, 0.0]))
    assert strict_complementarity_check(sys3, xbar, vbar).verdict == "holds"
    sys1 = example1_system()
    assert strict_complementarity_check(sys1, XBAR1, np.zeros(3)).verdict == "fails"
    inactive = affine_system(ConeDesc([Orthant(2, "plus")]), np.eye(2),
                             np.ones(2))
    assert strict_complementarity_check(inactive, np.ones(2),
                                        np.zeros(2)).verdict == "holds"
    with pytest.raises(ValueError):
        strict_complementarity_check(sys1, XBAR1, np.array([1.0, 1.0, 1.0]))


def test_critical_cone_gamma_contains():
    sys = example1_system()
    lam0 = np.zeros(4)
    assert critical_cone_gamma_contains(sys, XBAR1, np.zeros(3), lam0,
                                        np.zeros(3))
    assert critical_cone_gamma_contains(sys, XBAR1, np.zeros(3), lam0,
                                        np.array([1.0, 1.0, 0.0]))
    assert not critical_cone_gamma_contains(sys, XBAR1, np.zeros(3), lam0,
                                            np.array([0.0, 0.0, -1.0]))


def test_ngamma_graph_deriv_trivial_pair_holds():
    sys = example1_system()
    cert = ngamma_graph_deriv_contains(sys, XBAR1, np.zeros(3), np.zeros(4),
                                       np.zeros(3), np.zeros(3))
    assert cert.verdict == "holds"
    assert cert.details["route_a_holds"] and cert.details["route_b_holds"]
    assert len(cert.assumptions) == 1


def test_ngamma_graph_deriv_adjoint_image_holds():
    # d = 0 with w in the adjoint image of the polar of the critical cone
    sys = example1_system()
    xi = np.concatenate([svec(-np.eye(2)), [-1.0]])
    w = sys.adjoint_apply(XBAR1, xi)
    cert = ngamma_graph_deriv_contains(sys, XBAR1, np.zeros(3), np.zeros(4),
                                       np.zeros(3), w)
    assert cert.verdict == "holds"


def test_ngamma_graph_deriv_gate_fails_fast():
    sys = example1_system()
    cert = ngamma_graph_deriv_contains(sys, XBAR1, np.zeros(3), np.zeros(4),
                                       np.array([0.0, 0.0, -1.0]), np.zeros(3))
    assert cert.verdict == "fails"
    assert "route_a_residual" not in cert.details
    assert cert.details["critical_gate"] > 1e-6


def test_ngamma_graph_deriv_fails_on_wrong_dual_motion():
    sys = example1_system()
    # w pointing along +adjoint of an interior cone direction cannot be
    # realized over the polar at d = 0
    xi = np.concatenate([svec(np.eye(2)), [1.0]])
    w = sys.adjoint_apply(XBAR1, xi)
    cert = ngamma_graph_deriv_contains(sys, XBAR1, np.zeros(3), np.zeros(4),
                                       np.zeros(3), w)
    assert cert.verdict == "fails"


def test_ngamma_graph_deriv_carries_srcq_note():
    sys = example1_system()
    sc = srcq_check(sys, XBAR1, np.zeros(3), np.zeros(4))
    cert = ngamma_graph_deriv_contains(sys, XBAR1, np.zeros(3), np.zeros(4),
                                       np.zeros(3), np.zeros(3), srcq=sc)
    assert any("holds" in line for line in cert.checked)


# ---------------------------------------------------------------------------
# JSON schemas

def test_cone_round_trip():
    K = ConeDesc([PSD(2, "plus"), SOC(3, "minus"), Orthant(2, "plus"),
                  Zero(1), Free(2)])
    K2 = parse_cone(emit_cone(K))
    assert K2.dim == K.dim
    rng = np.random.default_rng(0)
    for _ in range(20):
        z = rng.standard_normal(K.dim)
        assert np.allclose(K.project(z), K2.project(z))


def test_parse_cone_rejects_bad_input():
    with pytest.raises(SchemaError):
        parse_cone({"product": []})
    with pytest.raises(SchemaError):
        parse_cone({"product": [{"simplex": {"dim": 2}}]})
    with pytest.raises(SchemaError):
        parse_cone({"product": [{"orthant": {}}]})
    with pytest.raises(SchemaError):
        parse_cone({})


def test_parse_problem_builtin_and_affine():
    sys, pts = parse_problem({"mapping": {"builtin": "example1"},
                              "points": {"base": [-1, -1, 0]}})
    assert sys.name == "example1"
    assert np.allclose(pts["base"], XBAR1)
    sys2, _ = parse_problem({
        "cone": {"product": [{"orthant": {"dim": 2, "sign": "plus"}}]},
        "mapping": {"affine": {"A": [[1, 0], [0, 1]], "b": [0, 0]}}})
    assert np.allclose(sys2.g(np.array([1.0, 2.0])), [1.0, 2.0])
    with pytest.raises(SchemaError):
        parse_problem({"mapping": {"builtin": "nope"}})
    with pytest.raises(SchemaError):
        parse_problem({"mapping": {}})
