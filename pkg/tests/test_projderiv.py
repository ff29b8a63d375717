import numpy as np
import pytest

from conestab._sets import Tol, DEFAULT_TOL
from conestab.cone_core import ConeDesc, Orthant, SOC, PSD, Zero, Free
from conestab.proj_deriv import (
    GraphPoint, proj_dir_deriv, sigma_term, sigma_grad, dnk_contains,
)
from conestab.oracle import (
    graph_sample, fd_proj_deriv, graph_tangent_residual, sigma_expansion,
)
from conestab.symmat import svec

CONES = {
    "orthant": ConeDesc([Orthant(5, "plus")]),
    "soc": ConeDesc([SOC(4, "plus")]),
    "psd": ConeDesc([PSD(3, "plus")]),
    "mixed": ConeDesc([PSD(2, "minus"), SOC(3, "plus"), Orthant(2, "plus"),
                       Zero(1), Free(1)]),
}


def test_graph_point_invariant_raises():
    K = ConeDesc([Orthant(2, "plus")])
    with pytest.raises(ValueError):
        GraphPoint(K, np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
    with pytest.raises(ValueError):
        GraphPoint(K, np.array([-1.0, 0.0]), np.zeros(2))
    gp = GraphPoint(K, np.array([0.0, 1.0]), np.array([-2.0, 0.0]))
    assert np.allclose(gp.z, [-2.0, 1.0])


def test_proj_dir_deriv_input_checks():
    K = ConeDesc([Orthant(2, "plus")])
    with pytest.raises(ValueError):
        proj_dir_deriv(K, np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        proj_dir_deriv(K, np.array([np.inf, 0.0]), np.zeros(2))


@pytest.mark.parametrize("K", CONES.values(), ids=CONES.keys())
def test_dir_deriv_matches_finite_differences(K):
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(25):
        z = rng.standard_normal(K.dim) * 2
        h = rng.standard_normal(K.dim)
        exact = proj_dir_deriv(K, z, h)
        approx, err = fd_proj_deriv(K, z, h)
        worst = max(worst, float(np.linalg.norm(exact - approx)))
    assert worst <= 1e-6


def test_sigma_term_frozen_psd_value():
    # y = diag(1,0), lam = diag(0,-1), h = offdiag(1): the curvature
    # functional evaluates to exactly 2
    K = ConeDesc([PSD(2, "plus")])
    gp = GraphPoint(K, svec(np.diag([1.0, 0.0])), svec(np.diag([0.0, -1.0])))
    h = svec(np.array([[0.0, 1.0], [1.0, 0.0]]))
    ups = sigma_term(K, gp, h)
    assert ups == pytest.approx(2.0, abs=1e-12)
    # the expansion oracle measures the same quantity with the opposite
    # sign: the support-function limit it computes equals -Upsilon
    sig, err = sigma_expansion(K, gp, h)
    assert sig == pytest.approx(-2.0, abs=1e-4)


def test_sigma_term_frozen_soc_boundary_value():
    K = ConeDesc([SOC(3, "plus")])
    y = np.array([1.0, 0.6, 0.8])
    lam = -0.35 * np.array([1.0, -0.6, -0.8])
    gp = GraphPoint(K, y, lam)
    h = np.array([0.16, 0.3, -0.1])
    h = h - (float(h @ lam) / float(lam @ lam)) * lam  # into the critical cone
    ups = sigma_term(K, gp, h)
    expected = (0.35 / 1.0) * (h[1] ** 2 + h[2] ** 2 - h[0] ** 2)
    assert ups == pytest.approx(expected, rel=1e-10)
    assert ups == pytest.approx(0.0315, abs=1e-12)
    sig, err = sigma_expansion(K, gp, h)
    assert sig == pytest.approx(-ups, abs=1e-5)


def test_sigma_polyhedral_blocks_vanish():
    K = ConeDesc([Orthant(3, "plus"), Zero(1), Free(1)])
    rng = np.random.default_rng(0)
    for _ in range(20):
        gp = graph_sample(K, rng.standard_normal(K.dim) * 2)
        C = K.critical_set(gp.y, gp.lam)
        h = C.project(rng.standard_normal(K.dim))
        assert sigma_term(K, gp, h) == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(sigma_grad(K, gp, h), 0.0, atol=1e-12)


@pytest.mark.parametrize("K", CONES.values(), ids=CONES.keys())
def test_sigma_grad_pairing_identity(K):
    # Upsilon is quadratic, so <grad Upsilon(h), h> = 2 Upsilon(h)
    rng = np.random.default_rng(1)
    for _ in range(20):
        gp = graph_sample(K, rng.standard_normal(K.dim) * 2)
        C = K.critical_set(gp.y, gp.lam)
        h = C.project(rng.standard_normal(K.dim))
        ups = sigma_term(K, gp, h)
        grad = sigma_grad(K, gp, h)
        assert ups >= -1e-12
        assert float(grad @ h) == pytest.approx(2.0 * ups, abs=1e-9)


def test_sigma_term_rejects_noncritical_direction():
    K = ConeDesc([Orthant(2, "plus")])
    gp = GraphPoint(K, np.zeros(2), np.array([-1.0, -1.0]))
    with pytest.raises(ValueError):
        sigma_term(K, gp, np.array([1.0, 0.0]))


@pytest.mark.parametrize("K", CONES.values(), ids=CONES.keys())
def test_dnk_routes_agree_on_members_and_nonmembers(K):
    rng = np.random.default_rng(11)
    for i in range(40):
        gp = graph_sample(K, rng.standard_normal(K.dim) * 2)
        h = rng.standard_normal(K.dim)
        if i % 2 == 0:
            dy = K.dir_deriv(gp.z, h)
            dl = h - dy
            cert = dnk_contains(K, gp, dy, dl)
            assert cert.verdict == "holds"
        else:
            cert = dnk_contains(K, gp, h, rng.standard_normal(K.dim))
            assert cert.verdict in ("holds", "fails")
        assert cert.details["route_a_residual"] is not None
        assert cert.details["route_b_residual"] is not None


def test_dnk_worked_psd_example():
    # at (diag(1,0), diag(0,-1)) the pair (dy, dl) built from the
    # projection derivative satisfies both characterizations to machine
    # precision, and a sign-flipped multiplier direction is rejected
    K = ConeDesc([PSD(2, "plus")])
    gp = GraphPoint(K, svec(np.diag([1.0, 0.0])), svec(np.diag([0.0, -1.0])))
    h = svec(np.array([[0.3, 1.0], [1.0, -0.5]]))
    dy = K.dir_deriv(gp.z, h)
    dl = h - dy
    cert = dnk_contains(K, gp, dy, dl)
    assert cert.verdict == "holds"
    assert cert.residual <= 1e-10
    # an off-diagonal multiplier perturbation leaves the polar of the
    # critical cone, so both routes must reject it
    bad = dnk_contains(K, gp, dy,
                       dl + 3.0 * svec(np.array([[0.0, 1.0], [1.0, 0.0]])))
    assert bad.verdict == "fails"


def test_graph_tangent_residual_consistency():
    K = ConeDesc([SOC(3, "plus")])
    rng = np.random.default_rng(2)
    gp = graph_sample(K, rng.standard_normal(3) * 2)
    h = rng.standard_normal(3)
    dy = K.dir_deriv(gp.z, h)
    dl = h - dy
    residuals = graph_tangent_residual(K, gp, dy, dl)
    assert residuals[-1] <= 1e-4
    assert residuals[-1] <= residuals[0] + 1e-12
