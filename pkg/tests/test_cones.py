import numpy as np
import pytest

from conestab._sets import DEFAULT_TOL
from conestab.cone_core import (
    ConeDesc, Orthant, SOC, PSD, Zero, Free,
    project, contains, tangent_cone, normal_cone, ri_normal_contains,
)
from conestab.symmat import svec

CONES = {
    "orthant": ConeDesc([Orthant(4, "plus")]),
    "orthant_minus": ConeDesc([Orthant(3, "minus")]),
    "soc": ConeDesc([SOC(4, "plus")]),
    "soc_minus": ConeDesc([SOC(3, "minus")]),
    "soc_scalar": ConeDesc([SOC(1, "plus")]),
    "psd": ConeDesc([PSD(3, "plus")]),
    "psd_minus": ConeDesc([PSD(2, "minus")]),
    "zero": ConeDesc([Zero(2)]),
    "free": ConeDesc([Free(2)]),
    "mixed": ConeDesc([PSD(2, "plus"), SOC(3, "minus"), Orthant(2, "plus"),
                       Zero(1), Free(1)]),
}


@pytest.mark.parametrize("K", CONES.values(), ids=CONES.keys())
def test_projection_idempotent_and_member(K):
    rng = np.random.default_rng(0)
    for _ in range(50):
        z = rng.standard_normal(K.dim) * 2
        p = project(K, z)
        assert contains(K, p)
        assert np.allclose(project(K, p), p, atol=1e-10)


@pytest.mark.parametrize("K", CONES.values(), ids=CONES.keys())
def test_moreau_decomposition(K):
    rng = np.random.default_rng(1)
    Kp = K.polar()
    for _ in range(100):
        z = rng.standard_normal(K.dim) * 3
        p = K.project(z)
        q = Kp.project(z)
        scale = 1.0 + float(np.linalg.norm(z))
        assert np.linalg.norm(p + q - z) <= 1e-10 * scale
        assert abs(float(p @ q)) <= 1e-10 * scale ** 2


@pytest.mark.parametrize("K", CONES.values(), ids=CONES.keys())
def test_tangent_normal_polarity(K):
    # on sampled base points, the normal set is the polar of the tangent set
    rng = np.random.default_rng(2)
    for _ in range(10):
        y = K.project(rng.standard_normal(K.dim) * 2)
        T = K.tangent_set(y)
        N = K.normal_set(y)
        for _ in range(10):
            t = T.project(rng.standard_normal(K.dim))
            n = N.project(rng.standard_normal(K.dim))
            assert float(t @ n) <= 1e-8 * (1 + np.linalg.norm(t) * np.linalg.norm(n))
        # tangent contains the cone shifted to y along feasible rays
        w = K.project(rng.standard_normal(K.dim))
        assert T.contains(w - y) or T.dist(w - y) <= 1e-7 * (1 + np.linalg.norm(w))


@pytest.mark.parametrize("K", CONES.values(), ids=CONES.keys())
def test_critical_cone_structure(K):
    # critical directions are tangent and orthogonal to the multiplier
    rng = np.random.default_rng(3)
    for _ in range(10):
        z = rng.standard_normal(K.dim) * 2
        y = K.project(z)
        lam = z - y
        C = K.critical_set(y, lam)
        T = K.tangent_set(y)
        for _ in range(10):
            h = C.project(rng.standard_normal(K.dim))
            assert T.dist(h) <= 1e-7 * (1 + np.linalg.norm(h))
            assert abs(float(h @ lam)) <= 1e-7 * (1 + np.linalg.norm(h) *
                                                  np.linalg.norm(lam))


@pytest.mark.parametrize("K", CONES.values(), ids=CONES.keys())
def test_dir_deriv_matches_tangent_projection_at_member(K):
    # at an interior-of-graph point z in K the derivative is the tangent
    # projection of the direction
    rng = np.random.default_rng(4)
    for _ in range(20):
        y = K.project(rng.standard_normal(K.dim) * 2)
        h = rng.standard_normal(K.dim)
        d = K.dir_deriv(y, h)
        T = K.tangent_set(y)
        assert np.allclose(d, T.project(h), atol=1e-7)


@pytest.mark.parametrize("K", CONES.values(), ids=CONES.keys())
def test_dir_deriv_positively_homogeneous(K):
    rng = np.random.default_rng(5)
    for _ in range(20):
        z = rng.standard_normal(K.dim) * 2
        h = rng.standard_normal(K.dim)
        d1 = K.dir_deriv(z, h)
        d2 = K.dir_deriv(z, 2.5 * h)
        assert np.allclose(2.5 * d1, d2, atol=1e-9)


def test_sign_mirroring():
    rng = np.random.default_rng(6)
    for Kp, Km in [(ConeDesc([PSD(2, "plus")]), ConeDesc([PSD(2, "minus")])),
                   (ConeDesc([SOC(3, "plus")]), ConeDesc([SOC(3, "minus")])),
                   (ConeDesc([Orthant(3, "plus")]), ConeDesc([Orthant(3, "minus")]))]:
        for _ in range(20):
            z = rng.standard_normal(Kp.dim)
            assert np.allclose(Kp.project(z), -Km.project(-z), atol=1e-12)


def test_soc_membership_cases():
    K = ConeDesc([SOC(3, "plus")])
    assert contains(K, np.array([2.0, 1.0, 1.0]))
    assert contains(K, np.array([np.sqrt(2.0), 1.0, 1.0]))
    assert not contains(K, np.array([1.0, 1.0, 1.0]))
    assert not contains(K, np.array([-1.0, 0.0, 0.0]))


def test_orthant_tangent_normal_cases():
    K = ConeDesc([Orthant(2, "plus")])
    y = np.array([0.0, 1.0])
    T = tangent_cone(K, y)
    N = normal_cone(K, y)
    assert T.contains(np.array([1.0, -5.0]))
    assert not T.contains(np.array([-1.0, 0.0]))
    assert N.contains(np.array([-3.0, 0.0]))
    assert not N.contains(np.array([0.0, -1.0]))
    with pytest.raises(ValueError):
        tangent_cone(K, np.array([-1.0, 0.0]))


def test_psd_apex_sets():
    K = ConeDesc([PSD(2, "plus")])
    y = np.zeros(3)
    T = tangent_cone(K, y)
    N = normal_cone(K, y)
    assert T.contains(svec(np.eye(2)))
    assert not T.contains(svec(-np.eye(2)))
    assert N.contains(svec(-np.eye(2)))


def test_ri_normal_cases():
    K = ConeDesc([Orthant(2, "plus")])
    # inactive point: normal cone {0}, its relative interior contains 0
    assert ri_normal_contains(K, np.array([1.0, 2.0]), np.zeros(2))
    # active point with a zero multiplier component: not relative interior
    assert not ri_normal_contains(K, np.array([0.0, 0.0]),
                                  np.array([-1.0, 0.0]))
    assert ri_normal_contains(K, np.array([0.0, 0.0]),
                              np.array([-1.0, -2.0]))
    P = ConeDesc([PSD(2, "plus")])
    assert ri_normal_contains(P, svec(np.diag([1.0, 0.0])),
                              svec(np.diag([0.0, -2.0])))
    assert not ri_normal_contains(P, svec(np.diag([1.0, 0.0])), np.zeros(3))
    with pytest.raises(ValueError):
        ri_normal_contains(K, np.array([1.0, 1.0]), np.array([-1.0, 0.0]))


def test_critical_cone_psd_worked_case():
    # y = diag(1,0), lam = diag(0,-1): critical directions are the
    # symmetric matrices with vanishing (2,2) entry
    K = ConeDesc([PSD(2, "plus")])
    y = svec(np.diag([1.0, 0.0]))
    lam = svec(np.diag([0.0, -1.0]))
    C = K.critical_set(y, lam)
    assert C.contains(svec(np.array([[1.0, 2.0], [2.0, 0.0]])))
    assert not C.contains(svec(np.diag([0.0, 1.0])))
    assert not C.contains(svec(np.diag([0.0, -1.0])))


def test_tangent_lineality_columns_are_linear_directions():
    for K in CONES.values():
        rng = np.random.default_rng(7)
        y = K.project(rng.standard_normal(K.dim))
        B = K.tangent_lineality(y)
        T = K.tangent_set(y)
        for j in range(B.shape[1]):
            assert T.dist(B[:, j]) <= 1e-8
            assert T.dist(-B[:, j]) <= 1e-8


def test_project_rejects_nonfinite():
    K = ConeDesc([Orthant(2, "plus")])
    with pytest.raises(ValueError):
        project(K, np.array([np.nan, 0.0]))
