import numpy as np
import pytest

from conestab.symmat import SQRT2, svec, smat, svec_dim, order_of


def test_dims():
    assert svec_dim(1) == 1
    assert svec_dim(2) == 3
    assert svec_dim(5) == 15
    for n in range(1, 8):
        assert order_of(svec_dim(n)) == n


def test_order_of_rejects_non_triangular():
    with pytest.raises(ValueError):
        order_of(4)


def test_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = rng.integers(1, 6)
        A = rng.standard_normal((n, n))
        A = 0.5 * (A + A.T)
        assert np.allclose(smat(svec(A)), A, atol=1e-14)


def test_isometry():
    # the scaling makes svec an isometry for the trace inner product
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = rng.integers(1, 6)
        A = rng.standard_normal((n, n))
        A = 0.5 * (A + A.T)
        B = rng.standard_normal((n, n))
        B = 0.5 * (B + B.T)
        assert np.isclose(float(svec(A) @ svec(B)), float(np.sum(A * B)),
                          atol=1e-12)


def test_known_entries():
    A = np.array([[1.0, 2.0], [2.0, 3.0]])
    v = svec(A)
    assert np.allclose(v, [1.0, 2.0 * SQRT2, 3.0])
