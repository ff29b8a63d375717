"""Vectorization of symmetric matrices.

Symmetric blocks are stored as vectors with off-diagonal entries scaled by
sqrt(2), so that the coordinate dot product of two encoded matrices equals
the trace inner product of the matrices themselves.
"""

import numpy as np

SQRT2 = np.sqrt(2.0)


def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


def order_of(m: int) -> int:
    """Matrix order n with n(n+1)/2 == m."""
    n = int((np.sqrt(8 * m + 1) - 1) / 2 + 0.5)
    if svec_dim(n) != m:
        raise ValueError(f"length {m} is not a triangular number")
    return n


def svec(A: np.ndarray) -> np.ndarray:
    """Encode a symmetric matrix as a vector (upper triangle, row-major)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    iu, ju = np.triu_indices(n)
    v = A[iu, ju].copy()
    v[iu != ju] *= SQRT2
    return v


def smat(v: np.ndarray) -> np.ndarray:
    """Decode a vector produced by svec back into a symmetric matrix."""
    v = np.asarray(v, dtype=float)
    n = order_of(v.size)
    iu, ju = np.triu_indices(n)
    w = v.copy()
    w[iu != ju] /= SQRT2
    A = np.zeros((n, n))
    A[iu, ju] = w
    A[ju, iu] = w
    return A
