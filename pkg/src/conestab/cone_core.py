"""Primitive cone catalog.

A cone description is an ordered product of primitive cones (orthant,
second-order, PSD, zero, free).  Points of the ambient product space are
plain numpy vectors; symmetric-matrix blocks are stored in the sqrt(2)
scaled vectorized form of `symmat`, so every inner product below is a
coordinate dot product.

Sign-mirrored cones (the negative orthant, the negative PSD cone, the
polar of the second-order cone) are handled by computing on the negated
data and mirroring back; all formulas are written for the "plus" cone.
"""

import numpy as np

from ._sets import (
    Tol, DEFAULT_TOL, ConvexSet, FullSpace, ZeroSet, SignPattern, SOCLike,
    Halfspace, Hyperplane, Ray, ProductSet, PSDBlockSet,
)
from .symmat import svec, smat, svec_dim

# A point of the ambient space: plain float vector partitioned by blocks.
AmbientVec = np.ndarray

__all__ = [
    "AmbientVec", "Tol", "Orthant", "SOC", "PSD", "Zero", "Free", "ConeDesc",
    "project", "contains", "tangent_cone", "normal_cone", "ri_normal_contains",
]


def _parse_sign(sign):
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"unknown sign {sign!r}")


def _zscale(v):
    return max(1.0, float(np.linalg.norm(v)))


class PrimitiveCone:
    dim: int
    is_polyhedral = False

    def project(self, z):
        raise NotImplementedError

    def polar(self):
        raise NotImplementedError

    # first-order geometry -------------------------------------------------
    def tangent_set(self, y, tol) -> ConvexSet:
        raise NotImplementedError

    def normal_set(self, y, tol) -> ConvexSet:
        return self.tangent_set(y, tol).polar()

    def critical_set(self, y, lam, tol) -> ConvexSet:
        raise NotImplementedError

    def tangent_lineality(self, y, tol) -> np.ndarray:
        return self.tangent_set(y, tol).lineality_basis()

    def ri_normal(self, y, lam, tol) -> bool:
        raise NotImplementedError

    # second-order geometry ------------------------------------------------
    def dir_deriv(self, z, h, tol):
        raise NotImplementedError

    def upsilon(self, y, lam, h, tol) -> float:
        return 0.0

    def upsilon_grad(self, y, lam, h, tol):
        return np.zeros(self.dim)


class Orthant(PrimitiveCone):
    is_polyhedral = True

    def __init__(self, dim, sign="plus"):
        self.dim = int(dim)
        self.sign = _parse_sign(sign)

    def project(self, z):
        s = self.sign
        return s * np.maximum(s * np.asarray(z, float), 0.0)

    def polar(self):
        return Orthant(self.dim, -self.sign)

    def _active(self, y, tol):
        return np.abs(np.asarray(y, float)) <= tol.zero * _zscale(y)

    def tangent_set(self, y, tol):
        codes = np.where(self._active(y, tol), self.sign, SignPattern.FREE)
        return SignPattern(codes)

    def normal_set(self, y, tol):
        codes = np.where(self._active(y, tol), -self.sign, SignPattern.ZERO)
        return SignPattern(codes)

    def critical_set(self, y, lam, tol):
        act = self._active(y, tol)
        lam_on = np.abs(np.asarray(lam, float)) > tol.zero * _zscale(lam)
        codes = np.where(act, np.where(lam_on, SignPattern.ZERO, self.sign),
                         SignPattern.FREE)
        return SignPattern(codes)

    def ri_normal(self, y, lam, tol):
        act = self._active(y, tol)
        lam = np.asarray(lam, float)
        return bool(np.all(np.abs(lam[act]) > tol.zero * _zscale(lam)))

    def dir_deriv(self, z, h, tol):
        s = self.sign
        u = s * np.asarray(z, float)
        hu = s * np.asarray(h, float)
        sc = tol.zero * _zscale(u)
        out = np.where(u > sc, hu, np.where(u < -sc, 0.0, np.maximum(hu, 0.0)))
        return s * out


class Zero(PrimitiveCone):
    is_polyhedral = True

    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, z):
        return np.zeros(self.dim)

    def polar(self):
        return Free(self.dim)

    def tangent_set(self, y, tol):
        return ZeroSet(self.dim)

    def critical_set(self, y, lam, tol):
        return ZeroSet(self.dim)

    def ri_normal(self, y, lam, tol):
        return True

    def dir_deriv(self, z, h, tol):
        return np.zeros(self.dim)


class Free(PrimitiveCone):
    is_polyhedral = True

    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, z):
        return np.asarray(z, float).copy()

    def polar(self):
        return Zero(self.dim)

    def tangent_set(self, y, tol):
        return FullSpace(self.dim)

    def critical_set(self, y, lam, tol):
        return FullSpace(self.dim)

    def ri_normal(self, y, lam, tol):
        return float(np.linalg.norm(lam)) <= tol.membership * _zscale(lam)

    def dir_deriv(self, z, h, tol):
        return np.asarray(h, float).copy()


class SOC(PrimitiveCone):
    """Second-order cone {(z0, zbar): ||zbar|| <= z0} (sign plus) or its
    negative (sign minus, the polar of the plus cone)."""

    def __init__(self, dim, sign="plus"):
        if dim < 1:
            raise ValueError("SOC dimension must be >= 1")
        self.dim = int(dim)
        self.sign = _parse_sign(sign)
        self._scalar = Orthant(1, self.sign) if dim == 1 else None

    def _m(self, S):
        return S if self.sign == 1 else S.negate()

    def project(self, z):
        if self._scalar:
            return self._scalar.project(z)
        s = self.sign
        u = s * np.asarray(z, float)
        from ._sets import _soc_project
        return s * _soc_project(u)

    def polar(self):
        return SOC(self.dim, -self.sign)

    @staticmethod
    def _classify(u, tol):
        u0, ub = u[0], u[1:]
        nb = float(np.linalg.norm(ub))
        sc = tol.zero * _zscale(u)
        if float(np.linalg.norm(u)) <= sc:
            return "apex"
        if u0 - nb > sc:
            return "int"
        if -u0 - nb > sc:
            return "polar_int"
        if abs(u0 - nb) <= sc:
            return "bd"
        if abs(u0 + nb) <= sc:
            return "polar_bd"
        return "outside"

    @staticmethod
    def _bd_normal(u):
        """Outward normal direction (-1, ubar/||ubar||) at a boundary point."""
        a = np.empty_like(u)
        a[0] = -1.0
        a[1:] = u[1:] / np.linalg.norm(u[1:])
        return a

    def tangent_set(self, y, tol):
        if self._scalar:
            return self._scalar.tangent_set(y, tol)
        u = self.sign * np.asarray(y, float)
        case = self._classify(u, tol)
        if case == "int":
            return FullSpace(self.dim)
        if case == "apex":
            return self._m(SOCLike(self.dim, 1))
        if case == "bd":
            return self._m(Halfspace(self._bd_normal(u)))
        raise ValueError("point is not in the cone")

    def normal_set(self, y, tol):
        if self._scalar:
            return self._scalar.normal_set(y, tol)
        u = self.sign * np.asarray(y, float)
        case = self._classify(u, tol)
        if case == "int":
            return ZeroSet(self.dim)
        if case == "apex":
            return self._m(SOCLike(self.dim, -1))
        if case == "bd":
            return self._m(Ray(self._bd_normal(u)))
        raise ValueError("point is not in the cone")

    def critical_set(self, y, lam, tol):
        if self._scalar:
            return self._scalar.critical_set(y, lam, tol)
        u = self.sign * np.asarray(y, float)
        lu = self.sign * np.asarray(lam, float)
        ycase = self._classify(u, tol)
        lam_zero = float(np.linalg.norm(lu)) <= tol.zero * _zscale(lu)
        if ycase == "int":
            return FullSpace(self.dim)
        if ycase == "apex":
            if lam_zero:
                return self._m(SOCLike(self.dim, 1))
            lcase = self._classify(lu, tol)
            if lcase == "polar_int":
                return ZeroSet(self.dim)
            if lcase == "polar_bd":
                refl = lu.copy()
                refl[0] = -refl[0]
                return self._m(Ray(refl))
            raise ValueError("multiplier outside the normal cone")
        if ycase == "bd":
            a = self._bd_normal(u)
            return self._m(Halfspace(a) if lam_zero else Hyperplane(a))
        raise ValueError("point is not in the cone")

    def ri_normal(self, y, lam, tol):
        if self._scalar:
            return self._scalar.ri_normal(y, lam, tol)
        u = self.sign * np.asarray(y, float)
        lu = self.sign * np.asarray(lam, float)
        case = self._classify(u, tol)
        sc = _zscale(lu)
        if case == "int":
            return float(np.linalg.norm(lu)) <= tol.membership * sc
        if case == "apex":
            return -lu[0] - float(np.linalg.norm(lu[1:])) > tol.zero * sc
        if case == "bd":
            a = self._bd_normal(u)
            ah = a / np.linalg.norm(a)
            t = float(ah @ lu)
            on_ray = float(np.linalg.norm(lu - t * ah)) <= tol.membership * sc
            return on_ray and t > tol.zero * sc
        raise ValueError("point is not in the cone")

    def dir_deriv(self, z, h, tol):
        if self._scalar:
            return self._scalar.dir_deriv(z, h, tol)
        s = self.sign
        u = s * np.asarray(z, float)
        hu = s * np.asarray(h, float)
        case = self._classify(u, tol)
        if case == "int":
            out = hu
        elif case == "polar_int":
            out = np.zeros(self.dim)
        elif case == "apex":
            from ._sets import _soc_project
            out = _soc_project(hu)
        elif case == "bd":
            out = Halfspace(self._bd_normal(u)).project(hu)
        elif case == "polar_bd":
            refl = u.copy()
            refl[0] = -refl[0]
            out = Ray(refl).project(hu)
        else:
            u0, ub = u[0], u[1:]
            nb = float(np.linalg.norm(ub))
            w = ub / nb
            h0, hb = hu[0], hu[1:]
            wh = float(w @ hb)
            out = np.empty(self.dim)
            out[0] = 0.5 * (h0 + wh)
            out[1:] = 0.5 * (h0 * w + (1.0 + u0 / nb) * hb - (u0 / nb) * wh * w)
        return s * out

    def _upsilon_data(self, y, lam, tol):
        u = self.sign * np.asarray(y, float)
        lu = self.sign * np.asarray(lam, float)
        if self._scalar or self._classify(u, tol) != "bd":
            return None
        if float(np.linalg.norm(lu)) <= tol.zero * _zscale(lu):
            return None
        return u, lu

    def upsilon(self, y, lam, h, tol):
        data = self._upsilon_data(y, lam, tol)
        if data is None:
            return 0.0
        u, lu = data
        hu = self.sign * np.asarray(h, float)
        t = -lu[0]
        return (t / u[0]) * (float(hu[1:] @ hu[1:]) - hu[0] ** 2)

    def upsilon_grad(self, y, lam, h, tol):
        data = self._upsilon_data(y, lam, tol)
        if data is None:
            return np.zeros(self.dim)
        u, lu = data
        hu = self.sign * np.asarray(h, float)
        t = -lu[0]
        g = np.empty(self.dim)
        g[0] = -2.0 * (t / u[0]) * hu[0]
        g[1:] = 2.0 * (t / u[0]) * hu[1:]
        return self.sign * g


class PSD(PrimitiveCone):
    """Cone of positive (sign plus) or negative (sign minus) semidefinite
    symmetric matrices of a given order, in vectorized form."""

    def __init__(self, order, sign="plus"):
        self.order = int(order)
        self.dim = svec_dim(self.order)
        self.sign = _parse_sign(sign)

    def _mat(self, z):
        return self.sign * smat(z)

    def _m(self, S):
        return S if self.sign == 1 else S.negate()

    def project(self, z):
        w, U = np.linalg.eigh(self._mat(z))
        wp = np.maximum(w, 0.0)
        return self.sign * svec((U * wp) @ U.T)

    def polar(self):
        return PSD(self.order, -self.sign)

    def _eig_groups(self, A, tol):
        w, U = np.linalg.eigh(A)
        sc = tol.zero * max(1.0, float(np.abs(w).max(initial=0.0)))
        pos = np.where(w > sc)[0]
        neg = np.where(w < -sc)[0]
        zero = np.where((w <= sc) & (w >= -sc))[0]
        return w, U, pos, zero, neg

    def tangent_set(self, y, tol):
        w, U, pos, zero, neg = self._eig_groups(self._mat(y), tol)
        if neg.size:
            raise ValueError("point is not in the cone")
        codes = {(0, 0): "free", (0, 1): "free", (1, 1): "psd"}
        return self._m(PSDBlockSet(U, [pos, zero], codes))

    def normal_set(self, y, tol):
        w, U, pos, zero, neg = self._eig_groups(self._mat(y), tol)
        if neg.size:
            raise ValueError("point is not in the cone")
        codes = {(0, 0): "zero", (0, 1): "zero", (1, 1): "nsd"}
        return self._m(PSDBlockSet(U, [pos, zero], codes))

    def critical_set(self, y, lam, tol):
        Z = self._mat(y) + self._mat(lam)
        w, U, alpha, beta, gamma = self._eig_groups(Z, tol)
        codes = {(0, 0): "free", (0, 1): "free", (0, 2): "free",
                 (1, 1): "psd", (1, 2): "zero", (2, 2): "zero"}
        return self._m(PSDBlockSet(U, [alpha, beta, gamma], codes))

    def ri_normal(self, y, lam, tol):
        def rank(A):
            w = np.linalg.eigvalsh(A)
            sc = tol.zero * max(1.0, float(np.abs(w).max(initial=0.0)))
            return int(np.sum(np.abs(w) > sc))

        return rank(smat(y)) + rank(smat(lam)) == self.order

    def dir_deriv(self, z, h, tol):
        A = self._mat(z)
        H = self._mat(h)
        w, U = np.linalg.eigh(A)
        sc = tol.zero * max(1.0, float(np.abs(w).max(initial=0.0)))
        wc = np.where(np.abs(w) <= sc, 0.0, w)
        W = U.T @ H @ U
        p = np.maximum(wc, 0.0)
        denom = wc[:, None] - wc[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            C = np.where(denom != 0.0, (p[:, None] - p[None, :]) / denom,
                         (wc > 0.0)[:, None] * 1.0)
        out = C * W
        beta = np.where(wc == 0.0)[0]
        if beta.size:
            from ._sets import _eig_clip
            out[np.ix_(beta, beta)] = _eig_clip(W[np.ix_(beta, beta)], True)
        return self.sign * svec(U @ out @ U.T)

    def _upsilon_mats(self, y, lam, tol):
        Y = self._mat(y)
        L = self._mat(lam)
        w, U = np.linalg.eigh(Y)
        sc = tol.zero * max(1.0, float(np.abs(w).max(initial=0.0)))
        winv = np.where(w > sc, 1.0 / np.where(w > sc, w, 1.0), 0.0)
        Ypinv = (U * winv) @ U.T
        return Y, L, Ypinv

    def upsilon(self, y, lam, h, tol):
        _, L, Ypinv = self._upsilon_mats(y, lam, tol)
        H = self._mat(h)
        return -2.0 * float(np.trace(L @ H @ Ypinv @ H))

    def upsilon_grad(self, y, lam, h, tol):
        _, L, Ypinv = self._upsilon_mats(y, lam, tol)
        H = self._mat(h)
        G = -2.0 * (Ypinv @ H @ L + L @ H @ Ypinv)
        return self.sign * svec(0.5 * (G + G.T))


class ConeDesc:
    """Ordered product of primitive cones."""

    def __init__(self, blocks):
        self.blocks = tuple(blocks)
        self.dim = sum(b.dim for b in self.blocks)
        self.slices = []
        off = 0
        for b in self.blocks:
            self.slices.append(slice(off, off + b.dim))
            off += b.dim

    @property
    def is_polyhedral(self):
        return all(b.is_polyhedral for b in self.blocks)

    def split(self, z):
        z = np.asarray(z, float)
        if z.size != self.dim:
            raise ValueError(f"dimension mismatch: {z.size} != {self.dim}")
        return [z[sl] for sl in self.slices]

    def join(self, parts):
        return np.concatenate([np.asarray(p, float).ravel() for p in parts]) \
            if parts else np.zeros(0)

    def project(self, z):
        return self.join([b.project(p) for b, p in zip(self.blocks, self.split(z))])

    def polar(self):
        return ConeDesc([b.polar() for b in self.blocks])

    def contains(self, z, tol=DEFAULT_TOL):
        z = np.asarray(z, float)
        return float(np.linalg.norm(z - self.project(z))) <= tol.membership * (
            1.0 + float(np.linalg.norm(z)))

    def tangent_set(self, y, tol=DEFAULT_TOL):
        return ProductSet([b.tangent_set(p, tol)
                           for b, p in zip(self.blocks, self.split(y))])

    def normal_set(self, y, tol=DEFAULT_TOL):
        return ProductSet([b.normal_set(p, tol)
                           for b, p in zip(self.blocks, self.split(y))])

    def critical_set(self, y, lam, tol=DEFAULT_TOL):
        return ProductSet([b.critical_set(py, pl, tol) for b, py, pl in
                           zip(self.blocks, self.split(y), self.split(lam))])

    def tangent_lineality(self, y, tol=DEFAULT_TOL):
        cols = []
        for b, sl, p in zip(self.blocks, self.slices, self.split(y)):
            B = b.tangent_lineality(p, tol)
            for j in range(B.shape[1]):
                v = np.zeros(self.dim)
                v[sl] = B[:, j]
                cols.append(v)
        return np.array(cols).T if cols else np.zeros((self.dim, 0))

    def ri_normal(self, y, lam, tol=DEFAULT_TOL):
        return all(b.ri_normal(py, pl, tol) for b, py, pl in
                   zip(self.blocks, self.split(y), self.split(lam)))

    def dir_deriv(self, z, h, tol=DEFAULT_TOL):
        return self.join([b.dir_deriv(pz, ph, tol) for b, pz, ph in
                          zip(self.blocks, self.split(z), self.split(h))])

    def upsilon(self, y, lam, h, tol=DEFAULT_TOL):
        return sum(b.upsilon(py, pl, ph, tol) for b, py, pl, ph in
                   zip(self.blocks, self.split(y), self.split(lam), self.split(h)))

    def upsilon_grad(self, y, lam, h, tol=DEFAULT_TOL):
        return self.join([b.upsilon_grad(py, pl, ph, tol) for b, py, pl, ph in
                          zip(self.blocks, self.split(y), self.split(lam),
                              self.split(h))])

    def __repr__(self):
        names = []
        for b in self.blocks:
            if isinstance(b, Orthant):
                names.append(f"Orthant({b.dim},{'+' if b.sign > 0 else '-'})")
            elif isinstance(b, SOC):
                names.append(f"SOC({b.dim},{'+' if b.sign > 0 else '-'})")
            elif isinstance(b, PSD):
                names.append(f"PSD({b.order},{'+' if b.sign > 0 else '-'})")
            else:
                names.append(f"{type(b).__name__}({b.dim})")
        return "ConeDesc(" + " x ".join(names) + ")"


# Module-level API ---------------------------------------------------------

def project(K: ConeDesc, z: AmbientVec) -> AmbientVec:
    """Projection of z onto K, blockwise in closed form."""
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite input")
    return K.project(z)


def contains(K: ConeDesc, z: AmbientVec, tol: Tol = DEFAULT_TOL) -> bool:
    return K.contains(z, tol)


def _require_member(K, y, tol):
    if not K.contains(y, tol):
        raise ValueError("point is not in the cone (beyond tolerance)")


def tangent_cone(K: ConeDesc, y: AmbientVec, tol: Tol = DEFAULT_TOL) -> ConvexSet:
    _require_member(K, y, tol)
    return K.tangent_set(y, tol)


def normal_cone(K: ConeDesc, y: AmbientVec, tol: Tol = DEFAULT_TOL) -> ConvexSet:
    _require_member(K, y, tol)
    return K.normal_set(y, tol)


def ri_normal_contains(K: ConeDesc, y: AmbientVec, lam: AmbientVec,
                       tol: Tol = DEFAULT_TOL) -> bool:
    _require_member(K, y, tol)
    if not K.normal_set(y, tol).contains(lam, tol):
        raise ValueError("multiplier is outside the normal cone")
    return K.ri_normal(y, lam, tol)
