"""Nonlinear constraint systems g(x) in K: feasible-set tangents,
multiplier sets, constraint-qualification certificates, and the
graphical-derivative membership test for the normal-cone map of the
feasible set Gamma = g^{-1}(K).

Certificates carry an `assumptions` tuple: tangent/normal formulas for
Gamma are exact only under metric subregularity of x -> g(x) - K, which
is assumed, never computed.
"""

from dataclasses import dataclass, field
import numpy as np

from ._sets import (
    Tol, DEFAULT_TOL, Certificate, AffineSet, Hyperplane, ShiftedSet,
    dykstra,
)
from .cone_core import ConeDesc, AmbientVec
from .cone_geometry import tangent_of_normal, subspace_cone_trivial
from .proj_deriv import GraphPoint, dnk_contains

SUBREG_ASSUMPTION = "metric subregularity of x -> g(x) - K at the base point"

__all__ = [
    "ConstraintSystem", "MultiplierSolveResult", "NGammaImage",
    "example1_system", "example3_system", "section32_system",
    "affine_system", "quadratic_system",
    "gamma_tangent_contains", "multiplier_solve", "multiplier_verify",
    "srcq_check", "nondegeneracy_check", "strict_complementarity_check",
    "critical_cone_gamma_contains", "ngamma_graph_deriv_contains",
]


class ConstraintSystem:
    """Twice differentiable g with its cone K.

    `value(x)` returns g(x) in the ambient coordinates of K, `jac(x)` the
    dense Jacobian matrix, and `hess(x, lam)` the Hessian of the scalar
    function <lam, g(.)> at x.  Adjoints are taken through the transpose,
    which is exact in these coordinates.
    """

    def __init__(self, dim_x, cone: ConeDesc, value, jac, hess=None,
                 name="custom", is_affine=False):
        assert dim_x >= 1
        self.dim_x = int(dim_x)
        self.cone = cone
        self._value = value
        self._jac = jac
        self._hess = hess
        self.name = name
        self.is_affine = bool(is_affine)

    def g(self, x):
        out = np.asarray(self._value(np.asarray(x, float)), float)
        assert out.size == self.cone.dim
        return out

    def jacobian(self, x):
        J = np.asarray(self._jac(np.asarray(x, float)), float)
        assert J.shape == (self.cone.dim, self.dim_x)
        return J

    def jac_apply(self, x, h):
        return self.jacobian(x) @ np.asarray(h, float)

    def adjoint_apply(self, x, mu):
        return self.jacobian(x).T @ np.asarray(mu, float)

    def hess_lambda(self, x, lam):
        if self._hess is None:
            return np.zeros((self.dim_x, self.dim_x))
        H = np.asarray(self._hess(np.asarray(x, float),
                                  np.asarray(lam, float)), float)
        assert H.shape == (self.dim_x, self.dim_x)
        return H

    def hess_apply(self, x, lam, d):
        return self.hess_lambda(x, lam) @ np.asarray(d, float)

    def self_check(self, x, rng=None, n_probes=5):
        """Derivative consistency on random probes: finite-difference
        Jacobian (1e-5 relative), adjoint identity and Hessian symmetry
        (1e-10)."""
        rng = rng or np.random.default_rng(0)
        x = np.asarray(x, float)
        J = self.jacobian(x)
        g0 = self.g(x)
        t = 1e-6
        for _ in range(n_probes):
            h = rng.standard_normal(self.dim_x)
            mu = rng.standard_normal(self.cone.dim)
            lam = rng.standard_normal(self.cone.dim)
            e = rng.standard_normal(self.dim_x)
            fd = (self.g(x + t * h) - self.g(x - t * h)) / (2 * t)
            rel = np.linalg.norm(fd - J @ h) / (1.0 + np.linalg.norm(J @ h))
            assert rel <= 1e-5, f"Jacobian mismatch {rel:.2e}"
            gap = abs(float((J @ h) @ mu) - float(h @ (J.T @ mu)))
            assert gap <= 1e-10 * (1 + np.linalg.norm(h) * np.linalg.norm(mu))
            Hd = self.hess_apply(x, lam, h)
            He = self.hess_apply(x, lam, e)
            sym = abs(float(Hd @ e) - float(He @ h))
            assert sym <= 1e-10 * (1 + np.linalg.norm(h) * np.linalg.norm(e))
        return True


# ---------------------------------------------------------------------------
# builtin systems

def example1_system() -> ConstraintSystem:
    """x in R^2, t in R; g(x,t) = (Diag(x) + t ones(2,2) + I; t) with
    K = PSD(2) x R_+; base point (-1, -1, 0) sits at the cone apex."""
    from .symmat import svec
    from .cone_core import PSD, Orthant

    E = np.ones((2, 2))
    I2 = np.eye(2)

    def value(xt):
        x, t = xt[:2], xt[2]
        return np.concatenate([svec(np.diag(x) + t * E + I2), [t]])

    cols = np.column_stack([
        np.concatenate([svec(np.diag([1.0, 0.0])), [0.0]]),
        np.concatenate([svec(np.diag([0.0, 1.0])), [0.0]]),
        np.concatenate([svec(E), [1.0]]),
    ])

    return ConstraintSystem(3, ConeDesc([PSD(2, "plus"), Orthant(1, "plus")]),
                            value, lambda xt: cols, name="example1",
                            is_affine=True)


def example3_system() -> ConstraintSystem:
    """X in S^2 (svec coords); g(X) = (X + C; X) with C = diag(0, -1) and
    K = {0} x PSD(2); the multiplier set at the reference data is a
    nontrivial segment."""
    from .symmat import svec
    from .cone_core import PSD, Zero

    c = svec(np.diag([0.0, -1.0]))
    J = np.vstack([np.eye(3), np.eye(3)])

    def value(xv):
        return np.concatenate([xv + c, xv])

    return ConstraintSystem(3, ConeDesc([Zero(3), PSD(2, "plus")]),
                            value, lambda xv: J, name="example3",
                            is_affine=True)


def section32_system() -> ConstraintSystem:
    """Scalar g(x) = x^2 with K = R_-; the stationarity-system residual
    map for this instance is the standard non-subregular specimen."""
    from .cone_core import Orthant

    return ConstraintSystem(
        1, ConeDesc([Orthant(1, "minus")]),
        lambda x: np.array([float(x[0]) ** 2]),
        lambda x: np.array([[2.0 * float(x[0])]]),
        hess=lambda x, lam: np.array([[2.0 * float(lam[0])]]),
        name="section32_scalar")


def affine_system(cone: ConeDesc, A, b, name="affine") -> ConstraintSystem:
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    assert A.shape[0] == cone.dim and b.size == cone.dim
    return ConstraintSystem(A.shape[1], cone,
                            lambda x: A @ x + b, lambda x: A,
                            name=name, is_affine=True)


def quadratic_system(cone: ConeDesc, Q_list, A, b, name="quadratic") -> ConstraintSystem:
    """Componentwise g_i(x) = x^T Q_i x / 2 + A_i x + b_i."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    Qs = [0.5 * (np.asarray(Q, float) + np.asarray(Q, float).T) for Q in Q_list]
    assert A.shape[0] == cone.dim and len(Qs) == cone.dim

    def value(x):
        return np.array([0.5 * float(x @ (Q @ x)) for Q in Qs]) + A @ x + b

    def jac(x):
        return np.array([Q @ x for Q in Qs]) + A

    def hess(x, lam):
        return sum(l * Q for l, Q in zip(lam, Qs))

    return ConstraintSystem(A.shape[1], cone, value, jac, hess, name=name)


# ---------------------------------------------------------------------------
# operations

def _require_feasible(sys, x, tol):
    gx = sys.g(x)
    if not sys.cone.contains(gx, tol):
        raise ValueError("base point is infeasible")
    return gx


def gamma_tangent_contains(sys: ConstraintSystem, x, h,
                           tol: Tol = DEFAULT_TOL) -> bool:
    """Tangency of h to the feasible set at x, via g'(x)h in T_K(g(x)).
    Exact under the subregularity assumption on g(.) - K."""
    gx = _require_feasible(sys, x, tol)
    return sys.cone.tangent_set(gx, tol).contains(sys.jac_apply(x, h), tol)


def _null_basis(M, tol):
    """Orthonormal basis of {z : M z = 0}, rank cut at tol.zero * sigma_max."""
    M = np.asarray(M, float)
    if M.size == 0:
        return np.eye(M.shape[1])
    u, s, vt = np.linalg.svd(M)
    cut = tol.zero * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cut))
    return vt[rank:].T


@dataclass
class MultiplierSolveResult:
    """Outcome of the multiplier search for v = grad g(x) lambda with
    lambda in N_K(g(x))."""

    lam: np.ndarray
    residual_affine: float
    residual_cone: float
    found: bool
    members: list = field(default_factory=list)
    uniqueness: Certificate | None = None

    @property
    def residual(self):
        return max(self.residual_affine, self.residual_cone)


def multiplier_verify(sys: ConstraintSystem, x, v, lam,
                      tol: Tol = DEFAULT_TOL) -> bool:
    gx = _require_feasible(sys, x, tol)
    lam = np.asarray(lam, float)
    scale = 1.0 + float(np.linalg.norm(lam)) + float(np.linalg.norm(v))
    ra = float(np.linalg.norm(sys.adjoint_apply(x, lam) - np.asarray(v, float)))
    rc = sys.cone.normal_set(gx, tol).dist(lam)
    return max(ra, rc) <= tol.membership * scale


def multiplier_solve(sys: ConstraintSystem, x, v, tol: Tol = DEFAULT_TOL,
                     with_uniqueness=True, reseed=True) -> MultiplierSolveResult:
    """Find lambda in N_K(g(x)) with grad g(x) lambda = v, by alternating
    projections between the affine fiber and the normal cone.

    The seed is the least-squares solution of the affine system; the
    deterministic re-seeding schedule walks signed kernel directions of
    the adjoint to probe non-uniqueness.  A stall of the alternating
    scheme above tolerance is the emptiness signal (v outside the image).
    """
    gx = _require_feasible(sys, x, tol)
    v = np.asarray(v, float)
    Jt = sys.jacobian(x).T
    N = sys.cone.normal_set(gx, tol)
    fiber = AffineSet(Jt, v)
    seed0, *_ = np.linalg.lstsq(Jt, v, rcond=None)

    ker = _null_basis(Jt, tol)
    seeds = [seed0]
    if reseed:
        step = 1.0 + float(np.linalg.norm(seed0))
        for j in range(ker.shape[1]):
            seeds.append(seed0 + step * ker[:, j])
            seeds.append(seed0 - step * ker[:, j])

    members = []
    best = None
    for seed in seeds:
        lam, info = dykstra([fiber, N], seed, tol)
        ra = float(np.linalg.norm(Jt @ lam - v))
        rc = N.dist(lam)
        scale = 1.0 + float(np.linalg.norm(lam)) + float(np.linalg.norm(v))
        ok = max(ra, rc) <= tol.membership * scale
        if best is None or max(ra, rc) < best[1]:
            best = (lam, max(ra, rc), ra, rc, ok)
        if ok and not any(np.linalg.norm(lam - m) <= 1e-6 * scale
                          for m in members):
            members.append(lam)

    lam, _, ra, rc, ok = best
    res = MultiplierSolveResult(lam, ra, rc, ok, members)
    if ok and with_uniqueness:
        res.uniqueness = srcq_check(sys, x, v, lam, tol)
        if len(members) > 1 and res.uniqueness.verdict == "holds":
            # distinct verified members trump the subspace probe
            res.uniqueness = Certificate(
                "fails", 0.0, members[1] - members[0],
                "distinct verified members", tol)
    return res


class NGammaImage:
    """Membership oracle for the normal cone to the feasible set at x,
    realized as the adjoint image of N_K(g(x)).  Exact under the
    subregularity assumption."""

    def __init__(self, sys: ConstraintSystem, x, tol: Tol = DEFAULT_TOL):
        self.sys = sys
        self.x = np.asarray(x, float)
        self.tol = tol
        _require_feasible(sys, x, tol)
        self.dim = sys.dim_x

    def contains(self, v, tol: Tol | None = None) -> bool:
        tol = tol or self.tol
        res = multiplier_solve(self.sys, self.x, v, tol,
                               with_uniqueness=False, reseed=False)
        return res.found


def srcq_check(sys: ConstraintSystem, x, v, lam,
               tol: Tol = DEFAULT_TOL) -> Certificate:
    """Strict Robinson qualification at x w.r.t. the multiplier lam:
    Ker(adjoint) meets the tangent cone to N_K(g(x)) at lam only at 0.
    Holds is simultaneously: the qualification, isolated calmness of the
    multiplier map at v for lam, and local single-valuedness of the
    multiplier selection; all three readings are reported."""
    gx = _require_feasible(sys, x, tol)
    if not multiplier_verify(sys, x, v, lam, tol):
        raise ValueError("lam is not a verified multiplier for (x, v)")
    ker = _null_basis(sys.jacobian(x).T, tol)
    C = tangent_of_normal(sys.cone, gx, np.asarray(lam, float), tol)
    cert = subspace_cone_trivial(ker, C, tol)
    cert.checked = cert.checked + (
        "adjoint-kernel/tangent-of-normal trivial intersection",
        "multiplier-map isolated calmness at v for lam (equivalent)",
        "strict Robinson qualification at x w.r.t. lam (equivalent)",
    )
    return cert


def nondegeneracy_check(sys: ConstraintSystem, x,
                        tol: Tol = DEFAULT_TOL) -> Certificate:
    """Surjectivity of g'(x) onto Y modulo the lineality space of
    T_K(g(x)): rank of the stacked matrix [J  Lin] equals dim Y."""
    gx = _require_feasible(sys, x, tol)
    J = sys.jacobian(x)
    Lin = sys.cone.tangent_lineality(gx, tol)
    stacked = np.hstack([J, Lin]) if Lin.size else J
    s = np.linalg.svd(stacked, compute_uv=False)
    cut = tol.zero * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > cut))
    m = sys.cone.dim

    # kernel form: the adjoint kernel must project injectively onto Lin
    ker = _null_basis(J.T, tol)
    if ker.shape[1] == 0:
        kres = np.inf
    elif Lin.size == 0 or Lin.shape[1] == 0:
        kres = 0.0
    else:
        q, _ = np.linalg.qr(Lin)
        sv = np.linalg.svd(q.T @ ker, compute_uv=False)
        kres = float(sv[-1]) if sv.size == ker.shape[1] else 0.0

    holds = rank == m
    return Certificate(
        "holds" if holds else "fails",
        float(m - rank),
        None if holds else _null_basis(stacked.T, tol)[:, :1].ravel() if rank < m else None,
        "rank of [Jacobian | tangent-lineality] against dim Y",
        tol, details={"rank": rank, "dim_y": m,
                      "kernel_projection_sigma_min": kres})


def strict_complementarity_check(sys: ConstraintSystem, x, v,
                                 tol: Tol = DEFAULT_TOL) -> Certificate:
    """Existence of a relative-interior multiplier for (x, v).

    Candidates come from the re-seeded multiplier search plus convex
    averages of distinct members (averaging pushes toward the relative
    interior of the multiplier segment).  Fails only when the multiplier
    is certified unique and that unique member is not relative-interior;
    otherwise a fruitless search is inconclusive.
    """
    gx = _require_feasible(sys, x, tol)
    method = "relative-interior test over re-seeded multiplier candidates"
    res = multiplier_solve(sys, x, v, tol, with_uniqueness=True)
    if not res.found:
        raise ValueError("v is not in the normal cone to the feasible set at x")

    candidates = list(res.members)
    for i in range(len(res.members)):
        for j in range(i + 1, len(res.members)):
            candidates.append(0.5 * (res.members[i] + res.members[j]))
    if len(res.members) > 1:
        candidates.append(np.mean(res.members, axis=0))

    for lam in candidates:
        if multiplier_verify(sys, x, v, lam, tol) and \
                sys.cone.ri_normal(gx, lam, tol):
            return Certificate("holds", 0.0, lam, method, tol,
                               assumptions=(SUBREG_ASSUMPTION,))
    if res.uniqueness is not None and res.uniqueness.verdict == "holds":
        return Certificate("fails", 0.0, res.lam,
                           method + " (unique member fails)", tol,
                           assumptions=(SUBREG_ASSUMPTION,))
    return Certificate("inconclusive", 0.0, None,
                       method + " (no interior member found)", tol,
                       assumptions=(SUBREG_ASSUMPTION,),
                       details={"candidates": len(candidates)})


def critical_cone_gamma_contains(sys: ConstraintSystem, x, v, lam, d,
                                 tol: Tol = DEFAULT_TOL) -> bool:
    """Membership of d in the critical cone of the feasible set at (x, v),
    decided through g'(x)d against the cone-level critical cone."""
    gx = _require_feasible(sys, x, tol)
    if not multiplier_verify(sys, x, v, lam, tol):
        raise ValueError("lam is not a verified multiplier for (x, v)")
    C = sys.cone.critical_set(gx, np.asarray(lam, float), tol)
    return C.contains(sys.jac_apply(x, d), tol)


def ngamma_graph_deriv_contains(sys: ConstraintSystem, x, v, lam, d, w,
                                tol: Tol = DEFAULT_TOL,
                                srcq: Certificate | None = None) -> Certificate:
    """Membership of (d, w) in the graphical derivative of the normal-cone
    map of the feasible set at (x, v), for the verified multiplier lam.

    Route A solves for xi in the normal cone to the critical cone at
    g'(x)d with adjoint image w - Hess d - grad-Upsilon correction.
    Route B solves for mu with adjoint image w - Hess d and validates
    (g'(x)d, mu) against the cone-level graphical derivative.  The
    verdict holds or fails only when the routes agree.
    """
    gx = _require_feasible(sys, x, tol)
    d = np.asarray(d, float)
    w = np.asarray(w, float)
    if not multiplier_verify(sys, x, v, lam, tol):
        raise ValueError("lam is not a verified multiplier for (x, v)")
    lam = np.asarray(lam, float)
    Jt = sys.jacobian(x).T
    gd = sys.jac_apply(x, d)
    scale = 1.0 + float(np.linalg.norm(d)) + float(np.linalg.norm(w))
    checked = ()
    if srcq is not None:
        checked = (f"multiplier-uniqueness qualification: {srcq.verdict}",)

    C = sys.cone.critical_set(gx, lam, tol)
    gate = C.dist(gd)
    details = {"critical_gate": gate}
    if gate > tol.membership * scale:
        return Certificate("fails", gate, np.concatenate([d, w]),
                           "critical-cone gate on g'(x)d", tol,
                           assumptions=(SUBREG_ASSUMPTION,),
                           checked=checked, details=details)

    Hd = sys.hess_apply(x, lam, d)
    u = sys.cone.upsilon_grad(gx, lam, gd, tol)
    Cp = C.polar()
    nz = float(np.linalg.norm(gd)) > tol.zero * (1 + np.linalg.norm(gx))

    # Route A: xi in N_C(gd) with Jt xi = w - Hd - Jt u / 2
    r = w - Hd - 0.5 * (Jt @ u)
    sets_a = [AffineSet(Jt, r), Cp] + ([Hyperplane(gd)] if nz else [])
    seed = np.linalg.lstsq(Jt, r, rcond=None)[0]
    xi, info_a = dykstra(sets_a, seed, tol)
    res_a = max(float(np.linalg.norm(Jt @ xi - r)),
                max(S.dist(xi) for S in sets_a[1:]))
    sc_a = 1.0 + float(np.linalg.norm(xi))
    holds_a = res_a <= tol.membership * sc_a * scale
    details["route_a_residual"] = res_a

    # Route B: mu with Jt mu = w - Hd and (gd, mu) in the cone-level
    # graphical derivative, parameterized as u/2 + (polar critical ∩ gd⊥)
    rb = w - Hd
    shift = 0.5 * u
    sets_b = [AffineSet(Jt, rb), ShiftedSet(Cp, shift)]
    if nz:
        sets_b.append(ShiftedSet(Hyperplane(gd), shift))
    seed_b = np.linalg.lstsq(Jt, rb, rcond=None)[0]
    mu, info_b = dykstra(sets_b, seed_b, tol)
    res_b = max(float(np.linalg.norm(Jt @ mu - rb)),
                max(S.dist(mu) for S in sets_b[1:]))
    sc_b = 1.0 + float(np.linalg.norm(mu))
    holds_b = res_b <= tol.membership * sc_b * scale
    if holds_b:
        gp = GraphPoint(sys.cone, gx, lam, tol)
        inner = dnk_contains(sys.cone, gp, gd, mu, tol)
        details["route_b_inner_verdict"] = inner.verdict
        holds_b = inner.verdict == "holds"
    details["route_b_residual"] = res_b
    details["route_a_holds"] = bool(holds_a)
    details["route_b_holds"] = bool(holds_b)

    method = ("normal-of-critical fiber solve + cone-level graphical "
              "derivative solve (dual routes)")
    assumptions = (SUBREG_ASSUMPTION,)
    if holds_a and holds_b:
        return Certificate("holds", max(res_a, res_b), xi, method, tol,
                           assumptions=assumptions, checked=checked,
                           details=details)
    if not holds_a and not holds_b:
        if info_a.stalled or info_a.converged or info_b.stalled or info_b.converged:
            return Certificate("fails", max(res_a, res_b),
                               np.concatenate([d, w]), method, tol,
                               assumptions=assumptions, checked=checked,
                               details=details)
        return Certificate("inconclusive", max(res_a, res_b), None,
                           method + " (nonconvergence)", tol,
                           assumptions=assumptions, checked=checked,
                           details=details)
    return Certificate("inconclusive", max(res_a, res_b), None,
                       method + " (route disagreement)", tol,
                       assumptions=assumptions, checked=checked,
                       details=details)
