"""Solution-map stability: isolated calmness of S(p) = {x : 0 in
F(p,x) + N_Gamma(x)}, the KKT specialization, the stationarity-system
residual with subregularity probes, and lower generators for the regular
coderivative of the feasible-set normal-cone map.

A "holds" verdict is only issued under one of two licenses: exact branch
enumeration when the data is polyhedral and affine, or a uniform
residual margin over a deterministic direction net.  Sampling can refute
the universally quantified implication but never prove it, so everything
else is inconclusive.
"""

import os
from dataclasses import dataclass, field
import numpy as np

from ._sets import Tol, DEFAULT_TOL, Certificate, SignPattern
from .cone_core import ConeDesc, Orthant, Zero, Free, project
from .constraint_system import (
    ConstraintSystem, SUBREG_ASSUMPTION, affine_system,
    multiplier_solve, multiplier_verify, srcq_check,
    ngamma_graph_deriv_contains, _null_basis,
)

NET_K_DEFAULT = 6
WITNESS_CUT = 1e-6

__all__ = [
    "GEProblem", "PhiPoint", "SmoothFn", "SmoothMap",
    "phi_residual", "phi_subregularity_probe", "solution_map_isolated_calm",
    "kkt_isolated_calm", "regular_normal_lower_generate",
    "ngamma_tangent_generate", "example41_problem", "lp_kkt_data",
    "direction_net",
]


# ---------------------------------------------------------------------------
# residual map

def phi_residual(sys: ConstraintSystem, x, lam, v):
    """Both rows of the stationarity-system residual:
    (-v + grad g(x) lam, g(x) - Pi_K(g(x) + lam))."""
    x = np.asarray(x, float)
    lam = np.asarray(lam, float)
    v = np.asarray(v, float)
    r1 = -v + sys.adjoint_apply(x, lam)
    gx = sys.g(x)
    r2 = gx - project(sys.cone, gx + lam)
    return r1, r2


@dataclass
class PhiPoint:
    """A triple (x, lam, v) with its stationarity-system residual rows."""

    x: np.ndarray
    lam: np.ndarray
    v: np.ndarray
    residual: tuple = ()

    @classmethod
    def at(cls, sys: ConstraintSystem, x, lam, v):
        r1, r2 = phi_residual(sys, x, lam, v)
        return cls(np.asarray(x, float), np.asarray(lam, float),
                   np.asarray(v, float), (r1, r2))

    @property
    def residual_norm(self):
        return float(np.sqrt(sum(float(r @ r) for r in self.residual)))


def phi_subregularity_probe(sys: ConstraintSystem, center: PhiPoint,
                            sequence, dist_fn=None,
                            tol: Tol = DEFAULT_TOL):
    """Ratios ||Phi(x,lam,v)|| / dist((x,lam,v), Phi^{-1}(0,0)) along a
    sequence approaching the center.  Decay to 0 is evidence AGAINST
    metric subregularity of the residual map at the center; the ratios
    are reported, never turned into a verdict.

    `dist_fn` maps (x, lam, v) to the distance to the zero set; for the
    scalar builtin the closed form is ||(x, v)||.
    """
    if center.residual_norm > tol.membership * (1 + np.linalg.norm(center.x)):
        raise ValueError("center is not a zero of the residual map")
    if dist_fn is None:
        if sys.name != "section32_scalar":
            raise ValueError("a distance callback is required for this system")
        dist_fn = lambda x, lam, v: float(np.linalg.norm(
            np.concatenate([np.atleast_1d(x), np.atleast_1d(v)])))
    out = []
    for (x, lam, v) in sequence:
        pt = PhiPoint.at(sys, x, lam, v)
        den = dist_fn(np.asarray(x, float), np.asarray(lam, float),
                      np.asarray(v, float))
        out.append(0.0 if den <= tol.zero else pt.residual_norm / den)
    return out


# ---------------------------------------------------------------------------
# generalized equation

@dataclass
class GEProblem:
    """0 in F(p, x) + N_Gamma(x) around the reference pair (pbar, xbar).

    `Fprime((pbar, xbar), (dp, dx))` is the directional derivative of F;
    `Fx` optionally carries the Jacobian of F in x at the base pair,
    which unlocks the exact polyhedral enumeration route.
    """

    sys: ConstraintSystem
    F: object
    Fprime: object
    pbar: np.ndarray
    xbar: np.ndarray
    Fx: np.ndarray | None = None
    name: str = "custom"
    lam_hint: np.ndarray | None = None
    tol: Tol = field(default_factory=Tol)

    def __post_init__(self):
        self.pbar = np.asarray(self.pbar, float)
        self.xbar = np.asarray(self.xbar, float)
        res = multiplier_solve(self.sys, self.xbar, self.vbar, self.tol,
                               with_uniqueness=False, reseed=False)
        if not res.found:
            raise ValueError("reference pair does not solve the inclusion "
                             f"(residual {res.residual:.3e})")

    @property
    def vbar(self):
        return -np.asarray(self.F(self.pbar, self.xbar), float)


def example41_problem() -> GEProblem:
    """Affine perturbation F(p, x) = -p - x over the 3-variable
    semidefinite system; the base point is degenerate yet the solution
    map is isolated calm there."""
    from .constraint_system import example1_system
    from .symmat import svec

    sys = example1_system()
    xbar = np.array([-1.0, -1.0, 0.0])
    pbar = np.array([1.0, 1.0, -1.0])
    return GEProblem(
        sys,
        F=lambda p, x: -np.asarray(p, float) - np.asarray(x, float),
        Fprime=lambda base, dirn: -np.asarray(dirn[0], float)
        - np.asarray(dirn[1], float),
        pbar=pbar, xbar=xbar, Fx=-np.eye(3), name="example41",
        lam_hint=np.concatenate([svec(np.zeros((2, 2))), [-1.0]]))


# ---------------------------------------------------------------------------
# deterministic direction net

def _kronecker_unit(dim, count, seed):
    """Low-discrepancy points on the unit sphere: Kronecker lattice in the
    cube pushed through the Gaussian quantile and normalized."""
    from scipy.special import ndtri

    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
    alpha = np.sqrt(primes[:dim])
    alpha -= np.floor(alpha)
    out = np.empty((count, dim))
    shift = 0.5 + 0.61803398875 * seed
    for i in range(count):
        u = np.mod(shift + (i + 1) * alpha, 1.0)
        u = np.clip(u, 1e-12, 1 - 1e-12)
        g = ndtri(u)
        n = np.linalg.norm(g)
        out[i] = g / (n if n > 0 else 1.0)
    return out


def direction_net(dim, k=NET_K_DEFAULT, seed=None):
    """Deterministic unit-direction net of size 2^k (dim+1); the first
    2 dim entries are the signed coordinate axes.  The seed comes from
    the CONESTAB_SEED environment variable when not given."""
    if seed is None:
        seed = int(os.environ.get("CONESTAB_SEED", "0"))
    total = (2 ** k) * (dim + 1)
    axes = []
    for j in range(dim):
        for s in (1.0, -1.0):
            e = np.zeros(dim)
            e[j] = s
            axes.append(e)
    rest = _kronecker_unit(dim, max(total - len(axes), 0), seed)
    return np.vstack([np.array(axes), rest])[:total]


# ---------------------------------------------------------------------------
# polyhedral branch enumeration

def _scalar_branches(block, y, lam, tol):
    """Per-coordinate branch options of the graph tangent of the
    normal-cone map for scalar polyhedral blocks.  Each option is a pair
    (a_code, b_code) constraining ((g'(x)d)_i, mu_i) with codes from
    SignPattern plus 'free'."""
    opts = []
    if isinstance(block, Free):
        for _ in range(block.dim):
            opts.append([(SignPattern.FREE, SignPattern.ZERO)])
    elif isinstance(block, Zero):
        for _ in range(block.dim):
            opts.append([(SignPattern.ZERO, SignPattern.FREE)])
    elif isinstance(block, Orthant):
        s = block.sign
        scale = 1.0 + float(np.linalg.norm(y))
        for yi, li in zip(np.atleast_1d(y), np.atleast_1d(lam)):
            active = abs(yi) <= tol.zero * scale
            if not active:
                opts.append([(SignPattern.FREE, SignPattern.ZERO)])
            elif s * li < -tol.zero * (1 + abs(li)):
                opts.append([(SignPattern.ZERO, SignPattern.FREE)])
            else:
                opts.append([(s, SignPattern.ZERO),
                             (SignPattern.ZERO, -s)])
    else:
        raise ValueError("non-scalar block in polyhedral enumeration")
    return opts


def _enumerate_branches(options, cap=4096):
    import itertools

    total = 1
    for o in options:
        total *= len(o)
    if total > cap:
        raise ValueError(f"branch count {total} exceeds cap {cap}")
    return itertools.product(*options)


def _branch_lp_max(J, M, branch, n, m, objective_sign, j):
    """Feasibility LP over (d, mu) in the box [-1,1]^{n+m} with
    M d + J^T mu = 0 and the branch sign pattern on ((J d)_i, mu_i);
    maximizes objective_sign * d_j.  Returns (value, d) or None."""
    from scipy.optimize import linprog

    nv = n + m
    c = np.zeros(nv)
    c[j] = -objective_sign
    A_eq = [np.hstack([M, J.T])]
    b_eq = [np.zeros(n)]
    A_ub = []
    bounds = [(-1.0, 1.0)] * n
    for i, (ca, cb) in enumerate(branch):
        row = np.zeros(nv)
        row[:n] = J[i]
        if ca == SignPattern.ZERO:
            A_eq.append(row.reshape(1, -1))
            b_eq.append(np.zeros(1))
        elif ca != SignPattern.FREE:
            A_ub.append(-ca * row)
        if cb == SignPattern.ZERO:
            bounds.append((0.0, 0.0))
        elif cb == SignPattern.FREE:
            bounds.append((-1.0, 1.0))
        else:
            bounds.append((0.0, 1.0) if cb > 0 else (-1.0, 0.0))
    res = linprog(c, A_ub=np.array(A_ub) if A_ub else None,
                  b_ub=np.zeros(len(A_ub)) if A_ub else None,
                  A_eq=np.vstack(A_eq), b_eq=np.concatenate(b_eq),
                  bounds=bounds, method="highs")
    if not res.success:
        return None
    return -res.fun, res.x[:n]


def _polyhedral_route(problem, lam, tol):
    sys = problem.sys
    x = problem.xbar
    J = sys.jacobian(x)
    gx = sys.g(x)
    n, m = sys.dim_x, sys.cone.dim
    M = problem.Fx + sys.hess_lambda(x, lam)
    options = []
    for block, sl in zip(sys.cone.blocks, sys.cone.slices):
        options.extend(_scalar_branches(block, gx[sl], lam[sl], tol))

    best = 0.0
    witness = None
    for branch in _enumerate_branches(options):
        for j in range(n):
            for sgn in (1.0, -1.0):
                out = _branch_lp_max(J, M, branch, n, m, sgn, j)
                if out is None:
                    continue
                val, d = out
                if val > best:
                    best, witness = val, d
        if best > WITNESS_CUT:
            break
    method = "exact branch enumeration over polyhedral graph-tangent faces"
    if best > WITNESS_CUT:
        return Certificate("fails", best, witness / np.linalg.norm(witness),
                           method, tol, assumptions=(SUBREG_ASSUMPTION,))
    return Certificate("holds", best, None, method, tol,
                       assumptions=(SUBREG_ASSUMPTION,))


# ---------------------------------------------------------------------------
# isolated calmness

def solution_map_isolated_calm(problem: GEProblem, lam,
                               tol: Tol = DEFAULT_TOL,
                               net_k=NET_K_DEFAULT) -> Certificate:
    """Isolated calmness of the solution map at pbar for xbar, for the
    verified multiplier lam.

    The certified implication: any dx with
    -F'((pbar,xbar);(0,dx)) - Hess dx in the adjoint image of the
    cone-level graphical derivative at g'(xbar)dx must vanish.  Exact
    polyhedral enumeration is used when the data allows it; otherwise a
    deterministic direction net must exhibit a uniform residual margin.
    """
    sys = problem.sys
    x = problem.xbar
    v = problem.vbar
    lam = np.asarray(lam, float)
    if not multiplier_verify(sys, x, v, lam, tol):
        raise ValueError("lam is not a verified multiplier at the base pair")

    srcq = srcq_check(sys, x, v, lam, tol)
    checked = (f"multiplier-uniqueness qualification: {srcq.verdict}",)
    if srcq.verdict != "holds":
        return Certificate("inconclusive", srcq.residual, srcq.witness,
                           "preconditions unmet (multiplier-uniqueness "
                           "qualification did not certify)", tol,
                           assumptions=(SUBREG_ASSUMPTION,), checked=checked)

    scalar_ok = all(isinstance(b, (Orthant, Zero, Free))
                    for b in sys.cone.blocks)
    if sys.cone.is_polyhedral and sys.is_affine and scalar_ok \
            and problem.Fx is not None:
        cert = _polyhedral_route(problem, lam, tol)
        cert.checked = cert.checked + checked
        return cert

    net = direction_net(sys.dim_x, net_k)
    margin = float(np.sqrt(tol.membership))
    zero_p = np.zeros_like(problem.pbar)
    min_res = np.inf
    inconclusive_hits = 0
    for d in net:
        w = -np.asarray(problem.Fprime((problem.pbar, x), (zero_p, d)), float)
        cert = ngamma_graph_deriv_contains(sys, x, v, lam, d, w, tol,
                                           srcq=srcq)
        if cert.verdict == "holds":
            return Certificate(
                "fails", cert.residual, d,
                "direction net exhibited a nonzero solution of the "
                "inclusion", tol, assumptions=(SUBREG_ASSUMPTION,),
                checked=checked, details={"net_size": len(net)})
        if cert.verdict == "inconclusive" and cert.residual < margin:
            inconclusive_hits += 1
        min_res = min(min_res, cert.residual)
    details = {"net_size": len(net), "min_residual": min_res,
               "margin": margin}
    if min_res >= margin and inconclusive_hits == 0:
        return Certificate("holds", min_res, None,
                           "uniform residual margin over a deterministic "
                           "direction net", tol,
                           assumptions=(SUBREG_ASSUMPTION,),
                           checked=checked, details=details)
    return Certificate("inconclusive", min_res, None,
                       "no counterexample found; margin not met", tol,
                       assumptions=(SUBREG_ASSUMPTION,), checked=checked,
                       details=details)


# ---------------------------------------------------------------------------
# KKT specialization

@dataclass
class SmoothFn:
    """Twice differentiable scalar function: value, gradient, Hessian."""

    value: object
    grad: object
    hess: object


@dataclass
class SmoothMap:
    """Twice differentiable vector map: value, Jacobian, and the Hessian
    of <lam, G(.)>."""

    value: object
    jac: object
    hess: object  # hess(z, lam) -> (nz, nz) matrix


def kkt_isolated_calm(f: SmoothFn, G: SmoothMap, mult_cone: ConeDesc,
                      zbar, lbar, tol: Tol = DEFAULT_TOL,
                      net_k=NET_K_DEFAULT) -> Certificate:
    """Isolated calmness of the canonically perturbed KKT solution map at
    the pair (zbar, lbar): primal variable z, multiplier lbar in the
    dual-side cone `mult_cone`, perturbations (a, b) entering the
    gradient and the constraint right-hand side."""
    zbar = np.asarray(zbar, float)
    lbar = np.asarray(lbar, float)
    nz, m = zbar.size, mult_cone.dim
    Jg = np.asarray(G.jac(zbar), float)
    stat = np.asarray(f.grad(zbar), float) + Jg.T @ lbar
    Gz = np.asarray(G.value(zbar), float)
    if np.linalg.norm(stat) > tol.membership * (1 + np.linalg.norm(lbar)):
        raise ValueError("stationarity fails: not a KKT pair")
    if not mult_cone.contains(lbar, tol) or \
            not mult_cone.normal_set(lbar, tol).contains(Gz, tol):
        raise ValueError("complementarity fails: not a KKT pair")

    cone_ge = ConeDesc([Free(nz)] + list(mult_cone.blocks))
    sys_ge = affine_system(cone_ge, np.eye(nz + m), np.zeros(nz + m),
                           name="kkt_wrapper")
    Hf = np.asarray(f.hess(zbar), float)
    HG = np.asarray(G.hess(zbar, lbar), float)

    def F(p, xv):
        a, b = p[:nz], p[nz:]
        z, l = xv[:nz], xv[nz:]
        return np.concatenate([
            np.asarray(f.grad(z), float) - a
            + np.asarray(G.jac(z), float).T @ l,
            -np.asarray(G.value(z), float) + b,
        ])

    Fx = np.block([[Hf + HG, Jg.T], [-Jg, np.zeros((m, m))]])

    def Fprime(base, dirn):
        dp, dx = np.asarray(dirn[0], float), np.asarray(dirn[1], float)
        dF_p = np.concatenate([-dp[:nz], dp[nz:]])
        return dF_p + Fx @ dx

    problem = GEProblem(sys_ge, F, Fprime,
                        pbar=np.zeros(nz + m),
                        xbar=np.concatenate([zbar, lbar]),
                        Fx=Fx, name="kkt_wrapper", tol=tol)
    # identity g: the generalized-equation multiplier equals vbar itself
    return solution_map_isolated_calm(problem, problem.vbar, tol, net_k)


def lp_kkt_data(kind="nondegenerate"):
    """Two linear programs in KKT form: a nondegenerate instance (unique
    strictly complementary pair) and a degenerate one with a duplicated
    constraint row carrying a zero multiplier."""
    if kind == "nondegenerate":
        c = np.array([1.0, 1.0])
        A = np.eye(2)
        lbar = np.array([-1.0, -1.0])
    elif kind == "degenerate":
        c = np.array([1.0, 1.0])
        A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        lbar = np.array([-1.0, -1.0, 0.0])
    else:
        raise ValueError(f"unknown instance {kind!r}")
    m, nz = A.shape
    f = SmoothFn(lambda z: float(c @ z), lambda z: c,
                 lambda z: np.zeros((nz, nz)))
    G = SmoothMap(lambda z: A @ z, lambda z: A,
                  lambda z, lam: np.zeros((nz, nz)))
    return f, G, ConeDesc([Orthant(m, "minus")]), np.zeros(nz), lbar


# ---------------------------------------------------------------------------
# exact graph-tangent sampling

def _normal_to_critical_sample(block, y, lam, gd, rng, tol):
    """An exact member of the normal cone to the block-level critical cone
    at gd, for a zero multiplier or a polyhedral block."""
    from .cone_core import PSD
    from .symmat import svec, smat

    scale = 1.0 + float(np.linalg.norm(gd))
    if isinstance(block, Free):
        return np.zeros(block.dim)
    if isinstance(block, Zero):
        return rng.standard_normal(block.dim)
    if isinstance(block, Orthant):
        s = block.sign
        yscale = 1.0 + float(np.linalg.norm(y))
        q = np.zeros(block.dim)
        for i in range(block.dim):
            crit_zero = abs(np.atleast_1d(y)[i]) <= tol.zero * yscale and \
                s * np.atleast_1d(lam)[i] < -tol.zero
            if crit_zero:
                # critical cone coordinate is {0}: normal is the full line
                q[i] = rng.standard_normal()
            elif abs(np.atleast_1d(y)[i]) <= tol.zero * yscale and \
                    abs(np.atleast_1d(gd)[i]) <= tol.zero * scale:
                q[i] = -s * abs(rng.standard_normal())
        return q
    if isinstance(block, PSD):
        if float(np.linalg.norm(lam)) > tol.zero * (1 + np.linalg.norm(y)):
            raise ValueError("exact sampling needs a zero block multiplier")
        # critical cone = tangent cone at y; normal at gd is supported on
        # the joint kernel of y and gd, on the opposite side of the cone
        G = block.sign * (smat(y) + smat(gd))
        w, U = np.linalg.eigh(G)
        U0 = U[:, np.abs(w) <= tol.zero * (1 + np.abs(w).max())]
        if U0.shape[1] == 0:
            return np.zeros(block.dim)
        A = rng.standard_normal((U0.shape[1], U0.shape[1]))
        return -block.sign * svec(U0 @ (A @ A.T) @ U0.T)
    raise ValueError("unsupported block type for exact sampling")


def ngamma_tangent_generate(sys: ConstraintSystem, x, v, lam, count=50,
                            tol: Tol = DEFAULT_TOL, seed=0):
    """Exact members (d, w) of the graph tangent of the feasible-set
    normal-cone map at (x, v): d is rejection-sampled with g'(x)d in the
    cone-level critical cone, and w = Hess d + grad g(x)(grad-Upsilon/2
    + q) with q an exact member of the normal cone to the critical cone
    at g'(x)d, built blockwise.

    Restricted to zero multipliers on curved blocks; there the generated
    curves stay on the graph exactly for affine g, which is what makes
    these samples usable as referee ground truth.
    """
    x = np.asarray(x, float)
    if not multiplier_verify(sys, x, v, lam, tol):
        raise ValueError("lam is not a verified multiplier for (x, v)")
    lam = np.asarray(lam, float)
    gx = sys.g(x)
    J = sys.jacobian(x)
    C = sys.cone.critical_set(gx, lam, tol)
    rng = np.random.default_rng(seed)

    pairs = []
    attempts = 0
    while len(pairs) < count and attempts < 500 * count:
        attempts += 1
        d = rng.standard_normal(sys.dim_x)
        gd = J @ d
        if C.dist(gd) > 1e-10 * (1 + np.linalg.norm(gd)):
            continue
        q = np.concatenate([
            _normal_to_critical_sample(b, gx[sl], lam[sl], gd[sl], rng, tol)
            for b, sl in zip(sys.cone.blocks, sys.cone.slices)])
        mu = 0.5 * sys.cone.upsilon_grad(gx, lam, gd, tol) + q
        w = sys.hess_apply(x, lam, d) + J.T @ mu
        pairs.append((d, w))
    if len(pairs) < count:
        raise RuntimeError("rejection sampling starved; critical cone too thin")
    return pairs


# ---------------------------------------------------------------------------
# regular-coderivative lower generators

def regular_normal_lower_generate(sys: ConstraintSystem, x, v, lam,
                                  count=20, tol: Tol = DEFAULT_TOL,
                                  seed=0):
    """Samples of pairs (xi, eta) in the regular normal cone to the graph
    of the feasible-set normal-cone map at (x, v).

    Construction: mu is drawn from the polar of the cone-level critical
    cone, eta is drawn so that g'(x)eta lands exactly in the critical
    cone (rejection sampling) when the multiplier is zero or the cone is
    polyhedral, and in Ker(g'(x)) otherwise; then
    xi = -Hess(x, lam) eta + grad g(x) mu.  Every returned pair satisfies
    the anti-alignment inequality against graph tangents.
    """
    x = np.asarray(x, float)
    if not multiplier_verify(sys, x, v, lam, tol):
        raise ValueError("lam is not a verified multiplier for (x, v)")
    lam = np.asarray(lam, float)
    gx = sys.g(x)
    J = sys.jacobian(x)
    C = sys.cone.critical_set(gx, lam, tol)
    Cp = C.polar()
    rng = np.random.default_rng(seed)
    lam_zero = float(np.linalg.norm(lam)) <= tol.zero * (1 + np.linalg.norm(gx))
    free_eta = lam_zero or sys.cone.is_polyhedral
    ker = None if free_eta else _null_basis(J, tol)

    pairs = []
    attempts = 0
    while len(pairs) < count and attempts < 200 * count:
        attempts += 1
        mu = Cp.project(rng.standard_normal(sys.cone.dim))
        if free_eta:
            eta = rng.standard_normal(sys.dim_x)
            if C.dist(J @ eta) > 1e-10 * (1 + np.linalg.norm(J @ eta)):
                continue
        else:
            if ker.shape[1] == 0:
                eta = np.zeros(sys.dim_x)
            else:
                eta = ker @ rng.standard_normal(ker.shape[1])
        xi = -sys.hess_apply(x, lam, eta) + J.T @ mu
        pairs.append((xi, eta))
    if len(pairs) < count:
        raise RuntimeError("rejection sampling starved; cone slice too thin")
    return pairs
