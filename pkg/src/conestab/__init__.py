"""Numerically verified second-order variational analysis of conic
constraint systems Gamma = g^{-1}(K)."""

from ._sets import Tol, Certificate
from .cone_core import (
    AmbientVec, ConeDesc, Orthant, SOC, PSD, Zero, Free,
    project, contains, tangent_cone, normal_cone, ri_normal_contains,
)
from .cone_geometry import (
    critical_cone, tangent_of_normal, normal_of_critical,
    subspace_cone_trivial, radial_probe,
)
from .proj_deriv import GraphPoint, proj_dir_deriv, sigma_term, sigma_grad, dnk_contains
from .constraint_system import (
    ConstraintSystem, MultiplierSolveResult, NGammaImage,
    example1_system, example3_system, section32_system,
    affine_system, quadratic_system,
    gamma_tangent_contains, multiplier_solve, multiplier_verify,
    srcq_check, nondegeneracy_check, strict_complementarity_check,
    critical_cone_gamma_contains, ngamma_graph_deriv_contains,
)
from .stability import (
    GEProblem, PhiPoint, SmoothFn, SmoothMap,
    phi_residual, phi_subregularity_probe, solution_map_isolated_calm,
    kkt_isolated_calm, regular_normal_lower_generate,
    ngamma_tangent_generate, example41_problem, lp_kkt_data,
)
from . import oracle

__version__ = "0.1.0"
