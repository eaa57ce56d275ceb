"""Quasilattices from Pisot-Vijayaraghavan numbers.

Exact algebraic arithmetic for PV numbers, cut-and-project point sets,
substitution dynamics on gap intervals, refinement-mask analysis (Mahler
measures, decay exponents, Fourier products) and multiresolution nesting
checks, with a CLI writing reproducible CSV/JSON reports and figures.
"""

from .algnum import (
    AlgebraicElement,
    MinimalPolynomialContext,
    build_context,
    context_from_json,
    elem_arith,
    nearest_integer_sequence,
)
from .errors import PVLatticeError
from .mra import MRAConfig, build_config, check_nesting, derive_xi, project_pc
from .qlat import (
    Quasilattice,
    check_group_laws,
    check_inflation,
    check_meyer,
    delone_constants,
    gap_alphabet,
    generate,
)
from .refine import (
    MahlerResult,
    RefinementMask,
    bernoulli_mask,
    build_mask,
    cantor_mask,
    erdos_sequence,
    fourier_hat,
    haar_mask,
    mahler_mask,
    mahler_univariate,
    mask_from_json,
    mean_log_hat,
    mean_log_mask,
    negative_rho_mask,
    orbit_mean,
    rho,
    sublevel_measure,
    torus_entry_point,
)
from .subst import SubstitutionRule, derive_rule, expand, rule_from_json, vector_mask

__version__ = "0.1.0"
