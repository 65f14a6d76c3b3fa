"""Cusp domains, h-sets, dyadic partition trees and rate calculators for
Sobolev embeddings on domains with Hölder-type cusps."""

from .domain import BoundaryModulus, DomainSpec, modulus_eval, psi_eval
from .empirics import (BumpFamily, WidthEstimate, bump_family, fit_rate, norm_scaling,
                       svd_widths)
from .errors import ValidationError
from .hset import HSet, build as build_hset
from .local_approx import (FieldOracle, PiecewisePoly, PolyBasis, adaptive_approximate,
                           cell_error, lq_norm, project_cell)
from .partition import (Cell, PartitionTree, build_hset_tree, build_tree, level_resolutions,
                        monte_carlo_volume, partition_audit)
from .rates import (ParamSet, RatePrediction, SlowVariation, entropy_exponents,
                    hset_exponents, solve_scale, tau_factor, width_exponents)
from .treeop import WeightedTree, apply, bound_check, decay_check, operator_norm

__version__ = "0.1.0"

__all__ = [
    "BoundaryModulus", "DomainSpec", "modulus_eval", "psi_eval",
    "BumpFamily", "WidthEstimate", "bump_family", "fit_rate", "norm_scaling", "svd_widths",
    "ValidationError", "HSet", "build_hset",
    "FieldOracle", "PiecewisePoly", "PolyBasis", "adaptive_approximate", "cell_error",
    "lq_norm", "project_cell",
    "Cell", "PartitionTree", "build_hset_tree", "build_tree", "level_resolutions",
    "monte_carlo_volume", "partition_audit",
    "ParamSet", "RatePrediction", "SlowVariation", "entropy_exponents", "hset_exponents",
    "solve_scale", "tau_factor", "width_exponents",
    "WeightedTree", "apply", "bound_check", "decay_check", "operator_norm",
]
