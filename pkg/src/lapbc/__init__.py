"""Laplacians on weighted graphs (V, b, c, m) through finite exhaustions."""

__version__ = "0.1.0"

from .graph import (FamilyError, GraphFormatError, GraphGenerator, GraphValidationError,
                    RadialProfile, WeightedGraph, build_family, combinatorial_ball,
                    Exhaustion, example4, fm_tree, line_z, load_graph, radial_reduce,
                    radial_tree, regular_tree, save_graph, validate)
from .formal import (SampledFunction, apply_formal, boundedness_report, greens_identity_check,
                     laplacian_of_delta, weighted_degree)
from .forms import complexify, dirichlet_axioms_check, q_inner, qn_partial
from .truncation import (DIRICHLET, NEUMANN, BoundaryCondition, TruncatedOperator,
                         ordering_check, radial_operator, truncate)
from .spectral import (bottom_of_spectrum, f_beta_identity_check, heat_kernel, li_asymptotics,
                       positivity_improving_check, resolvent_apply, resolvent_limit_check,
                       semigroup_apply)
from .harmonic import (bvp_solve, classify_solution, max_principle_check, orthogonality_check,
                       radial_solve, resolvent_gap)
from .completeness import example4_verify, heat_mass, neumann_mass, radial_tree_criterion
from .geometry import (Ray, appendixA_demo, boundary_value, cheeger_bruteforce,
                       dodziuk_kendall_check, lipschitz_check, path_metric,
                       ray_completeness_probe)

import types as _types

__all__ = [name for name, obj in list(globals().items())
           if not name.startswith("_") and not isinstance(obj, _types.ModuleType)]
