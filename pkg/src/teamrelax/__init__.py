"""Finite-alphabet team decision problems S -> X -> Y -> Shat.

Exact solution by enumeration, lower bounds from the relaxation that keeps
only the information inequality I(S;Shat) <= I(X;Y), certificates for those
bounds, and synthesis of costs under which a chosen code is optimal.
"""
from .core import (DetCode, EndToEndPair, Instance, InvalidInstance, RandomCode, SeparableCost,
                   build_joint_from_code, code_value, expected_cost, induced_endtoend,
                   membership_check, nonconvexity_witness, product_joint, separability_projection)
from .exact import BudgetExceeded, alternating_best_response, enumerate_optimal
from .gaussian import GaussianSpec, build_instance, gamma_star, linear_code_on_grid
from .info import (blahut_arimoto_cc, blahut_arimoto_rd, f_mi_gradients, f_mutual_information,
                   get_generator, mutual_information, neg_log, total_variation)
from .inverse import (SynthesisSpec, gastpar_costs, synthesize_costs,
                      verify_inverse_optimality)
from .relax import (bound_report, kkt_residual_general, kkt_residual_separable,
                    solve_relaxation_bansal, solve_relaxation_general, solve_relaxation_separable)

__version__ = "0.1.0"
