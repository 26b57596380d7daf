from .relations import (
    R, R_HAT, R_HAT_PRIME, RELATIONS, Check,
    weights, weight_sums, previous_betas, linearized_d,
    compute_Ck_nonsmooth, compute_Ck_structured, compute_Ck, relation_lhs, bound_values, step_ratios,
    check_relation, check_bound, check_step_conditions, check_three_point, check_monotone, check_feasibility,
    check_dual_norms, check_error_term, check_averaging, replay_trace, toggle_debug,
)
from .rates import (
    SIMPLE, WEIGHTED, SIMPLE_OPTIMAL, WEIGHTED_OPTIMAL, CGM_ENVELOPE, FGM_ENVELOPE, ENVELOPE_KINDS,
    RateEnvelope, envelope_for, optimal_gamma, optimal_rho, averaging_factor, known_radius, ball_radii,
    check_rate, check_averaged_value, check_boundedness,
)
from .certificate import AUTO, Certificate, certify_trace
from .mutation import FIELDS, corrupt_trace
