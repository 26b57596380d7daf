from .problems import (
    MAX_AFFINE, L1_REGRESSION, QUADRATIC, COMPOSITE_LASSO, INEXACT, VARIANTS,
    OracleReply, Problem, MaxAffine, L1Regression, Quadratic, CompositeLasso, InexactWrapper,
    query, lower_model_value, true_value, problem_from_dict,
)
from .generators import generate, problem_spec
from .optimum import (
    OptimumInfo, known_optimum, lasso_coordinate_descent, max_affine_simplex_minimizer, quadratic_minimizer,
)
