from .geometry import (
    FREE, BOX, BALL, SIMPLEX, SET_KINDS, EUCLIDEAN, ENTROPY, GEOMETRIES, PSI_NONE, PSI_L1, PSI_INDICATOR,
    CompositeTerm, FeasibleSet, ProxSetup, NO_COMPOSITE,
    as_point, is_feasible, d_value, d_grad, bregman, l_d, dual_norm, prox_argmin, min_affine, check_supported,
)
from .projections import project_simplex, project_box, project_ball, soft_threshold, entropic_argmin
