from .trace import (
    SUBGRAD_A, SUBGRAD_B, CGM, FGM, METHODS, NONSMOOTH_METHODS, STRUCTURED_METHODS, RELATION_OF,
    MAX_ITERS, OPTIMAL_POINT, CERTIFIED_GAP, TERMINATION_REASONS,
    RunConfig, IterationRecord, RunTrace,
)
from .presets import PRESETS, preset
from .drivers import run, run_subgradient_a, run_subgradient_b, run_cgm, run_fgm, check_pairing, toggle_debug
from .classic import projected_subgradient, double_averaging, tseng_second_apg, tseng_third_apg
