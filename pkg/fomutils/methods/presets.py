from typing import Dict

from ..errors import ConfigError
from ..schedule import CLASSIC_SMOOTH, FAST_SMOOTH, MDM_CLASSIC, PURE_DA, PURE_MD, SIMPLE_AVERAGES, TSENG_LAMBDA
from .trace import CGM, FGM, SUBGRAD_A, SUBGRAD_B

# name -> (method, mix policy, default schedule kind, whether the schedule is part of the preset)
PRESETS = {
    "extended_mdm": (SUBGRAD_A, PURE_MD, SIMPLE_AVERAGES, False),
    "dam": (SUBGRAD_A, PURE_DA, SIMPLE_AVERAGES, False),
    "double_averaging": (SUBGRAD_B, PURE_DA, SIMPLE_AVERAGES, False),
    "mdm_classic": (SUBGRAD_A, PURE_MD, MDM_CLASSIC, True),
    "primal_gradient": (CGM, PURE_MD, CLASSIC_SMOOTH, True),
    "dual_gradient": (CGM, PURE_DA, CLASSIC_SMOOTH, True),
    "fgm_md": (FGM, PURE_MD, FAST_SMOOTH, False),
    "fgm_da": (FGM, PURE_DA, FAST_SMOOTH, False),
    "tseng2": (FGM, PURE_MD, TSENG_LAMBDA, True),
    "tseng3": (FGM, PURE_DA, TSENG_LAMBDA, True),
}


def preset(name: str) -> Dict:
    """
    The (method, mix, schedule kind) fragment a preset name stands for. ``fixed_schedule`` marks
    presets whose identity includes the schedule; the others only suggest a default kind.
    """
    try:
        method, mix, schedule, fixed = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}, expected one of {sorted(PRESETS)}") from None

    return {"method": method, "mix": mix, "schedule": schedule, "fixed_schedule": fixed}
