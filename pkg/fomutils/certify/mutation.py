import logging
from typing import Optional

import numpy as np

from ..methods import RunTrace

l = logging.getLogger(__name__)

FIELDS = ("lambda", "beta", "slope", "z")
RELATIVE_SIZE = 0.1

_RECORD_FIELD = {"lambda": "lambda_k", "beta": "beta_k", "slope": "slope", "z": "z_k"}


def corrupt_trace(trace: RunTrace, field: str, k: int, rng: Optional[np.random.Generator] = None,
                  size=RELATIVE_SIZE) -> RunTrace:
    """
    A copy of ``trace`` with one recorded quantity at iteration k perturbed by a relative ``size``:
    scalars (lambda_k, beta_k) are scaled by 1 +- size, vectors (g_k, z_k) move by
    size * max(||v||, tiny) along a random unit direction. The input trace is left untouched.
    """
    if field not in FIELDS:
        raise ValueError(f"unknown field {field!r}, expected one of {FIELDS}")
    if not 0 <= k < len(trace):
        raise ValueError(f"trace has {len(trace)} records, cannot corrupt k={k}")

    rng = rng if rng is not None else np.random.default_rng(0)
    corrupted = trace.copy()
    record = corrupted.records[k]
    name = _RECORD_FIELD[field]
    value = getattr(record, name)

    if field in ("lambda", "beta"):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        setattr(record, name, float(value) * (1.0 + sign * size))
    else:
        direction = rng.standard_normal(value.shape)
        direction /= np.linalg.norm(direction)
        scale = max(float(np.linalg.norm(value)), np.finfo(float).tiny)
        setattr(record, name, value + size * scale * direction)

    l.debug("corrupted %s at k=%d of %s", field, k, trace.config.name)
    return corrupted
