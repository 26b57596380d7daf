import logging
from typing import Dict

import numpy as np

from ..errors import ConfigError
from .problems import (
    MAX_AFFINE, L1_REGRESSION, QUADRATIC, COMPOSITE_LASSO, INEXACT,
    CompositeLasso, InexactWrapper, L1Regression, MaxAffine, Problem, Quadratic, problem_from_dict,
)

l = logging.getLogger(__name__)

DEFAULT_PIECES = 10
DEFAULT_CONDITION = 1e3
DEFAULT_LASSO_WEIGHT = 0.1


def generate(variant: str, dim: int, seed: int = 0, **params) -> Problem:
    """
    Seeded random instance of a problem variant. The same (variant, dim, seed, params) always
    gives the same instance.

    max_affine:         pieces (10). Rows and offsets are standard normal.
    l1_regression:      rows (2 * dim), noise (0.1). b = A x_true + noise.
    quadratic:          condition (1e3). A = Q diag(eigs) Q^T with eigs geometric in [1/condition, 1], so L = 1.
    composite_lasso:    rows (dim), weight (0.1). A has N(0, 1/rows) entries.
    inexact_wrapper:    base (a generator spec or explicit problem), delta (1e-3).
    """
    if dim is None or int(dim) <= 0:
        raise ConfigError(f"generated problems need a positive dim, got {dim!r}")

    dim = int(dim)
    seed = int(seed)
    rng = np.random.default_rng(seed)
    record = {"variant": variant, "dim": dim, "seed": seed, **params}

    if variant == MAX_AFFINE:
        pieces = int(params.get("pieces", DEFAULT_PIECES))
        A = rng.standard_normal((pieces, dim))
        b = rng.standard_normal(pieces)
        return MaxAffine(A, b, params=record)

    if variant == L1_REGRESSION:
        rows = int(params.get("rows", 2 * dim))
        A = rng.standard_normal((rows, dim))
        x_true = rng.standard_normal(dim)
        b = A @ x_true + float(params.get("noise", 0.1)) * rng.standard_normal(rows)
        return L1Regression(A, b, params=record)

    if variant == QUADRATIC:
        condition = float(params.get("condition", DEFAULT_CONDITION))
        if not condition >= 1:
            raise ConfigError(f"condition number must be >= 1, got {condition!r}")
        Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        eigs = np.geomspace(1.0 / condition, 1.0, dim)
        A = (Q * eigs) @ Q.T
        A = 0.5 * (A + A.T)
        b = rng.standard_normal(dim)
        return Quadratic(A, b, params=record)

    if variant == COMPOSITE_LASSO:
        rows = int(params.get("rows", dim))
        A = rng.standard_normal((rows, dim)) / np.sqrt(rows)
        b = rng.standard_normal(rows)
        return CompositeLasso(A, b, float(params.get("weight", DEFAULT_LASSO_WEIGHT)), params=record)

    if variant == INEXACT:
        base_spec = params.get("base")
        if not isinstance(base_spec, dict):
            raise ConfigError("an inexact_wrapper generator needs a 'base' spec")
        base_spec = {"dim": dim, "seed": seed, **base_spec}
        base = problem_from_dict(base_spec)
        return InexactWrapper(base, float(params.get("delta", 1e-3)), seed=seed, params=record)

    raise ConfigError(f"no generator for problem variant {variant!r}")


def problem_spec(problem: Problem) -> Dict:
    """
    The most compact JSON description that rebuilds ``problem``: its generator record when it
    has one, otherwise the explicit data.
    """
    if problem.params is not None:
        return dict(problem.params)
    return problem.to_dict()
