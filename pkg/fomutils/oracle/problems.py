#
# Problem definitions and the lower convex approximation oracle
#
#   l_f(y; x) = value + <slope, x - y> (+ Psi(x) when the reply is composite)
#
# Non-smooth problems answer with a subgradient and no Lipschitz constant. Structured problems
# additionally guarantee f(x) <= l_f(y; x) + L(y)/2 ||x - y||^2 + delta(y).
#

import hashlib
import logging
import struct
from typing import Dict, Optional

import numpy as np
import scipy.linalg

from ..errors import ConfigError, DimensionError, InfeasiblePointError
from ..space import CompositeTerm, ENTROPY, NO_COMPOSITE, ProxSetup, PSI_L1, dual_norm

l = logging.getLogger(__name__)

MAX_AFFINE = "max_affine"
L1_REGRESSION = "l1_regression"
QUADRATIC = "quadratic"
COMPOSITE_LASSO = "composite_lasso"
INEXACT = "inexact_wrapper"
VARIANTS = (MAX_AFFINE, L1_REGRESSION, QUADRATIC, COMPOSITE_LASSO, INEXACT)

# shift used when Cholesky-testing a PSD (possibly singular) matrix
PSD_SHIFT = 1e-12
FEASIBILITY_TOL = 1e-10


class OracleReply:
    """
    One answer of the first-order oracle at a query point.

    :ivar point:            The query point y.
    :ivar value:            f_bar(y), the constant of the lower model.
    :ivar slope:            g_bar(y), the slope of the lower model.
    :ivar lipschitz:        L(y) for structured problems, None for non-smooth ones.
    :ivar delta:            delta(y) >= 0, the slack of the upper quadratic model.
    :ivar has_composite:    Whether l_f(y; .) carries the composite term Psi.
    """

    __slots__ = ("point", "value", "slope", "lipschitz", "delta", "has_composite")

    def __init__(self, point, value, slope, lipschitz=None, delta=0.0, has_composite=False):
        self.point = np.asarray(point, dtype=float)
        self.value = float(value)
        self.slope = np.asarray(slope, dtype=float)
        self.lipschitz = None if lipschitz is None else float(lipschitz)
        self.delta = float(delta)
        self.has_composite = bool(has_composite)
        if self.delta < 0:
            raise ValueError(f"oracle delta must be nonnegative, got {self.delta!r}")
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise ValueError(f"oracle Lipschitz constant must be positive, got {self.lipschitz!r}")
        if not np.all(np.isfinite(self.slope)):
            raise ValueError("oracle slope has non-finite entries")

    def __repr__(self):
        return f"<OracleReply value={self.value!r} |g|={np.linalg.norm(self.slope):.3g} L={self.lipschitz!r}>"

    def copy(self) -> "OracleReply":
        return OracleReply(self.point.copy(), self.value, self.slope.copy(), self.lipschitz, self.delta,
                           self.has_composite)


class Problem:
    """
    Base class of every objective. Subclasses implement ``_reply`` and ``_value``.

    :ivar variant:      Variant name, one of VARIANTS.
    :ivar dim:          Dimension of the decision vector.
    :ivar lipschitz:    Declared L (structured problems) or None (non-smooth).
    :ivar composite:    The composite term Psi attached to the objective.
    :ivar params:       Generator parameters when the instance came from a seeded generator.
    """

    variant = None

    def __init__(self, dim: int, lipschitz: Optional[float] = None, composite: Optional[CompositeTerm] = None,
                 params: Optional[Dict] = None):
        self.dim = int(dim)
        self.lipschitz = None if lipschitz is None else float(lipschitz)
        self.composite = composite or NO_COMPOSITE
        self.params = params

    def __repr__(self):
        return f"<{self.__class__.__name__} {self.ident}>"

    @property
    def structured(self) -> bool:
        return self.lipschitz is not None

    @property
    def ident(self) -> str:
        if self.params and "seed" in self.params:
            return f"{self.variant}-n{self.dim}-s{self.params['seed']}"
        return f"{self.variant}-n{self.dim}"

    def _check(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise DimensionError(f"{self.variant} expects dimension {self.dim}, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise InfeasiblePointError("query point has non-finite entries")
        return y

    def _reply(self, y: np.ndarray) -> OracleReply:
        raise NotImplementedError()

    def _value(self, x: np.ndarray) -> float:
        raise NotImplementedError()

    def subgradient_bound(self, setup: ProxSetup) -> Optional[float]:
        """
        A global bound M on the dual norm of the slopes this problem returns, if one is known.
        """
        return None

    def to_dict(self) -> Dict:
        raise NotImplementedError()


class MaxAffine(Problem):
    """
    f(x) = max_i <a_i, x> + b_i, with the lowest active index breaking ties.
    """

    variant = MAX_AFFINE

    def __init__(self, A, b, params=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.size:
            raise ConfigError(f"max_affine has {self.A.shape[0]} rows but {self.b.size} offsets")
        super().__init__(self.A.shape[1], params=params)

    def _reply(self, y):
        pieces = self.A @ y + self.b
        idx = int(np.argmax(pieces))
        return OracleReply(y, pieces[idx], self.A[idx].copy())

    def _value(self, x):
        return float(np.max(self.A @ x + self.b))

    def subgradient_bound(self, setup):
        return max(dual_norm(setup, row) for row in self.A)

    def to_dict(self):
        return {"variant": self.variant, "dim": self.dim, "A": self.A.tolist(), "b": self.b.tolist()}


class L1Regression(Problem):
    """
    f(x) = ||Ax - b||_1, with the subgradient A^T sign(Ax - b) and sign(0) = 0.
    """

    variant = L1_REGRESSION

    def __init__(self, A, b, params=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.size:
            raise ConfigError(f"l1_regression has {self.A.shape[0]} rows but {self.b.size} targets")
        super().__init__(self.A.shape[1], params=params)

    def _reply(self, y):
        residual = self.A @ y - self.b
        return OracleReply(y, np.sum(np.abs(residual)), self.A.T @ np.sign(residual))

    def _value(self, x):
        return float(np.sum(np.abs(self.A @ x - self.b)))

    def subgradient_bound(self, setup):
        # |A^T s|_* over s in [-1, 1]^m
        if setup.geometry == ENTROPY:
            return float(np.max(np.sum(np.abs(self.A), axis=0)))
        return float(np.sqrt(self.A.shape[0]) * scipy.linalg.norm(self.A, 2))

    def to_dict(self):
        return {"variant": self.variant, "dim": self.dim, "A": self.A.tolist(), "b": self.b.tolist()}


class Quadratic(Problem):
    """
    f(x) = 1/2 x^T A x - <b, x> with A symmetric positive semidefinite, L = lambda_max(A).
    """

    variant = QUADRATIC

    def __init__(self, A, b, lipschitz: Optional[float] = None, params=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        n = self.b.size
        if self.A.shape != (n, n):
            raise ConfigError(f"quadratic matrix has shape {self.A.shape}, expected ({n}, {n})")
        if not np.allclose(self.A, self.A.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(self.A)))):
            raise ConfigError("quadratic matrix must be symmetric")

        scale = max(1.0, float(np.max(np.abs(np.diag(self.A)))))
        try:
            scipy.linalg.cholesky(self.A + PSD_SHIFT * scale * np.eye(n), lower=True)
        except np.linalg.LinAlgError as ex:
            raise ConfigError("quadratic matrix is not positive semidefinite") from ex

        true_l = float(scipy.linalg.eigvalsh(self.A, subset_by_index=[n - 1, n - 1])[0])
        true_l = max(true_l, np.finfo(float).tiny)
        if lipschitz is None:
            lipschitz = true_l
        elif lipschitz < true_l * (1 - 1e-12):
            raise ConfigError(f"declared L={lipschitz!r} is below lambda_max(A)={true_l!r}")

        super().__init__(n, lipschitz=lipschitz, params=params)

    def _reply(self, y):
        Ay = self.A @ y
        return OracleReply(y, 0.5 * y @ Ay - self.b @ y, Ay - self.b, lipschitz=self.lipschitz)

    def _value(self, x):
        return float(0.5 * x @ (self.A @ x) - self.b @ x)

    def to_dict(self):
        return {
            "variant": self.variant, "dim": self.dim, "A": self.A.tolist(), "b": self.b.tolist(),
            "lipschitz": self.lipschitz,
        }


class CompositeLasso(Problem):
    """
    f(x) = 1/2 ||Ax - b||^2 + w ||x||_1. The oracle linearizes the smooth part only and flags the
    reply as composite; L = ||A^T A||_2.
    """

    variant = COMPOSITE_LASSO

    def __init__(self, A, b, weight: float, params=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.size:
            raise ConfigError(f"lasso has {self.A.shape[0]} rows but {self.b.size} targets")

        lipschitz = float(scipy.linalg.svdvals(self.A)[0] ** 2)
        super().__init__(self.A.shape[1], lipschitz=max(lipschitz, np.finfo(float).tiny),
                         composite=CompositeTerm(PSI_L1, weight), params=params)

    @property
    def weight(self) -> float:
        return self.composite.weight

    def smooth_value(self, x) -> float:
        r = self.A @ x - self.b
        return float(0.5 * r @ r)

    def _reply(self, y):
        r = self.A @ y - self.b
        return OracleReply(y, 0.5 * r @ r, self.A.T @ r, lipschitz=self.lipschitz, has_composite=True)

    def _value(self, x):
        return self.smooth_value(x) + self.composite.value(x)

    def to_dict(self):
        return {
            "variant": self.variant, "dim": self.dim, "A": self.A.tolist(), "b": self.b.tolist(),
            "weight": self.weight,
        }


class InexactWrapper(Problem):
    """
    Wraps a structured problem and shifts each reply's value down by u * delta, where u in [0, 1)
    is derived from (seed, y) by hashing. The slope is left untouched, so
    l_f(y; x) <= f(x) <= l_f(y; x) + L/2 ||x - y||^2 + delta holds with the base problem's L.
    """

    variant = INEXACT

    def __init__(self, base: Problem, delta: float, seed: int = 0, params=None):
        if not base.structured:
            raise ConfigError("the inexact oracle wraps structured problems only")
        if isinstance(base, InexactWrapper):
            raise ConfigError("inexact oracles do not nest")
        delta = float(delta)
        if not delta >= 0:
            raise ConfigError(f"inexact oracle delta must be nonnegative, got {delta!r}")

        self.base = base
        self.delta = delta
        self.seed = int(seed)
        super().__init__(base.dim, lipschitz=base.lipschitz, composite=base.composite, params=params)

    @property
    def ident(self) -> str:
        return f"inexact({self.base.ident},delta={self.delta!r})"

    def perturbation(self, y: np.ndarray) -> float:
        digest = hashlib.md5(struct.pack("<q", self.seed) + np.ascontiguousarray(y, dtype="<f8").tobytes()).digest()
        return int.from_bytes(digest[:8], "little") / float(1 << 64)

    def _reply(self, y):
        exact = self.base._reply(y)
        u = self.perturbation(y)
        return OracleReply(y, exact.value - u * self.delta, exact.slope, lipschitz=exact.lipschitz,
                           delta=self.delta, has_composite=exact.has_composite)

    def _value(self, x):
        return self.base._value(x)

    def to_dict(self):
        return {"variant": self.variant, "dim": self.dim, "base": self.base.to_dict(), "delta": self.delta,
                "seed": self.seed}


#
# Oracle operations
#

def query(problem: Problem, y, setup: Optional[ProxSetup] = None) -> OracleReply:
    """
    Ask the oracle for the lower model at y. When a setup is given, y must be feasible.
    """
    y = problem._check(y)
    if setup is not None and setup.set.residual(y) > FEASIBILITY_TOL:
        raise InfeasiblePointError(f"query point violates {setup.set.kind} constraints by {setup.set.residual(y)!r}")
    return problem._reply(y)


def lower_model_value(reply: OracleReply, y, x, psi: Optional[CompositeTerm] = None) -> float:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    value = reply.value + float(reply.slope @ (x - y))
    if reply.has_composite and psi is not None:
        value += psi.value(x)
    return value


def true_value(problem: Problem, x) -> float:
    return problem._value(problem._check(x))


def problem_from_dict(data: Dict) -> Problem:
    """
    Build a problem from explicit data, or from a generator spec when no matrices are given.
    """
    variant = data.get("variant")
    if variant not in VARIANTS:
        raise ConfigError(f"unknown problem variant {variant!r}")

    if variant == INEXACT:
        if "base" not in data:
            raise ConfigError("an inexact_wrapper problem needs a 'base' problem")
        if isinstance(data["base"], dict) and "A" not in data["base"]:
            from .generators import generate
            dim = data.get("dim", data["base"].get("dim"))
            return generate(variant, dim, data.get("seed", 0), **_generator_params(data))
        return InexactWrapper(problem_from_dict(data["base"]), data.get("delta", 0.0), seed=data.get("seed", 0))

    if "A" not in data:
        from .generators import generate
        if "dim" not in data:
            raise ConfigError(f"generated {variant} problem needs a 'dim'")
        return generate(variant, data["dim"], data.get("seed", 0), **_generator_params(data))

    if variant == MAX_AFFINE:
        return MaxAffine(data["A"], data["b"])
    if variant == L1_REGRESSION:
        return L1Regression(data["A"], data["b"])
    if variant == QUADRATIC:
        return Quadratic(data["A"], data["b"], lipschitz=data.get("lipschitz"))
    return CompositeLasso(data["A"], data["b"], data.get("weight", 0.0))


def _generator_params(data: Dict) -> Dict:
    return {k: v for k, v in data.items() if k not in ("variant", "dim", "seed")}
