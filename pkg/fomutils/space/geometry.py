#
# Bregman geometry: feasible sets, prox-functions, Bregman distances and the exact solver for the
# prox subproblem  min_{x in Q} <s, x> + w * Psi(x) + beta * d(x).
#
# Supported (set, geometry) pairs:
#   free/box/ball/simplex with the Euclidean prox-function  d(x) = sigma/2 ||x - x0||_2^2
#   simplex with the entropy prox-function                   d(x) = sigma * (ln n + sum x_i ln x_i)
# The l1 composite term is only solved exactly for the Euclidean geometry on free space and boxes.
#

import logging
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.special import rel_entr, xlogy

from ..errors import ConfigError, DimensionError, InfeasiblePointError, UnsupportedSubproblemError
from . import projections

l = logging.getLogger(__name__)

FREE = "free"
BOX = "box"
BALL = "ball"
SIMPLEX = "simplex"
SET_KINDS = (FREE, BOX, BALL, SIMPLEX)

EUCLIDEAN = "euclidean"
ENTROPY = "entropy"
GEOMETRIES = (EUCLIDEAN, ENTROPY)

PSI_NONE = "none"
PSI_L1 = "l1"
PSI_INDICATOR = "indicator"
PSI_KINDS = (PSI_NONE, PSI_L1, PSI_INDICATOR)

# spread of sampled points around the prox-center on free space
FREE_SAMPLE_SCALE = 2.0
# constraint violation accepted when evaluating d on iterates
DOMAIN_TOL = 1e-9


class CompositeTerm:
    """
    The simple convex term Psi(x) of a composite objective. "indicator" means the indicator of the
    feasible set, which is already absorbed by minimizing over Q and so evaluates to zero on Q.
    """

    __slots__ = ("kind", "weight")

    def __init__(self, kind=PSI_NONE, weight=0.0):
        if kind not in PSI_KINDS:
            raise ConfigError(f"unknown composite term kind {kind!r}")

        weight = float(weight)
        if not np.isfinite(weight) or weight < 0:
            raise ConfigError(f"composite weight must be finite and nonnegative, got {weight!r}")

        self.kind = kind
        self.weight = weight if kind == PSI_L1 else 0.0

    def __repr__(self):
        if self.kind == PSI_L1:
            return f"<CompositeTerm l1 w={self.weight!r}>"
        return f"<CompositeTerm {self.kind}>"

    def __eq__(self, other):
        return isinstance(other, CompositeTerm) and self.kind == other.kind and self.weight == other.weight

    def __hash__(self):
        return hash((self.kind, self.weight))

    @property
    def l1_weight(self) -> float:
        return self.weight if self.kind == PSI_L1 else 0.0

    def value(self, x: np.ndarray) -> float:
        if self.kind == PSI_L1:
            return self.weight * float(np.sum(np.abs(x)))
        return 0.0

    def to_dict(self) -> Dict:
        data = {"kind": self.kind}
        if self.kind == PSI_L1:
            data["weight"] = self.weight
        return data

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "CompositeTerm":
        if not data:
            return cls()
        return cls(data.get("kind", PSI_NONE), data.get("weight", 0.0))


NO_COMPOSITE = CompositeTerm()


class FeasibleSet:
    """
    Descriptor of a simple closed convex set Q.

    :ivar kind:     One of free, box, ball, simplex.
    :ivar lower:    Box lower bounds (vector), box only.
    :ivar upper:    Box upper bounds (vector), box only.
    :ivar center:   Ball center, ball only.
    :ivar radius:   Ball radius, ball only.
    """

    __slots__ = ("kind", "dim", "lower", "upper", "center", "radius")

    def __init__(self, kind: str, dim: int, lower=None, upper=None, center=None, radius=None):
        if kind not in SET_KINDS:
            raise ConfigError(f"unknown feasible set kind {kind!r}")

        self.kind = kind
        self.dim = int(dim)
        self.lower = self.upper = self.center = self.radius = None
        if kind == BOX:
            if lower is None or upper is None:
                raise ConfigError("a box needs 'lower' and 'upper' bounds")
            self.lower = np.broadcast_to(np.asarray(lower, dtype=float), (self.dim,)).copy()
            self.upper = np.broadcast_to(np.asarray(upper, dtype=float), (self.dim,)).copy()
            if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
                raise ConfigError("box bounds must be finite")
            if np.any(self.lower > self.upper):
                raise ConfigError("box has lower > upper")
        elif kind == BALL:
            if radius is None or not float(radius) > 0:
                raise ConfigError("a ball needs a positive 'radius'")
            center = np.zeros(self.dim) if center is None else center
            self.center = np.broadcast_to(np.asarray(center, dtype=float), (self.dim,)).copy()
            self.radius = float(radius)

    def __repr__(self):
        return f"<FeasibleSet {self.kind} n={self.dim}>"

    def __eq__(self, other):
        if not isinstance(other, FeasibleSet) or (self.kind, self.dim) != (other.kind, other.dim):
            return False
        if self.kind == BOX:
            return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)
        if self.kind == BALL:
            return np.array_equal(self.center, other.center) and self.radius == other.radius
        return True

    @property
    def compact(self) -> bool:
        return self.kind != FREE

    def default_center(self) -> np.ndarray:
        if self.kind == BOX:
            return np.clip(np.zeros(self.dim), self.lower, self.upper)
        if self.kind == BALL:
            return self.center.copy()
        if self.kind == SIMPLEX:
            return np.full(self.dim, 1.0 / self.dim)
        return np.zeros(self.dim)

    def residual(self, x: np.ndarray) -> float:
        """
        Constraint violation of x, zero when x is in the set.
        """
        if self.kind == BOX:
            return float(max(np.max(self.lower - x), np.max(x - self.upper), 0.0))
        if self.kind == BALL:
            return float(max(np.linalg.norm(x - self.center) - self.radius, 0.0))
        if self.kind == SIMPLEX:
            return float(max(abs(np.sum(x) - 1.0), np.max(-x), 0.0))
        return 0.0

    def project(self, x: np.ndarray) -> np.ndarray:
        if self.kind == BOX:
            return projections.project_box(x, self.lower, self.upper)
        if self.kind == BALL:
            return projections.project_ball(x, self.center, self.radius)
        if self.kind == SIMPLEX:
            return projections.project_simplex(x)
        return np.array(x, dtype=float)

    def sample(self, rng: np.random.Generator, count: int, around: Optional[np.ndarray] = None,
               scale=FREE_SAMPLE_SCALE) -> np.ndarray:
        """
        Draw ``count`` feasible points as rows. Free space is sampled from a Gaussian cloud
        around ``around`` (or the origin).
        """
        if self.kind == BOX:
            return rng.uniform(self.lower, self.upper, size=(count, self.dim))
        if self.kind == BALL:
            directions = rng.standard_normal((count, self.dim))
            directions /= np.maximum(np.linalg.norm(directions, axis=1, keepdims=True), 1e-300)
            radii = self.radius * rng.random((count, 1)) ** (1.0 / self.dim)
            return self.center + radii * directions
        if self.kind == SIMPLEX:
            return rng.dirichlet(np.ones(self.dim), size=count)

        around = np.zeros(self.dim) if around is None else around
        return around + scale * rng.standard_normal((count, self.dim))

    def min_affine(self, a: np.ndarray, l1=0.0) -> Optional[Tuple[float, np.ndarray]]:
        """
        Exact minimum of <a, x> + l1 * ||x||_1 over the set, or None when there is no finite
        minimum or no exact rule (free space with a dominating slope, l1 off a box).
        """
        if self.kind == BOX:
            return projections.min_affine_box(a, self.lower, self.upper, l1=l1)
        if l1 > 0 and self.kind != FREE:
            return None
        if self.kind == BALL:
            return projections.min_affine_ball(a, self.center, self.radius)
        if self.kind == SIMPLEX:
            return projections.min_affine_simplex(a)

        if np.all(np.abs(a) <= l1):
            return 0.0, np.zeros(self.dim)
        return None

    def to_dict(self) -> Dict:
        data = {"kind": self.kind}
        if self.kind == BOX:
            data["lower"] = self.lower.tolist()
            data["upper"] = self.upper.tolist()
        elif self.kind == BALL:
            data["center"] = self.center.tolist()
            data["radius"] = self.radius
        return data

    @classmethod
    def from_dict(cls, data: Union[Dict, str, None], dim: int) -> "FeasibleSet":
        if data is None:
            return cls(FREE, dim)
        if isinstance(data, str):
            return cls(data, dim)
        return cls(
            data.get("kind", FREE), dim,
            lower=data.get("lower"), upper=data.get("upper"),
            center=data.get("center"), radius=data.get("radius"),
        )


class ProxSetup:
    """
    Feasible set plus prox-function geometry. Immutable after construction.

    :ivar dim:          Dimension n of the space.
    :ivar set:          The FeasibleSet Q.
    :ivar geometry:     "euclidean" (norm l2) or "entropy" (norm l1, simplex only).
    :ivar sigma:        Strong-convexity parameter of d w.r.t. the geometry's norm.
    :ivar x0:           The prox-center, d(x0) = min_Q d = 0.
    """

    __slots__ = ("dim", "set", "geometry", "sigma", "x0")

    def __init__(self, dim: int, feasible_set: Optional[FeasibleSet] = None, geometry=EUCLIDEAN, sigma=1.0,
                 x0=None):
        dim = int(dim)
        if dim <= 0:
            raise ConfigError(f"dimension must be positive, got {dim}")
        if geometry not in GEOMETRIES:
            raise ConfigError(f"unknown geometry {geometry!r}")

        feasible_set = feasible_set if feasible_set is not None else FeasibleSet(FREE, dim)
        if feasible_set.dim != dim:
            raise ConfigError(f"feasible set has dim {feasible_set.dim}, setup has dim {dim}")
        if geometry == ENTROPY and feasible_set.kind != SIMPLEX:
            raise ConfigError("the entropy prox-function is only defined on the simplex")

        sigma = float(sigma)
        if not sigma > 0:
            raise ConfigError(f"sigma must be positive, got {sigma!r}")

        center = feasible_set.default_center()
        if x0 is not None:
            x0 = np.asarray(x0, dtype=float)
            if x0.shape != (dim,):
                raise ConfigError(f"prox-center has shape {x0.shape}, expected ({dim},)")
            if geometry == ENTROPY and not np.allclose(x0, center, rtol=0, atol=1e-15):
                raise ConfigError("the entropy prox-center is the uniform point")
            if feasible_set.residual(x0) > 0:
                raise ConfigError("prox-center must lie in the feasible set")
            center = x0 if geometry == EUCLIDEAN else center

        self.dim = dim
        self.set = feasible_set
        self.geometry = geometry
        self.sigma = sigma
        self.x0 = np.array(center, dtype=float)
        self.x0.setflags(write=False)

    def __repr__(self):
        return f"<ProxSetup {self.ident}>"

    def __eq__(self, other):
        return (
            isinstance(other, ProxSetup)
            and self.dim == other.dim
            and self.set == other.set
            and self.geometry == other.geometry
            and self.sigma == other.sigma
            and np.array_equal(self.x0, other.x0)
        )

    @property
    def ident(self) -> str:
        return f"{self.set.kind}-{self.geometry}-n{self.dim}"

    def norm(self, x: np.ndarray) -> float:
        """
        The primal norm: l2 for the Euclidean geometry, l1 for the entropy geometry.
        """
        ord_ = 1 if self.geometry == ENTROPY else 2
        return float(np.linalg.norm(x, ord=ord_))

    def to_dict(self) -> Dict:
        data = {
            "dim": self.dim,
            "set": self.set.to_dict(),
            "geometry": self.geometry,
            "sigma": self.sigma,
        }
        if self.geometry == EUCLIDEAN and not np.array_equal(self.x0, self.set.default_center()):
            data["x0"] = self.x0.tolist()
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "ProxSetup":
        if "dim" not in data:
            raise ConfigError("setup needs a 'dim'")
        dim = int(data["dim"])
        feasible_set = FeasibleSet.from_dict(data.get("set"), dim)
        return cls(dim, feasible_set, geometry=data.get("geometry", EUCLIDEAN), sigma=data.get("sigma", 1.0),
                   x0=data.get("x0"))


#
# Prox-function operations
#

def as_point(setup: ProxSetup, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (setup.dim,):
        raise DimensionError(f"expected a vector of dimension {setup.dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InfeasiblePointError("vector has non-finite entries")
    return x


def is_feasible(setup: ProxSetup, x: np.ndarray, tol=0.0) -> bool:
    return setup.set.residual(as_point(setup, x)) <= tol


def _in_set(setup: ProxSetup, x) -> np.ndarray:
    x = as_point(setup, x)
    if not is_feasible(setup, x, DOMAIN_TOL):
        raise InfeasiblePointError(
            f"point violates the {setup.set.kind} constraints by {setup.set.residual(x)!r}"
        )
    return x


def d_value(setup: ProxSetup, x) -> float:
    x = _in_set(setup, x)
    if setup.geometry == ENTROPY:
        if np.any(x < 0):
            raise InfeasiblePointError("entropy prox-function needs nonnegative entries")
        return setup.sigma * float(np.log(setup.dim) + np.sum(xlogy(x, x)))

    diff = x - setup.x0
    return 0.5 * setup.sigma * float(diff @ diff)


def d_grad(setup: ProxSetup, x) -> np.ndarray:
    x = _in_set(setup, x)
    if setup.geometry == ENTROPY:
        if np.any(x <= 0):
            raise InfeasiblePointError("entropy prox-function is not differentiable on the simplex boundary")
        return setup.sigma * (1.0 + np.log(x))

    return setup.sigma * (x - setup.x0)


def bregman(setup: ProxSetup, z, x) -> float:
    """
    xi(z, x) = d(x) - d(z) - <grad d(z), x - z>, evaluated in closed form.
    """
    z = _in_set(setup, z)
    x = _in_set(setup, x)
    if setup.geometry == ENTROPY:
        if np.any(z <= 0):
            raise InfeasiblePointError("entropy prox-function is not differentiable on the simplex boundary")
        if np.any(x < 0):
            raise InfeasiblePointError("entropy prox-function needs nonnegative entries")
        return setup.sigma * float(np.sum(rel_entr(x, z)) - np.sum(x) + np.sum(z))

    diff = x - z
    return 0.5 * setup.sigma * float(diff @ diff)


def l_d(setup: ProxSetup, z, x) -> float:
    """
    Linearization of d at z evaluated at x: d(z) + <grad d(z), x - z> = d(x) - xi(z, x).
    """
    return d_value(setup, x) - bregman(setup, z, x)


def dual_norm(setup: ProxSetup, s) -> float:
    s = np.asarray(s, dtype=float)
    if s.shape != (setup.dim,):
        raise DimensionError(f"expected a vector of dimension {setup.dim}, got shape {s.shape}")
    if setup.geometry == ENTROPY:
        return float(np.max(np.abs(s)))
    return float(np.linalg.norm(s))


def check_supported(setup: ProxSetup, psi: Optional[CompositeTerm] = None):
    psi = psi or NO_COMPOSITE
    if psi.kind != PSI_L1:
        return
    if setup.geometry != EUCLIDEAN or setup.set.kind not in (FREE, BOX):
        raise UnsupportedSubproblemError(
            f"no exact prox for an l1 term with {setup.geometry} geometry on a {setup.set.kind} set"
        )


def prox_argmin(setup: ProxSetup, s, beta: float, psi: Optional[CompositeTerm] = None, psi_weight=0.0) -> np.ndarray:
    """
    Unique minimizer over Q of <s, x> + psi_weight * Psi(x) + beta * d(x).

    :param ProxSetup setup:     The geometry.
    :param s:                   The aggregated linear term (a dual vector).
    :param beta:                Positive scaling of the prox-function.
    :param psi:                 The composite term Psi, or None.
    :param psi_weight:          Nonnegative multiplier of Psi.
    :return:                    The minimizer as a new array.
    """
    psi = psi or NO_COMPOSITE
    s = np.asarray(s, dtype=float)
    if s.shape != (setup.dim,):
        raise DimensionError(f"expected a vector of dimension {setup.dim}, got shape {s.shape}")
    if not beta > 0:
        raise ValueError(f"prox scaling beta must be positive, got {beta!r}")
    if not psi_weight >= 0:
        raise ValueError(f"composite weight must be nonnegative, got {psi_weight!r}")

    check_supported(setup, psi)
    tau = psi_weight * psi.l1_weight
    if tau == 0 and not np.any(s):
        return setup.x0.copy()

    scale = beta * setup.sigma
    if setup.geometry == ENTROPY:
        return projections.entropic_argmin(s, scale)

    v = setup.x0 - s / scale
    if tau > 0:
        v = projections.soft_threshold(v, tau / scale)
        return setup.set.project(v) if setup.set.kind == BOX else v

    return setup.set.project(v)


def min_affine(setup: ProxSetup, a: np.ndarray, l1=0.0) -> Optional[Tuple[float, np.ndarray]]:
    return setup.set.min_affine(np.asarray(a, dtype=float), l1=l1)
