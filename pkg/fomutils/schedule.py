#
# Parameter schedules: weights lambda_k, scalings beta_k (k >= -1 for beta), and the MD/DA
# model-choice policy used to build each auxiliary function.
#

import logging
import math
import threading
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, OptimalPointDetected

l = logging.getLogger(__name__)

MD = "MD"
DA = "DA"
MODEL_CHOICES = (MD, DA)

SIMPLE_AVERAGES = "simple_averages"
WEIGHTED_AVERAGES = "weighted_averages"
CLASSIC_SMOOTH = "classic_smooth"
FAST_SMOOTH = "fast_smooth"
TSENG_LAMBDA = "tseng_lambda"
MDM_CLASSIC = "mdm_classic"
DGN_INEXACT = "dgn_inexact"
CUSTOM = "custom"
SCHEDULE_KINDS = (
    SIMPLE_AVERAGES, WEIGHTED_AVERAGES, CLASSIC_SMOOTH, FAST_SMOOTH, TSENG_LAMBDA, MDM_CLASSIC, DGN_INEXACT, CUSTOM,
)
SMOOTH_KINDS = (CLASSIC_SMOOTH, FAST_SMOOTH, TSENG_LAMBDA, DGN_INEXACT)

PURE_MD = "pure_md"
PURE_DA = "pure_da"
PATTERN = "pattern"
SEEDED_RANDOM = "seeded_random"
MIX_POLICIES = (PURE_MD, PURE_DA, PATTERN, SEEDED_RANDOM)


#
# Memoized recursions
#

# _BETA_HAT[k + 1] holds beta_hat_k
_BETA_HAT: List[float] = [1.0, 1.0]
_TSENG: List[float] = [1.0]
_memo_lock = threading.Lock()


def beta_hat(k: int) -> float:
    """
    The auxiliary sequence beta_hat_{-1} = beta_hat_0 = 1, beta_hat_{k+1} = beta_hat_k + 1 / beta_hat_k.
    """
    if k < -1:
        raise ValueError(f"beta_hat is defined for k >= -1, got {k}")

    with _memo_lock:
        while len(_BETA_HAT) <= k + 1:
            last = _BETA_HAT[-1]
            _BETA_HAT.append(last + 1.0 / last)
        return _BETA_HAT[k + 1]


def beta_hat_sequence(k: int) -> np.ndarray:
    """
    beta_hat_{-1}, ..., beta_hat_k as an array (index shifted by one).
    """
    beta_hat(k)
    with _memo_lock:
        return np.array(_BETA_HAT[: k + 2])


def tseng_lambda(k: int) -> float:
    """
    lambda_0 = 1, lambda_{k+1} = (1 + sqrt(1 + 4 lambda_k^2)) / 2.
    """
    if k < 0:
        raise ValueError(f"tseng weights are defined for k >= 0, got {k}")

    with _memo_lock:
        while len(_TSENG) <= k:
            last = _TSENG[-1]
            _TSENG.append(0.5 * (1.0 + math.sqrt(1.0 + 4.0 * last * last)))
        return _TSENG[k]


class Schedule:
    """
    Immutable descriptor of a (lambda_k, beta_k) generator.

    :ivar kind:     One of SCHEDULE_KINDS.
    :ivar params:   Kind-specific parameters (gamma, rho, L, lambdas, betas, rule, ...).
    :ivar sigma:    The setup's strong-convexity parameter, bound by the driver.
    """

    __slots__ = ("kind", "params", "sigma")

    def __init__(self, kind: str, sigma=1.0, **params):
        if kind not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule kind {kind!r}")
        if not float(sigma) > 0:
            raise ConfigError(f"sigma must be positive, got {sigma!r}")

        self.kind = kind
        self.sigma = float(sigma)
        self.params = dict(params)
        self._validate()

    def __repr__(self):
        return f"<Schedule {self.kind} {self.params}>"

    def __eq__(self, other):
        return (
            isinstance(other, Schedule)
            and self.kind == other.kind
            and self.sigma == other.sigma
            and self.params == other.params
        )

    def _positive(self, name) -> float:
        if name not in self.params:
            raise ConfigError(f"schedule {self.kind} needs '{name}'")
        value = float(self.params[name])
        if not (value > 0 and math.isfinite(value)):
            raise ConfigError(f"schedule {self.kind} needs a positive finite '{name}', got {value!r}")
        return value

    def _validate(self):
        if self.kind == SIMPLE_AVERAGES:
            self._positive("gamma")
        elif self.kind == WEIGHTED_AVERAGES:
            self._positive("rho")
        elif self.kind in SMOOTH_KINDS:
            self._positive("L")
        elif self.kind == MDM_CLASSIC:
            if "lambdas" in self.params:
                self._check_lambdas(self.params["lambdas"])
            else:
                rule = self.params.get("rule")
                if rule == "constant":
                    self._positive("value")
                elif rule == "inv_sqrt":
                    self._positive("r")
                else:
                    raise ConfigError("mdm_classic needs 'lambdas' or a rule ('constant' or 'inv_sqrt')")
        elif self.kind == CUSTOM:
            lambdas = self.params.get("lambdas")
            betas = self.params.get("betas")
            self._check_lambdas(lambdas)
            if not isinstance(betas, (list, tuple)) or len(betas) != len(lambdas) + 1:
                raise ConfigError("custom schedule needs 'betas' for k = -1..K-1 (one more than 'lambdas')")
            betas = [float(b) for b in betas]
            if any(not (b > 0 and math.isfinite(b)) for b in betas):
                raise ConfigError("custom schedule betas must be positive and finite")
            for i in range(1, len(betas)):
                if betas[i] < betas[i - 1]:
                    raise ConfigError(f"custom schedule has decreasing beta at k={i - 1}: {betas[i]!r} < {betas[i - 1]!r}")

    def _check_lambdas(self, lambdas):
        if not isinstance(lambdas, (list, tuple)) or not lambdas:
            raise ConfigError(f"schedule {self.kind} needs a nonempty 'lambdas' list")
        if any(not (float(v) > 0 and math.isfinite(float(v))) for v in lambdas):
            raise ConfigError(f"schedule {self.kind} weights must be positive and finite")

    @property
    def horizon(self) -> Optional[int]:
        """
        Number of iterations this schedule can feed, or None when unbounded.
        """
        if "lambdas" in self.params and self.kind in (MDM_CLASSIC, CUSTOM):
            return len(self.params["lambdas"])
        return None

    @property
    def needs_gradient(self) -> bool:
        return self.kind == WEIGHTED_AVERAGES

    @property
    def smooth(self) -> bool:
        return self.kind in SMOOTH_KINDS

    def bind(self, sigma: float) -> "Schedule":
        if float(sigma) == self.sigma:
            return self
        return Schedule(self.kind, sigma=sigma, **self.params)

    def lambda_at(self, k: int, grad_dual_norm: Optional[float] = None) -> float:
        if k < 0:
            raise ValueError(f"weights are defined for k >= 0, got {k}")

        kind = self.kind
        if kind in (SIMPLE_AVERAGES, CLASSIC_SMOOTH):
            return 1.0
        if kind == WEIGHTED_AVERAGES:
            if grad_dual_norm is None:
                raise ConfigError("weighted averages need the subgradient norm before choosing lambda_k")
            if grad_dual_norm == 0:
                raise OptimalPointDetected(k)
            return 1.0 / grad_dual_norm
        if kind == FAST_SMOOTH:
            return (k + 1) / 2.0
        if kind == TSENG_LAMBDA:
            return tseng_lambda(k)
        if kind == DGN_INEXACT:
            return 1.0 / float(self.params["L"])
        if kind == MDM_CLASSIC and "lambdas" not in self.params:
            if self.params["rule"] == "constant":
                return float(self.params["value"])
            return float(self.params["r"]) / math.sqrt(k + 1)

        lambdas = self.params["lambdas"]
        if k >= len(lambdas):
            raise ConfigError(f"schedule {kind} has {len(lambdas)} weights, k={k} requested")
        return float(lambdas[k])

    def beta_at(self, k: int) -> float:
        if k < -1:
            raise ValueError(f"scalings are defined for k >= -1, got {k}")

        kind = self.kind
        if kind == SIMPLE_AVERAGES:
            return float(self.params["gamma"]) * beta_hat(k)
        if kind == WEIGHTED_AVERAGES:
            return beta_hat(k) / (float(self.params["rho"]) * math.sqrt(self.sigma))
        if kind in (CLASSIC_SMOOTH, FAST_SMOOTH, TSENG_LAMBDA):
            return float(self.params["L"]) / self.sigma
        if kind == DGN_INEXACT:
            return 1.0 / self.sigma
        if kind == MDM_CLASSIC:
            return 1.0

        betas = self.params["betas"]
        if k + 1 >= len(betas):
            raise ConfigError(f"custom schedule has {len(betas)} scalings, k={k} requested")
        return float(betas[k + 1])

    def to_dict(self) -> Dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, data: Dict, sigma=1.0) -> "Schedule":
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigError("schedule must be an object with a 'kind'")
        params = {k: v for k, v in data.items() if k != "kind"}
        return cls(data["kind"], sigma=sigma, **params)


def next_params(schedule: Schedule, k: int, grad_dual_norm: Optional[float] = None) -> Tuple[float, float]:
    """
    (lambda_k, beta_k) for iteration k >= 0.
    """
    return schedule.lambda_at(k, grad_dual_norm), schedule.beta_at(k)


class MixPolicy:
    """
    Which model (extended MD or DA) builds psi_k from psi_{k-1}.

    :ivar kind:     One of pure_md, pure_da, pattern, seeded_random.
    :ivar pattern:  The repeating word for "pattern", e.g. ["MD", "DA"].
    :ivar seed:     Seed for "seeded_random".
    :ivar p_md:     Probability of MD for "seeded_random".
    """

    __slots__ = ("kind", "pattern", "seed", "p_md")

    def __init__(self, kind=PURE_DA, pattern=None, seed=0, p_md=0.5):
        if kind not in MIX_POLICIES:
            raise ConfigError(f"unknown mix policy {kind!r}")

        self.kind = kind
        self.pattern = tuple(pattern) if pattern is not None else None
        self.seed = int(seed)
        self.p_md = float(p_md)
        if kind == PATTERN:
            if not self.pattern:
                raise ConfigError("a pattern mix policy needs a nonempty 'pattern'")
            if any(choice not in MODEL_CHOICES for choice in self.pattern):
                raise ConfigError(f"pattern entries must be one of {MODEL_CHOICES}, got {list(self.pattern)}")
        if not 0.0 <= self.p_md <= 1.0:
            raise ConfigError(f"p_md must lie in [0, 1], got {self.p_md!r}")

    def __repr__(self):
        if self.kind == PATTERN:
            return f"<MixPolicy pattern {''.join(c[0] for c in self.pattern)}>"
        return f"<MixPolicy {self.kind}>"

    def __eq__(self, other):
        return isinstance(other, MixPolicy) and self.to_dict() == other.to_dict()

    def to_dict(self) -> Dict:
        data = {"policy": self.kind}
        if self.kind == PATTERN:
            data["pattern"] = list(self.pattern)
        elif self.kind == SEEDED_RANDOM:
            data["seed"] = self.seed
            data["p_md"] = self.p_md
        return data

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "MixPolicy":
        if not data:
            return cls()
        if isinstance(data, str):
            return cls(data)
        return cls(data.get("policy", PURE_DA), pattern=data.get("pattern"), seed=data.get("seed", 0),
                   p_md=data.get("p_md", 0.5))


def model_choice(policy: MixPolicy, k: int) -> str:
    if k < 0:
        raise ValueError(f"model choices start at k=0, got {k}")

    if policy.kind == PURE_MD:
        return MD
    if policy.kind == PURE_DA:
        return DA
    if policy.kind == PATTERN:
        return policy.pattern[k % len(policy.pattern)]

    draw = np.random.default_rng([policy.seed, k]).random()
    return MD if draw < policy.p_md else DA
