#
# Closed-form rate envelopes and boundedness balls for the standard parameter choices.
#

import logging
import math
from typing import Dict, Optional

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..errors import ConfigError
from ..methods import CGM, FGM, NONSMOOTH_METHODS, SUBGRAD_A, RunTrace
from ..oracle import OptimumInfo
from ..schedule import (
    CLASSIC_SMOOTH, DGN_INEXACT, FAST_SMOOTH, SIMPLE_AVERAGES, TSENG_LAMBDA, WEIGHTED_AVERAGES,
)
from .relations import Check, compute_Ck, linearized_d, weights

l = logging.getLogger(__name__)

SIMPLE = "simple_averages"
WEIGHTED = "weighted_averages"
SIMPLE_OPTIMAL = "simple_averages_optimal"
WEIGHTED_OPTIMAL = "weighted_averages_optimal"
CGM_ENVELOPE = "cgm"
FGM_ENVELOPE = "fgm"
ENVELOPE_KINDS = (SIMPLE, WEIGHTED, SIMPLE_OPTIMAL, WEIGHTED_OPTIMAL, CGM_ENVELOPE, FGM_ENVELOPE)
NONSMOOTH_ENVELOPES = (SIMPLE, WEIGHTED, SIMPLE_OPTIMAL, WEIGHTED_OPTIMAL)

# relative slack when matching an envelope's constants against the run's schedule
_PARAM_MATCH = 1e-12


def optimal_gamma(M: float, R: float, sigma=1.0) -> float:
    return M / (math.sqrt(2.0) * sigma * R)


def optimal_rho(R: float, sigma=1.0) -> float:
    return math.sqrt(2.0 * sigma) * R


def averaging_factor(k) -> np.ndarray:
    """
    (0.5 + sqrt(2k + 1)) / (k + 1).
    """
    k = np.asarray(k, dtype=float)
    return (0.5 + np.sqrt(2.0 * k + 1.0)) / (k + 1.0)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _PARAM_MATCH * max(abs(a), abs(b))


class RateEnvelope:
    """
    A closed-form upper bound on f(xhat_k) - f* for one parameter family.

    :ivar kind:     One of ENVELOPE_KINDS.
    :ivar params:   gamma (simple), rho (weighted), M and R (optimal kinds), L and delta (cgm, fgm).
    """

    __slots__ = ("kind", "params")

    def __init__(self, kind: str, **params):
        if kind not in ENVELOPE_KINDS:
            raise ConfigError(f"unknown rate envelope {kind!r}")
        self.kind = kind
        self.params = {k: float(v) for k, v in params.items()}

    def __repr__(self):
        return f"<RateEnvelope {self.kind} {self.params}>"

    def __eq__(self, other):
        return isinstance(other, RateEnvelope) and self.kind == other.kind and self.params == other.params

    def _param(self, name) -> float:
        if name not in self.params:
            raise ConfigError(f"envelope {self.kind} needs '{name}'")
        return self.params[name]

    def check_matches(self, trace: RunTrace):
        """
        Raise ConfigError when the trace was not produced with this envelope's parameter family.
        """
        schedule = trace.config.schedule
        sigma = trace.setup.sigma
        method = trace.method
        if self.kind in NONSMOOTH_ENVELOPES:
            if method not in NONSMOOTH_METHODS:
                raise ConfigError(f"envelope {self.kind} applies to subgradient methods, not {method}")
            wanted = SIMPLE_AVERAGES if self.kind in (SIMPLE, SIMPLE_OPTIMAL) else WEIGHTED_AVERAGES
            if schedule.kind != wanted:
                raise ConfigError(f"envelope {self.kind} needs the {wanted} schedule, the run used {schedule.kind}")
            if self.kind == SIMPLE and not _close(self._param("gamma"), float(schedule.params["gamma"])):
                raise ConfigError("envelope gamma differs from the schedule's")
            if self.kind == WEIGHTED and not _close(self._param("rho"), float(schedule.params["rho"])):
                raise ConfigError("envelope rho differs from the schedule's")
            if self.kind == SIMPLE_OPTIMAL:
                gamma = optimal_gamma(self._param("M"), self._param("R"), sigma)
                if not _close(gamma, float(schedule.params["gamma"])):
                    raise ConfigError(f"optimal envelope needs gamma={gamma!r}, the run used {schedule.params['gamma']!r}")
            if self.kind == WEIGHTED_OPTIMAL:
                rho = optimal_rho(self._param("R"), sigma)
                if not _close(rho, float(schedule.params["rho"])):
                    raise ConfigError(f"optimal envelope needs rho={rho!r}, the run used {schedule.params['rho']!r}")
        elif self.kind == CGM_ENVELOPE:
            if method != CGM or schedule.kind not in (CLASSIC_SMOOTH, DGN_INEXACT):
                raise ConfigError(f"the cgm envelope needs a cgm run with classic_smooth or dgn_inexact, got {method}/{schedule.kind}")
        elif self.kind == FGM_ENVELOPE:
            if method != FGM or schedule.kind not in (FAST_SMOOTH, TSENG_LAMBDA):
                raise ConfigError(f"the fgm envelope needs an fgm run with fast_smooth or tseng_lambda, got {method}/{schedule.kind}")
            if schedule.kind == TSENG_LAMBDA and self.params.get("delta", 0.0) > 0:
                raise ConfigError("the fgm envelope with delta > 0 is only established for fast_smooth weights")

        if self.kind in (CGM_ENVELOPE, FGM_ENVELOPE) and not _close(self._param("L"), float(schedule.params["L"])):
            raise ConfigError("envelope L differs from the schedule's")

    def values(self, trace: RunTrace, optimum: OptimumInfo) -> np.ndarray:
        """
        envelope_k for every recorded k. l_d(z_k; x*) is used raw; with only D known it is replaced by D.
        """
        n = len(trace)
        k = np.arange(n, dtype=float)
        sigma = trace.setup.sigma

        if self.kind in (SIMPLE_OPTIMAL, WEIGHTED_OPTIMAL):
            return math.sqrt(2.0) * self._param("M") * self._param("R") * averaging_factor(k)

        if optimum.x_star is not None:
            ld = linearized_d(trace, optimum.x_star)
        elif optimum.d_star_upper is not None:
            ld = np.full(n, optimum.d_star_upper)
        else:
            raise ValueError("rate envelopes need x* or an upper bound D on d(x*)")

        if self.kind == SIMPLE:
            gamma = self._param("gamma")
            M = np.maximum.accumulate(trace.column("grad_dual_norm")) if n else np.zeros(0)
            return (gamma * ld + M * M / (2.0 * sigma * gamma)) * averaging_factor(k)
        if self.kind == WEIGHTED:
            rho = self._param("rho")
            M = np.maximum.accumulate(trace.column("grad_dual_norm")) if n else np.zeros(0)
            return M / math.sqrt(sigma) * (ld / rho + rho / 2.0) * averaging_factor(k)

        L = self._param("L")
        delta = self.params.get("delta", 0.0)
        if self.kind == CGM_ENVELOPE:
            return L * ld / (sigma * (k + 1.0)) + delta
        return 4.0 * L * ld / (sigma * (k + 1.0) * (k + 2.0)) + (k + 3.0) * delta / 3.0

    def to_dict(self) -> Dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, data: Dict) -> "RateEnvelope":
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigError("an envelope must be an object with a 'kind'")
        return cls(data["kind"], **{k: v for k, v in data.items() if k != "kind"})


def envelope_for(trace: RunTrace) -> Optional[RateEnvelope]:
    """
    The envelope matching the trace's schedule, or None when no closed form is known for it.
    delta is taken as the largest recorded delta(x_k).
    """
    schedule = trace.config.schedule
    method = trace.method
    delta = float(np.max(trace.column("delta"))) if len(trace) and trace.records[0].delta is not None else 0.0

    if method in NONSMOOTH_METHODS and schedule.kind == SIMPLE_AVERAGES:
        return RateEnvelope(SIMPLE, gamma=schedule.params["gamma"])
    if method in NONSMOOTH_METHODS and schedule.kind == WEIGHTED_AVERAGES:
        return RateEnvelope(WEIGHTED, rho=schedule.params["rho"])
    if method == CGM and schedule.kind in (CLASSIC_SMOOTH, DGN_INEXACT):
        return RateEnvelope(CGM_ENVELOPE, L=schedule.params["L"], delta=delta)
    if method == FGM and (schedule.kind == FAST_SMOOTH or (schedule.kind == TSENG_LAMBDA and delta == 0)):
        return RateEnvelope(FGM_ENVELOPE, L=schedule.params["L"], delta=delta)
    return None


def check_rate(trace: RunTrace, envelope: RateEnvelope, optimum: OptimumInfo,
               tolerances: Tolerances = DEFAULT_TOLERANCES, f_xhat: Optional[np.ndarray] = None):
    """
    gap_k <= envelope_k + tolerance for all k. Returns (envelope values, Check on envelope - gap).
    """
    if optimum.f_star is None:
        raise ValueError("the rate check needs f*")
    envelope.check_matches(trace)

    values = envelope.values(trace, optimum)
    f_xhat = trace.column("f_xhat") if f_xhat is None else np.asarray(f_xhat, dtype=float)
    margins = values - (f_xhat - optimum.f_star)
    return values, Check(f"rate_{envelope.kind}", margins, margins >= -tolerances.envelope)


def check_averaged_value(trace: RunTrace, envelope: RateEnvelope, optimum: OptimumInfo,
                         tolerances: Tolerances = DEFAULT_TOLERANCES, f_x: Optional[np.ndarray] = None) -> Check:
    """
    For test points at the previous minimizer, the weighted mean of f(x_i) obeys the same envelope.
    """
    if trace.method != SUBGRAD_A or envelope.kind not in NONSMOOTH_ENVELOPES:
        return Check("averaged_value", [], [], detail=f"not applicable to {trace.method}/{envelope.kind}")

    values = envelope.values(trace, optimum)
    lam = weights(trace)
    f_x = trace.column("f_x") if f_x is None else np.asarray(f_x, dtype=float)
    mean = np.cumsum(lam * f_x) / np.cumsum(lam)
    margins = values - (mean - optimum.f_star)
    return Check("averaged_value", margins, margins >= -tolerances.envelope)


def ball_radii(trace: RunTrace, optimum: OptimumInfo) -> np.ndarray:
    """
    Squared radii r_{-1}, r_0, ..., r_{K-1} of the balls around x* that contain z_k (index k + 1).
    Closed forms for the standard schedules, 2 d(x*)/sigma + 2 C_k / (sigma beta_k) otherwise.
    Returned as a running maximum so the balls are nested.
    """
    setup = trace.setup
    sigma = setup.sigma
    schedule = trace.config.schedule
    method = trace.method
    d_star = optimum.d_star(setup)
    n = len(trace)
    k = np.arange(n, dtype=float)
    base = 2.0 * d_star / sigma

    if method in NONSMOOTH_METHODS and schedule.kind == SIMPLE_AVERAGES:
        gamma = float(schedule.params["gamma"])
        M = np.maximum.accumulate(trace.column("grad_dual_norm")) if n else np.zeros(0)
        radii = base + M * M / (sigma * sigma * gamma * gamma)
    elif method in NONSMOOTH_METHODS and schedule.kind == WEIGHTED_AVERAGES:
        rho = float(schedule.params["rho"])
        radii = np.full(n, (2.0 * d_star + rho * rho) / sigma)
    else:
        delta = float(np.max(trace.column("delta"))) if n and trace.records[0].delta is not None else 0.0
        if method == CGM and schedule.kind == CLASSIC_SMOOTH:
            radii = base + 2.0 * delta * (k + 1.0) / float(schedule.params["L"])
        elif method == FGM and schedule.kind == FAST_SMOOTH:
            radii = base + delta * (k + 1.0) * (k + 2.0) * (k + 3.0) / (6.0 * float(schedule.params["L"]))
        else:
            radii = base + 2.0 * compute_Ck(trace) / (sigma * trace.column("beta_k"))

    # r_{-1}: z_{-1} = x0 always lies within sqrt(2 d(x*) / sigma)
    radii = np.concatenate([[base], radii])
    return np.maximum.accumulate(radii)


def check_boundedness(trace: RunTrace, optimum: OptimumInfo, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Check:
    """
    z_k in B_k and x_k in B_{k-1} for every method; xhat_k in B_{k-1} for the subgradient
    methods and in B_k for the structured ones.
    """
    if optimum.x_star is None:
        return Check("boundedness", [], [], detail="x* unknown")

    setup = trace.setup
    radii = ball_radii(trace, optimum)
    x_star = optimum.x_star
    xhat_shift = 0 if trace.method in NONSMOOTH_METHODS else 1

    def dist(v):
        return setup.norm(v - x_star) ** 2

    margins = []
    for i, r in enumerate(trace.records):
        margins.append(min(
            radii[i + 1] - dist(r.z_k),
            radii[i] - dist(r.x_k),
            radii[i + xhat_shift] - dist(r.xhat_k),
        ))
    margins = np.asarray(margins)
    return Check("boundedness", margins, margins >= -tolerances.envelope)


def known_radius(optimum: OptimumInfo, setup) -> Optional[float]:
    """
    R = sqrt(d(x*) / sigma), when d(x*) or an upper bound is known.
    """
    d_star = optimum.d_star(setup)
    if d_star is None:
        return None
    return math.sqrt(max(d_star, 0.0) / setup.sigma)
