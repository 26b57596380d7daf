#
# Auxiliary functions
#
# psi_k is kept in the closed form
#
#     psi_k(x) = constant + <linear, x> + psi_weight * Psi(x) + beta * d(x)
#
# which both update kinds preserve, because l_f(y; .) is affine (+ Psi) and l_d(z; .) is affine:
#
#   MD:  psi_{k+1} = min psi_k + lambda l_f(x_{k+1}; .) + beta_{k+1} d - beta_k l_d(z_k; .)
#   DA:  psi_{k+1} = psi_k     + lambda l_f(x_{k+1}; .) + (beta_{k+1} - beta_k) d
#

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .oracle import OracleReply, lower_model_value
from .schedule import DA, MD
from .space import (
    NO_COMPOSITE, CompositeTerm, ProxSetup, bregman, check_supported, d_grad, d_value, l_d, min_affine, prox_argmin,
)

l = logging.getLogger(__name__)

DEFAULT_SAMPLE_COUNT = 200


class AuxState:
    """
    One auxiliary function psi_k and its cached minimizer. States are values: updates return new
    states and never touch the old one.

    :ivar setup:        The ProxSetup the function lives on.
    :ivar psi:          The composite term Psi.
    :ivar constant:     c_k.
    :ivar linear:       s_k, the aggregated slope.
    :ivar psi_weight:   w_k >= 0, the coefficient of Psi.
    :ivar beta:         beta_k > 0.
    :ivar minimizer:    z_k = argmin_Q psi_k.
    :ivar min_value:    psi_k(z_k).
    :ivar step_index:   k >= -1.
    """

    __slots__ = ("setup", "psi", "constant", "linear", "psi_weight", "beta", "minimizer", "min_value", "step_index")

    def __init__(self, setup: ProxSetup, psi: CompositeTerm, constant: float, linear: np.ndarray, psi_weight: float,
                 beta: float, minimizer: np.ndarray, min_value: float, step_index: int):
        self.setup = setup
        self.psi = psi
        self.constant = float(constant)
        self.linear = linear
        self.psi_weight = float(psi_weight)
        self.beta = float(beta)
        self.minimizer = minimizer
        self.min_value = float(min_value)
        self.step_index = int(step_index)

    def __repr__(self):
        return f"<AuxState k={self.step_index} beta={self.beta!r} min={self.min_value!r}>"

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        value = self.constant + float(self.linear @ x) + self.beta * d_value(self.setup, x)
        if self.psi_weight:
            value += self.psi_weight * self.psi.value(x)
        return value

    def copy(self) -> "AuxState":
        return AuxState(self.setup, self.psi, self.constant, self.linear.copy(), self.psi_weight, self.beta,
                        self.minimizer.copy(), self.min_value, self.step_index)

    def to_dict(self) -> Dict:
        return {
            "constant": self.constant,
            "linear": self.linear.tolist(),
            "psi_weight": self.psi_weight,
            "beta": self.beta,
            "minimizer": self.minimizer.tolist(),
            "min_value": self.min_value,
            "step_index": self.step_index,
        }

    @classmethod
    def from_dict(cls, data: Dict, setup: ProxSetup, psi: Optional[CompositeTerm] = None) -> "AuxState":
        return cls(setup, psi or NO_COMPOSITE, data["constant"], np.asarray(data["linear"], dtype=float),
                   data["psi_weight"], data["beta"], np.asarray(data["minimizer"], dtype=float), data["min_value"],
                   data["step_index"])


def init(setup: ProxSetup, beta_init: float, psi: Optional[CompositeTerm] = None) -> AuxState:
    """
    psi_{-1} = beta_{-1} d, minimized at the prox-center with value 0.
    """
    if not beta_init > 0:
        raise ValueError(f"beta_{{-1}} must be positive, got {beta_init!r}")

    psi = psi or NO_COMPOSITE
    check_supported(setup, psi)
    return AuxState(setup, psi, 0.0, np.zeros(setup.dim), 0.0, beta_init, setup.x0.copy(), 0.0, -1)


def minimize(state: AuxState, setup: Optional[ProxSetup] = None, psi: Optional[CompositeTerm] = None) -> Tuple[np.ndarray, float]:
    setup = setup or state.setup
    psi = psi or state.psi
    z = prox_argmin(setup, state.linear, state.beta, psi, state.psi_weight)
    value = state.constant + float(state.linear @ z) + state.beta * d_value(setup, z)
    if state.psi_weight:
        value += state.psi_weight * psi.value(z)
    return z, value


def _check_update(state: AuxState, reply: OracleReply, x_next, lambda_next, beta_next):
    if not lambda_next > 0:
        raise ValueError(f"lambda must be positive, got {lambda_next!r}")
    if not beta_next >= state.beta:
        raise ValueError(f"beta must be non-decreasing: {beta_next!r} < {state.beta!r}")
    x_next = np.asarray(x_next, dtype=float)
    if x_next.shape != (state.setup.dim,) or reply.slope.shape != (state.setup.dim,):
        raise ValueError(f"update vectors must have dimension {state.setup.dim}")
    return x_next


def _finish(state: AuxState, constant, linear, psi_weight, beta) -> AuxState:
    new = AuxState(state.setup, state.psi, constant, linear, psi_weight, beta, state.minimizer, 0.0,
                   state.step_index + 1)
    new.minimizer, new.min_value = minimize(new)
    return new


def update_md(state: AuxState, reply: OracleReply, x_next, lambda_next: float, beta_next: float) -> AuxState:
    """
    Extended mirror-descent update. Only the newest linearization survives; the previous model
    enters through min psi_k and the linearization of d at z_k.
    """
    x_next = _check_update(state, reply, x_next, lambda_next, beta_next)
    setup = state.setup
    z = state.minimizer
    grad_z = d_grad(setup, z)

    constant = (
        state.min_value
        + lambda_next * (reply.value - float(reply.slope @ x_next))
        - state.beta * (d_value(setup, z) - float(grad_z @ z))
    )
    linear = lambda_next * reply.slope - state.beta * grad_z
    psi_weight = lambda_next if reply.has_composite else 0.0
    return _finish(state, constant, linear, psi_weight, beta_next)


def update_da(state: AuxState, reply: OracleReply, x_next, lambda_next: float, beta_next: float) -> AuxState:
    """
    Dual-averaging update: every linearization is accumulated.
    """
    x_next = _check_update(state, reply, x_next, lambda_next, beta_next)
    constant = state.constant + lambda_next * (reply.value - float(reply.slope @ x_next))
    linear = state.linear + lambda_next * reply.slope
    psi_weight = state.psi_weight + (lambda_next if reply.has_composite else 0.0)
    return _finish(state, constant, linear, psi_weight, beta_next)


def update(state: AuxState, model: str, reply: OracleReply, x_next, lambda_next: float, beta_next: float) -> AuxState:
    if model == MD:
        return update_md(state, reply, x_next, lambda_next, beta_next)
    if model == DA:
        return update_da(state, reply, x_next, lambda_next, beta_next)
    raise ValueError(f"unknown model choice {model!r}")


#
# Property checks
#

class PropertyReport:
    """
    Residuals of the three auxiliary-function conditions over a run.

    :ivar init_residual:    max(|min psi_{-1}|, ||z_{-1} - x0||_inf), condition (i).
    :ivar step_residuals:   Per step k+1, the smallest sampled value of psi_{k+1}(x) minus the lower model, condition (ii).
    :ivar min_residuals:    Per k, the right side minimum minus min psi_k, condition (iii).
    :ivar sampled:          Per k, whether condition (iii) was only checked on samples (unbounded Q).
    :ivar failures:         Human readable failure lines.
    """

    __slots__ = ("init_residual", "step_residuals", "min_residuals", "sampled", "failures")

    def __init__(self):
        self.init_residual = 0.0
        self.step_residuals: List[float] = []
        self.min_residuals: List[float] = []
        self.sampled: List[bool] = []
        self.failures: List[str] = []

    def __repr__(self):
        return f"<PropertyReport steps={len(self.step_residuals)} failures={len(self.failures)}>"

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "init_residual": self.init_residual,
            "step_residuals": list(self.step_residuals),
            "min_residuals": list(self.min_residuals),
            "sampled": list(self.sampled),
            "failures": list(self.failures),
        }


def check_property(states: Sequence[AuxState], setup: ProxSetup, psi: Optional[CompositeTerm],
                   replies: Sequence[OracleReply], lambdas: Sequence[float], betas: Sequence[float],
                   sample_count=DEFAULT_SAMPLE_COUNT, seed=0, tolerances: Tolerances = DEFAULT_TOLERANCES) -> PropertyReport:
    """
    Check the three auxiliary-function conditions on a run built by any mix of updates.

    :param states:      psi_{-1}, psi_0, ..., psi_K.
    :param replies:     The oracle replies used for psi_0..psi_K (reply.point is x_k).
    :param lambdas:     lambda_0..lambda_K.
    :param betas:       beta_{-1}..beta_K.
    :param sample_count: Feasible points sampled per step for condition (ii) and the unbounded case of (iii).
    """
    psi = psi or NO_COMPOSITE
    report = PropertyReport()
    if len(states) != len(replies) + 1 or len(lambdas) != len(replies) or len(betas) != len(states):
        raise ValueError("check_property needs K+2 states and betas, K+1 replies and lambdas")

    rng = np.random.default_rng(seed)
    first = states[0]
    report.init_residual = max(abs(first.min_value), float(np.max(np.abs(first.minimizer - setup.x0))))
    if report.init_residual > tolerances.identity:
        report.failures.append(f"(i) psi_-1 has min {first.min_value!r} or z_-1 away from x0")

    agg_const = 0.0
    agg_linear = np.zeros(setup.dim)
    agg_psi = 0.0
    for i, reply in enumerate(replies):
        prev, cur = states[i], states[i + 1]
        lam, beta_prev, beta_cur = lambdas[i], betas[i], betas[i + 1]
        x_i = reply.point
        samples = setup.set.sample(rng, sample_count, around=cur.minimizer)

        # (ii) psi_{k+1}(x) >= min psi_k + lambda l_f(x_{k+1}; x) + beta_{k+1} d(x) - beta_k l_d(z_k; x)
        worst = np.inf
        for x in samples:
            lower = (
                prev.min_value
                + lam * lower_model_value(reply, x_i, x, psi)
                + beta_cur * d_value(setup, x)
                - beta_prev * l_d(setup, prev.minimizer, x)
            )
            gap = cur.evaluate(x) - lower
            worst = min(worst, gap / max(1.0, abs(lower)))
        report.step_residuals.append(worst)
        if worst < -tolerances.residual_abs:
            report.failures.append(f"(ii) step {i}: residual {worst!r}")

        # (iii) min psi_k <= min_Q sum_i lambda_i l_f(x_i; x) + beta_k l_d(z_k; x)
        agg_const += lam * (reply.value - float(reply.slope @ x_i))
        agg_linear = agg_linear + lam * reply.slope
        if reply.has_composite:
            agg_psi += lam

        grad_z = d_grad(setup, cur.minimizer)
        const = agg_const + beta_cur * (d_value(setup, cur.minimizer) - float(grad_z @ cur.minimizer))
        slope = agg_linear + beta_cur * grad_z
        exact = min_affine(setup, slope, l1=agg_psi * psi.l1_weight)
        if exact is not None:
            rhs = const + exact[0]
            report.sampled.append(False)
        else:
            values = const + samples @ slope + agg_psi * psi.l1_weight * np.sum(np.abs(samples), axis=1)
            rhs = float(np.min(values))
            report.sampled.append(True)

        residual = rhs - cur.min_value
        report.min_residuals.append(residual)
        if residual < -tolerances.relation_slack(cur.min_value, rhs):
            report.failures.append(f"(iii) k={i}: min psi_k exceeds the linearized minimum by {-residual!r}")

    return report


def strong_convexity_gap(state: AuxState, x) -> float:
    """
    psi_k(x) - min psi_k - beta_k xi(z_k, x); nonnegative for every feasible x.
    """
    return state.evaluate(x) - state.min_value - state.beta * bregman(state.setup, state.minimizer, x)


def mdm_identity_gap(state_prev: AuxState, state_next: AuxState, reply: OracleReply, lam: float, x) -> float:
    """
    With beta held fixed and the test point equal to z_k, an MD step satisfies
    psi_{k+1}(x) - min psi_k = lambda l_f(x_{k+1}; x) + beta xi(x_{k+1}, x).
    """
    expected = lam * lower_model_value(reply, reply.point, x, state_prev.psi) + state_next.beta * bregman(
        state_prev.setup, reply.point, x
    )
    return state_next.evaluate(x) - state_prev.min_value - expected
