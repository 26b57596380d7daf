#
# Per-iteration checks computed from a recorded trace. Nothing here calls a driver: every
# quantity is rebuilt from the recorded weights, scalings, slopes and points.
#

import logging
import os
from typing import Dict, Optional, Sequence

import numpy as np

from .. import auxfunc
from ..config import DEFAULT_TOLERANCES, Tolerances
from ..methods import CGM, FGM, NONSMOOTH_METHODS, RELATION_OF, STRUCTURED_METHODS, SUBGRAD_A, SUBGRAD_B, RunTrace
from ..oracle import OptimumInfo, OracleReply
from ..space import PSI_L1, bregman, dual_norm, l_d

l = logging.getLogger(__name__)
_DEBUG = bool(os.getenv("DEBUG", False)) or False
if _DEBUG:
    l.setLevel(logging.DEBUG)


def toggle_debug():
    global _DEBUG
    _DEBUG = not _DEBUG
    l.setLevel(logging.DEBUG if _DEBUG else logging.INFO)


R = "R"
R_HAT = "R_hat"
R_HAT_PRIME = "R_hat_prime"
RELATIONS = (R, R_HAT, R_HAT_PRIME)


class Check:
    """
    The outcome of one named check over a trace.

    :ivar name:     Check name.
    :ivar values:   Per-k measured quantity (a residual, a deviation or a margin).
    :ivar passes:   Per-k pass flags.
    :ivar detail:   Free-form notes, e.g. why a check was skipped.
    """

    __slots__ = ("name", "values", "passes", "detail")

    def __init__(self, name: str, values, passes, detail: str = ""):
        self.name = name
        self.values = np.asarray(values, dtype=float)
        self.passes = np.asarray(passes, dtype=bool)
        self.detail = detail

    def __repr__(self):
        return f"<Check {self.name} {'ok' if self.ok else f'failed at k={self.first_failure}'}>"

    def __len__(self):
        return len(self.values)

    @property
    def ok(self) -> bool:
        return bool(np.all(self.passes))

    @property
    def first_failure(self) -> Optional[int]:
        bad = np.flatnonzero(~self.passes)
        return int(bad[0]) if bad.size else None

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "first_failure": self.first_failure,
            "worst": None if not len(self.values) else float(np.min(self.values)),
            "detail": self.detail,
        }


#
# Recomputed sequences
#

def weights(trace: RunTrace) -> np.ndarray:
    return trace.column("lambda_k")


def weight_sums(trace: RunTrace) -> np.ndarray:
    return np.cumsum(weights(trace))


def previous_betas(trace: RunTrace) -> np.ndarray:
    """
    beta_{k-1} for every recorded k, chained from beta_init and the recorded beta_k.
    """
    betas = trace.column("beta_k")
    return np.concatenate([[trace.beta_init], betas[:-1]]) if len(betas) else betas


def _require(trace: RunTrace, field: str):
    if any(getattr(r, field) is None for r in trace.records):
        raise ValueError(f"trace {trace.config.name} lacks {field} values")


def compute_Ck_nonsmooth(trace: RunTrace) -> np.ndarray:
    """
    C_k = 1/(2 sigma) sum_{i<=k} lambda_i^2 ||g_i||_*^2 / beta_{i-1}.
    """
    _require(trace, "grad_dual_norm")
    lam = weights(trace)
    norms = trace.column("grad_dual_norm")
    return np.cumsum(lam * lam * norms * norms / (2.0 * trace.setup.sigma * previous_betas(trace)))


def compute_Ck_structured(trace: RunTrace, method: Optional[str] = None) -> np.ndarray:
    """
    C_k = sum lambda_i delta(x_i) for the classical method and sum S_i delta(x_i) for the fast one.
    """
    method = method or trace.method
    _require(trace, "delta")
    deltas = trace.column("delta")
    if method == CGM:
        return np.cumsum(weights(trace) * deltas)
    if method == FGM:
        return np.cumsum(weight_sums(trace) * deltas)
    raise ValueError(f"no structured error term for method {method!r}")


def compute_Ck(trace: RunTrace) -> np.ndarray:
    if trace.method in NONSMOOTH_METHODS:
        return compute_Ck_nonsmooth(trace)
    return compute_Ck_structured(trace)


def relation_lhs(trace: RunTrace, which: str, f_x=None, f_z=None, f_xhat=None) -> np.ndarray:
    """
    Left side of the relation: sum lambda_i f(x_i), S_k f(xhat_k) or sum lambda_i f(z_i).
    """
    lam = weights(trace)
    if which == R_HAT:
        f_x = trace.column("f_x") if f_x is None else f_x
        return np.cumsum(lam * f_x)
    if which == R_HAT_PRIME:
        f_z = trace.column("f_z") if f_z is None else f_z
        return np.cumsum(lam * f_z)
    if which == R:
        f_xhat = trace.column("f_xhat") if f_xhat is None else f_xhat
        return weight_sums(trace) * f_xhat
    raise ValueError(f"unknown relation {which!r}")


#
# Checks
#

def check_relation(trace: RunTrace, C_k: Sequence[float], which: Optional[str] = None,
                   tolerances: Tolerances = DEFAULT_TOLERANCES, lhs: Optional[np.ndarray] = None) -> Check:
    """
    residual_k = min psi_k + C_k - LHS_k, passing when >= -(abs + rel * max(|min psi_k|, |LHS_k|)).

    :param which:   R, R_hat or R_hat_prime; defaults to the relation the trace's method is proven for.
    :param lhs:     Precomputed left sides, e.g. from recomputed objective values.
    """
    which = which or RELATION_OF[trace.method]
    if which == R_HAT and trace.method == SUBGRAD_B:
        l.warning("R_hat is not established for subgrad_b runs; checking it anyway")

    _require(trace, "min_psi")
    min_psi = trace.column("min_psi")
    lhs = relation_lhs(trace, which) if lhs is None else np.asarray(lhs, dtype=float)
    residuals = min_psi + np.asarray(C_k, dtype=float) - lhs
    passes = [res >= -tolerances.relation_slack(m, s) for res, m, s in zip(residuals, min_psi, lhs)]
    return Check(f"relation_{which}", residuals, passes)


def linearized_d(trace: RunTrace, x_star: np.ndarray) -> np.ndarray:
    """
    l_d(z_k; x*) per record, NaN where z_k lies off the prox-function domain.
    """
    values = []
    for r in trace.records:
        try:
            values.append(l_d(trace.setup, r.z_k, x_star))
        except ValueError:
            values.append(np.nan)
    return np.asarray(values, dtype=float)


def bound_values(trace: RunTrace, C_k: Sequence[float], optimum: OptimumInfo) -> np.ndarray:
    """
    (beta_k l_d(z_k; x*) + C_k) / S_k, or the D surrogate when only D >= d(x*) is known.
    """
    betas = trace.column("beta_k")
    S = weight_sums(trace)
    if optimum.x_star is not None:
        ld = linearized_d(trace, optimum.x_star)
    elif optimum.d_star_upper is not None:
        ld = np.full(len(trace), optimum.d_star_upper)
    else:
        raise ValueError("the bound needs x* or an upper bound D on d(x*)")
    return (betas * ld + np.asarray(C_k, dtype=float)) / S


def check_bound(trace: RunTrace, C_k: Sequence[float], optimum: OptimumInfo,
                tolerances: Tolerances = DEFAULT_TOLERANCES, f_xhat: Optional[np.ndarray] = None):
    """
    gap_k = f(xhat_k) - f* against the bound. Returns (bounds, gaps, Check on bound - gap).
    """
    if optimum.f_star is None:
        raise ValueError("the bound check needs f*")

    bounds = bound_values(trace, C_k, optimum)
    f_xhat = trace.column("f_xhat") if f_xhat is None else np.asarray(f_xhat, dtype=float)
    gaps = f_xhat - optimum.f_star
    margins = bounds - gaps
    passes = [m >= -tolerances.relation_slack(optimum.f_star, f, b) for m, f, b in zip(margins, f_xhat, bounds)]
    return bounds, gaps, Check("bound", margins, passes)


def step_ratios(trace: RunTrace, method: Optional[str] = None) -> np.ndarray:
    """
    Left side of the step condition divided by L(x_k): sigma beta_{k-1} / lambda_k for the
    classical method, sigma beta_{k-1} S_k / lambda_k^2 for the fast one.
    """
    method = method or trace.method
    _require(trace, "lipschitz")
    lam = weights(trace)
    lhs = trace.setup.sigma * previous_betas(trace) / lam
    if method == FGM:
        lhs = lhs * weight_sums(trace) / lam
    elif method != CGM:
        raise ValueError(f"step conditions apply to structured methods, not {method!r}")
    return lhs / trace.column("lipschitz")


def check_step_conditions(trace: RunTrace, method: Optional[str] = None,
                          tolerances: Tolerances = DEFAULT_TOLERANCES) -> Check:
    ratios = step_ratios(trace, method)
    return Check("step_conditions", ratios, ratios >= 1.0 - tolerances.step_rel)


def check_three_point(trace: RunTrace, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Check:
    """
    lambda <g, x - z> + beta xi(z, x) + lambda^2 ||g||_*^2 / (2 sigma beta) >= 0, evaluated with
    (lambda_k, g_k, beta_{k-1}, z_{k-1}) and x = z_k. The inequality holds for any x, so every
    record gives one sample.
    """
    setup = trace.setup
    betas = previous_betas(trace)
    z_prev = setup.x0
    values, passes = [], []
    for record, beta in zip(trace.records, betas):
        lam, g, x = record.lambda_k, record.slope, record.z_k
        gnorm = dual_norm(setup, g)
        linear = lam * float(g @ (x - z_prev))
        try:
            prox = beta * bregman(setup, z_prev, x)
        except ValueError:
            # z off the prox-function domain
            prox = np.nan
        slack = lam * lam * gnorm * gnorm / (2.0 * setup.sigma * beta)
        value = linear + prox + slack
        values.append(value)
        passes.append(value >= -tolerances.relation_slack(linear, prox, slack))
        z_prev = record.z_k
    return Check("three_point", values, passes)


def check_monotone(trace: RunTrace, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Check:
    """
    lambda_k > 0, beta_k >= beta_{k-1} (chained from beta_init), the recorded beta_{k-1} matches
    the chain, and S_k = S_{k-1} + lambda_k.
    """
    lam = weights(trace)
    betas = trace.column("beta_k")
    chain = previous_betas(trace)
    recorded_prev = trace.column("beta_prev")
    recorded_S = trace.column("S_k")
    S = np.cumsum(lam)

    values, passes = [], []
    for k in range(len(trace)):
        s_dev = abs(recorded_S[k] - S[k]) / max(1.0, abs(S[k]))
        b_dev = abs(recorded_prev[k] - chain[k]) / max(1.0, abs(chain[k]))
        ok = lam[k] > 0 and betas[k] >= chain[k] and s_dev <= tolerances.identity and b_dev <= tolerances.identity
        values.append(-max(s_dev, b_dev))
        passes.append(ok)
    return Check("monotone", values, passes)


def check_feasibility(trace: RunTrace, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Check:
    feasible_set = trace.setup.set
    values = []
    for r in trace.records:
        values.append(-max(feasible_set.residual(r.x_k), feasible_set.residual(r.z_k),
                           feasible_set.residual(r.xhat_k)))
    values = np.asarray(values)
    return Check("feasibility", values, values >= -tolerances.feasibility)


def check_dual_norms(trace: RunTrace, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Check:
    """
    The recorded ||g_k||_* against the dual norm of the recorded slope.
    """
    values = []
    for r in trace.records:
        norm = dual_norm(trace.setup, r.slope)
        values.append(-abs(norm - r.grad_dual_norm) / max(1.0, norm))
    values = np.asarray(values)
    return Check("dual_norms", values, values >= -tolerances.identity)


def check_error_term(trace: RunTrace, C_k: Sequence[float], tolerances: Tolerances = DEFAULT_TOLERANCES) -> Check:
    """
    The driver's running C_k against the recomputed one.
    """
    recorded = trace.column("C_k")
    C_k = np.asarray(C_k, dtype=float)
    values = -np.abs(recorded - C_k) / np.maximum(1.0, np.abs(C_k))
    return Check("error_term", values, values >= -tolerances.identity)


def _expected_points(trace: RunTrace):
    """
    Re-derive the test point and approximate solution of every record from the recorded z's and
    weights. Yields (k, x_expected, xhat_expected).
    """
    method = trace.method
    lam = weights(trace)
    S = np.cumsum(lam)
    weighted = np.cumsum(lam[:, None] * trace.vectors("x_k"), axis=0) if method == SUBGRAD_A and len(trace) else None

    z_prev = trace.setup.x0
    x_prev = xhat_prev = None
    for k, r in enumerate(trace.records):
        S_prev = S[k - 1] if k else 0.0
        if method in (SUBGRAD_A, CGM) or k == 0:
            x = z_prev
        elif method == SUBGRAD_B:
            x = (S_prev * x_prev + lam[k] * z_prev) / S[k]
        else:
            x = (S_prev * xhat_prev + lam[k] * z_prev) / S[k]

        if method == SUBGRAD_A:
            xhat = weighted[k] / S[k]
        elif method == SUBGRAD_B:
            xhat = r.x_k
        elif k == 0:
            xhat = r.z_k
        else:
            xhat = (S_prev * xhat_prev + lam[k] * r.z_k) / S[k]

        yield k, x, xhat
        z_prev, x_prev, xhat_prev = r.z_k, r.x_k, r.xhat_k


def check_averaging(trace: RunTrace, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Check:
    """
    Test points and approximate solutions against the method's averaging rules.
    """
    values, passes = [], []
    for k, x, xhat in _expected_points(trace):
        r = trace.records[k]
        scale = max(1.0, float(np.max(np.abs(x))), float(np.max(np.abs(xhat))))
        dev = max(float(np.max(np.abs(r.x_k - x))), float(np.max(np.abs(r.xhat_k - xhat)))) / scale
        values.append(-dev)
        passes.append(dev <= tolerances.identity)
    return Check("averaging", values, passes)


def replay_trace(trace: RunTrace, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Check:
    """
    Rebuild psi_k from the recorded (x_k, oracle value, g_k, lambda_k, beta_k, model) and compare
    the rebuilt minimizer and minimum with the recorded z_k and min psi_k.
    """
    composite = trace.composite.kind == PSI_L1
    state = auxfunc.init(trace.setup, trace.beta_init, trace.composite)
    values, passes = [], []
    for r in trace.records:
        reply = OracleReply(r.x_k, r.oracle_value, r.slope, lipschitz=r.lipschitz, delta=r.delta or 0.0,
                            has_composite=composite)
        try:
            state = auxfunc.update(state, r.model, reply, r.x_k, r.lambda_k, r.beta_k)
        except ValueError as ex:
            l.debug("replay stopped at k=%d: %s", r.k, ex)
            values.extend([-np.inf] * (len(trace) - len(values)))
            passes.extend([False] * (len(trace) - len(passes)))
            return Check("replay", values, passes, detail=str(ex))

        z_dev = float(np.max(np.abs(state.minimizer - r.z_k))) / max(1.0, float(np.max(np.abs(r.z_k))))
        psi_dev = abs(state.min_value - r.min_psi) / max(1.0, abs(r.min_psi))
        dev = max(z_dev, psi_dev)
        values.append(-dev)
        passes.append(dev <= tolerances.replay)
    return Check("replay", values, passes)


def structured(trace: RunTrace) -> bool:
    return trace.method in STRUCTURED_METHODS
