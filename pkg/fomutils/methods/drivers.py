#
# Method drivers
#
# All four methods share one loop. Record k holds the test point x_k, the oracle reply there,
# (lambda_k, beta_k), the model used to build psi_k, and z_k = argmin psi_k. The methods differ
# only in where the test point sits and how the approximate solution is averaged:
#
#   subgrad_a:  x_k = z_{k-1}                                   xhat_k = sum lambda_i x_i / S_k
#   subgrad_b:  x_k = (S_{k-1} x_{k-1} + lambda_k z_{k-1}) / S_k  xhat_k = x_k
#   cgm:        x_k = z_{k-1}                                   xhat_k = sum lambda_i z_i / S_k
#   fgm:        x_k = (S_{k-1} xhat_{k-1} + lambda_k z_{k-1}) / S_k  xhat_k = sum lambda_i z_i / S_k
#

import logging
import os
from typing import Optional

import numpy as np

from .. import auxfunc
from ..config import DEFAULT_TOLERANCES, Tolerances
from ..errors import ConfigError, OptimalPointDetected, StepConditionError
from ..oracle import OptimumInfo, Problem, problem_spec, query, true_value
from ..schedule import model_choice
from ..space import ProxSetup, dual_norm, l_d
from .trace import (
    CERTIFIED_GAP, CGM, FGM, MAX_ITERS, NONSMOOTH_METHODS, OPTIMAL_POINT, STRUCTURED_METHODS, SUBGRAD_A, SUBGRAD_B,
    IterationRecord, RunConfig, RunTrace,
)

l = logging.getLogger(__name__)
_DEBUG = bool(os.getenv("DEBUG", False)) or False
if _DEBUG:
    l.setLevel(logging.DEBUG)


def toggle_debug():
    global _DEBUG
    _DEBUG = not _DEBUG
    l.setLevel(logging.DEBUG if _DEBUG else logging.INFO)


# methods that must know lambda_k before the oracle is queried
_WEIGHT_FIRST = (SUBGRAD_B, FGM)


def check_pairing(problem: Problem, setup: ProxSetup, config: RunConfig):
    """
    Reject (problem, schedule, method) combinations no driver can run.
    """
    if problem.dim != setup.dim:
        raise ConfigError(f"problem dimension {problem.dim} does not match setup dimension {setup.dim}")

    method = config.method
    schedule = config.schedule
    if method in NONSMOOTH_METHODS and problem.composite.l1_weight:
        raise ConfigError(f"{method} needs an affine lower model; {problem.ident} carries a composite term")
    if method in STRUCTURED_METHODS and not problem.structured:
        raise ConfigError(f"{method} needs a structured problem with a Lipschitz constant; {problem.ident} has none")
    if method in _WEIGHT_FIRST and schedule.needs_gradient:
        raise ConfigError(f"{method} fixes lambda_k before querying the oracle, so {schedule.kind} cannot be used")
    if schedule.horizon is not None and schedule.horizon < config.max_iters:
        raise ConfigError(f"schedule {schedule.kind} feeds {schedule.horizon} iterations, {config.max_iters} requested")


class _Driver:
    """
    One run of the shared loop. Not reused across runs.
    """

    def __init__(self, problem: Problem, setup: ProxSetup, config: RunConfig, optimum: Optional[OptimumInfo] = None,
                 tolerances: Tolerances = DEFAULT_TOLERANCES):
        check_pairing(problem, setup, config)
        self.problem = problem
        self.setup = setup
        self.schedule = config.schedule.bind(setup.sigma)
        self.config = config.copy(schedule=self.schedule)
        self.method = config.method
        self.optimum = optimum
        self.tolerances = tolerances

        beta_init = self.schedule.beta_at(-1)
        self.state = auxfunc.init(setup, beta_init, problem.composite)
        self.trace = RunTrace(self.config, problem.ident, setup, problem.composite, beta_init,
                              problem=problem_spec(problem))

        self.S = 0.0
        self.C = 0.0
        self.x_prev = None
        self.xhat = None
        self.weighted_x = np.zeros(setup.dim)
        self.f_best = np.inf

    #
    # Test points and averages
    #

    def _test_point(self, k: int, lam: Optional[float], S_next: Optional[float]) -> np.ndarray:
        z_prev = self.state.minimizer
        if self.method in (SUBGRAD_A, CGM) or k == 0:
            return z_prev.copy()
        if self.method == SUBGRAD_B:
            return (self.S * self.x_prev + lam * z_prev) / S_next
        return (self.S * self.xhat + lam * z_prev) / S_next

    def _approximate(self, k: int, lam: float, S_next: float, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        if self.method == SUBGRAD_A:
            self.weighted_x = self.weighted_x + lam * x
            return self.weighted_x / S_next
        if self.method == SUBGRAD_B:
            return x.copy()
        if k == 0:
            return z.copy()
        return (self.S * self.xhat + lam * z) / S_next

    def _error_increment(self, lam: float, S_next: float, beta_prev: float, gnorm: float, delta: float) -> float:
        if self.method in NONSMOOTH_METHODS:
            return lam * lam * gnorm * gnorm / (2.0 * self.setup.sigma * beta_prev)
        if self.method == CGM:
            return lam * delta
        return S_next * delta

    def _check_step(self, k: int, lam: float, S_next: float, beta_prev: float, lipschitz: Optional[float]):
        if self.method not in STRUCTURED_METHODS:
            return
        if lipschitz is None:
            raise ConfigError(f"{self.method} got an oracle reply without L at k={k}")

        if self.method == CGM:
            lhs = self.setup.sigma * beta_prev / lam
        else:
            lhs = self.setup.sigma * beta_prev * S_next / (lam * lam)
        if lhs < lipschitz * (1.0 - self.tolerances.step_rel):
            raise StepConditionError(k, lhs, lipschitz, self.method)

    def _certified_bound(self, record: IterationRecord) -> Optional[float]:
        if self.optimum is None:
            return None
        if self.optimum.x_star is not None:
            ld = l_d(self.setup, record.z_k, self.optimum.x_star)
        elif self.optimum.d_star_upper is not None:
            ld = self.optimum.d_star_upper
        else:
            return None
        return (record.beta_k * ld + record.C_k) / record.S_k

    #
    # The loop
    #

    def _stop(self, reason: str, point=None):
        self.trace.termination = reason
        if point is not None:
            self.trace.terminal_point = np.asarray(point, dtype=float).copy()

    def step(self, k: int) -> bool:
        """
        Run iteration k. Returns False when the run ends early.
        """
        beta_prev = self.state.beta

        lam = S_next = None
        if self.method in _WEIGHT_FIRST:
            lam = self.schedule.lambda_at(k)
            S_next = self.S + lam

        x = self._test_point(k, lam, S_next)
        reply = query(self.problem, x, self.setup)
        gnorm = dual_norm(self.setup, reply.slope)

        if gnorm == 0 and self.method in NONSMOOTH_METHODS and self.config.termination.get("zero_subgradient"):
            l.warning("%s: zero subgradient at k=%d, stopping at an optimal point", self.config.name, k)
            self._stop(OPTIMAL_POINT, x)
            return False

        if lam is None:
            try:
                lam = self.schedule.lambda_at(k, gnorm)
            except OptimalPointDetected:
                l.warning("%s: zero subgradient at k=%d, stopping at an optimal point", self.config.name, k)
                self._stop(OPTIMAL_POINT, x)
                return False
            S_next = self.S + lam
        beta = self.schedule.beta_at(k)

        self._check_step(k, lam, S_next, beta_prev, reply.lipschitz)

        model = model_choice(self.config.mix, k)
        self.state = auxfunc.update(self.state, model, reply, x, lam, beta)
        z = self.state.minimizer
        xhat = self._approximate(k, lam, S_next, x, z)

        f_x = true_value(self.problem, x)
        self.f_best = min(self.f_best, f_x)
        self.C += self._error_increment(lam, S_next, beta_prev, gnorm, reply.delta)

        record = IterationRecord(
            k=k, x_k=x, z_k=z.copy(), xhat_k=xhat, lambda_k=lam, beta_k=beta, beta_prev=beta_prev, S_k=S_next,
            f_x=f_x, f_z=true_value(self.problem, z), f_xhat=true_value(self.problem, xhat), f_best=self.f_best,
            oracle_value=reply.value, slope=reply.slope.copy(), grad_dual_norm=gnorm, lipschitz=reply.lipschitz,
            delta=reply.delta, min_psi=self.state.min_value, C_k=self.C, model=model,
        )
        self.trace.records.append(record)
        self.S = S_next
        self.x_prev = x
        self.xhat = xhat

        if _DEBUG:
            l.debug("k=%d lambda=%r beta=%r f(xhat)=%r min_psi=%r", k, lam, beta, record.f_xhat, record.min_psi)

        gap_target = self.config.termination.get("gap")
        if gap_target is not None:
            bound = self._certified_bound(record)
            if bound is not None and bound <= gap_target:
                l.warning("%s: certified gap %r <= %r at k=%d, stopping", self.config.name, bound, gap_target, k)
                self._stop(CERTIFIED_GAP)
                return False
        return True

    def run(self) -> RunTrace:
        l.info("starting %s (%s, %s, %s) on %s/%s for %d iterations", self.config.name, self.method,
               self.schedule.kind, self.config.mix.kind, self.problem.ident, self.setup.ident, self.config.max_iters)

        self.trace.termination = MAX_ITERS
        for k in range(self.config.max_iters):
            if not self.step(k):
                break

        if self.trace.records:
            last = self.trace.records[-1]
            l.info("finished %s after %d iterations (%s): f(xhat)=%r", self.config.name, len(self.trace.records),
                   self.trace.termination, last.f_xhat)
        else:
            l.info("finished %s with no iterations (%s)", self.config.name, self.trace.termination)
        return self.trace


def run_subgradient_a(problem: Problem, setup: ProxSetup, config: RunConfig, optimum: Optional[OptimumInfo] = None,
                      tolerances: Tolerances = DEFAULT_TOLERANCES) -> RunTrace:
    """
    General subgradient method with test points at the previous minimizer and the running weighted
    average of test points as the approximate solution.
    """
    return _run_as(SUBGRAD_A, problem, setup, config, optimum, tolerances)


def run_subgradient_b(problem: Problem, setup: ProxSetup, config: RunConfig, optimum: Optional[OptimumInfo] = None,
                      tolerances: Tolerances = DEFAULT_TOLERANCES) -> RunTrace:
    """
    General subgradient method with test points at the weighted average of past minimizers. With
    pure DA this is the double averaging method.
    """
    return _run_as(SUBGRAD_B, problem, setup, config, optimum, tolerances)


def run_cgm(problem: Problem, setup: ProxSetup, config: RunConfig, optimum: Optional[OptimumInfo] = None,
            tolerances: Tolerances = DEFAULT_TOLERANCES) -> RunTrace:
    """
    Classical gradient method. Raises StepConditionError when sigma beta_{k-1} / lambda_k < L(x_k).
    """
    return _run_as(CGM, problem, setup, config, optimum, tolerances)


def run_fgm(problem: Problem, setup: ProxSetup, config: RunConfig, optimum: Optional[OptimumInfo] = None,
            tolerances: Tolerances = DEFAULT_TOLERANCES) -> RunTrace:
    """
    Fast gradient method. Raises StepConditionError when sigma beta_{k-1} S_k / lambda_k^2 < L(x_k).
    """
    return _run_as(FGM, problem, setup, config, optimum, tolerances)


def _run_as(method: str, problem, setup, config, optimum, tolerances) -> RunTrace:
    if config.method != method:
        raise ConfigError(f"run {config.name} is configured for {config.method}, not {method}")
    return _Driver(problem, setup, config, optimum, tolerances).run()


DRIVERS = {
    SUBGRAD_A: run_subgradient_a,
    SUBGRAD_B: run_subgradient_b,
    CGM: run_cgm,
    FGM: run_fgm,
}


def run(problem: Problem, setup: ProxSetup, config: RunConfig, optimum: Optional[OptimumInfo] = None,
        tolerances: Tolerances = DEFAULT_TOLERANCES) -> RunTrace:
    return DRIVERS[config.method](problem, setup, config, optimum, tolerances)
