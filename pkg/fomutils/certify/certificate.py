import logging
from typing import Dict, List, Optional, Union

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..methods import RELATION_OF, RunTrace
from ..oracle import OptimumInfo, Problem, true_value
from .rates import RateEnvelope, check_averaged_value, check_boundedness, check_rate, envelope_for
from .relations import (
    Check, check_averaging, check_bound, check_dual_norms, check_error_term, check_feasibility, check_three_point,
    check_monotone, check_relation, check_step_conditions, compute_Ck, relation_lhs, replay_trace, structured,
)

l = logging.getLogger(__name__)

AUTO = "auto"


class Certificate:
    """
    Everything certify_trace measured on one trace.

    :ivar name:         The run name.
    :ivar method:       The run's method.
    :ivar relation:     Which relation the residuals refer to.
    :ivar C_k:          Recomputed error terms.
    :ivar residual:     min psi_k + C_k - LHS_k.
    :ivar bound:        (beta_k l_d(z_k; x*) + C_k) / S_k, or None without an optimum.
    :ivar gap:          f(xhat_k) - f*, or None without f*.
    :ivar envelope:     The rate envelope values, or None when no envelope applies.
    :ivar checks:       name -> Check, in the order they ran.
    """

    __slots__ = ("name", "method", "relation", "C_k", "residual", "bound", "gap", "envelope", "envelope_kind",
                 "checks")

    def __init__(self, name, method, relation, C_k, residual, bound=None, gap=None, envelope=None,
                 envelope_kind=None, checks: Optional[Dict[str, Check]] = None):
        self.name = name
        self.method = method
        self.relation = relation
        self.C_k = np.asarray(C_k, dtype=float)
        self.residual = np.asarray(residual, dtype=float)
        self.bound = None if bound is None else np.asarray(bound, dtype=float)
        self.gap = None if gap is None else np.asarray(gap, dtype=float)
        self.envelope = None if envelope is None else np.asarray(envelope, dtype=float)
        self.envelope_kind = envelope_kind
        self.checks = checks or {}

    def __repr__(self):
        return f"<Certificate {self.name} ({self.method}) {'passed' if self.passed else 'FAILED'}: {len(self)} iterations>"

    def __len__(self):
        return len(self.C_k)

    @property
    def passed(self) -> bool:
        return all(check.ok for check in self.checks.values())

    @property
    def failures(self) -> List[str]:
        return [name for name, check in self.checks.items() if not check.ok]

    @property
    def passes(self) -> np.ndarray:
        """
        Per-k flags: every per-iteration check holds at k.
        """
        flags = np.ones(len(self), dtype=bool)
        for check in self.checks.values():
            if len(check) == len(self):
                flags &= check.passes
        return flags

    def final(self, name: str) -> Optional[float]:
        values = getattr(self, name)
        if values is None or not len(values):
            return None
        return float(values[-1])

    def rows(self):
        """
        (k, gap, bound, envelope, residual, pass) per iteration, None where a column is unavailable.
        """
        passes = self.passes

        def at(values, k):
            return None if values is None else float(values[k])

        for k in range(len(self)):
            yield k, at(self.gap, k), at(self.bound, k), at(self.envelope, k), float(self.residual[k]), bool(passes[k])

    def to_dict(self) -> Dict:
        def listed(values):
            return None if values is None else [float(v) for v in values]

        return {
            "name": self.name,
            "method": self.method,
            "relation": self.relation,
            "envelope_kind": self.envelope_kind,
            "passed": self.passed,
            "iterations": len(self),
            "checks": [check.to_dict() for check in self.checks.values()],
            "per_k": {
                "C_k": listed(self.C_k),
                "residual": listed(self.residual),
                "bound": listed(self.bound),
                "gap": listed(self.gap),
                "envelope": listed(self.envelope),
                "pass": [bool(p) for p in self.passes],
            },
        }


def _true_values(trace: RunTrace, problem: Optional[Problem]):
    if problem is None:
        return trace.column("f_x"), trace.column("f_z"), trace.column("f_xhat")
    return (
        np.array([true_value(problem, r.x_k) for r in trace.records]),
        np.array([true_value(problem, r.z_k) for r in trace.records]),
        np.array([true_value(problem, r.xhat_k) for r in trace.records]),
    )


def certify_trace(trace: RunTrace, optimum: Optional[OptimumInfo] = None,
                  envelope: Union[str, RateEnvelope, None] = AUTO, tolerances: Tolerances = DEFAULT_TOLERANCES,
                  problem: Optional[Problem] = None) -> Certificate:
    """
    Run every applicable check on a trace. The trace is not modified.

    :param optimum:     x*, f* or D. Without f* the bound, rate and boundedness checks are skipped.
    :param envelope:    "auto" picks the envelope matching the trace's schedule; None skips the rate
                        check. An explicit envelope that does not match the schedule raises ConfigError.
    :param problem:     When given, objective values are recomputed instead of read from the records.
    """
    name = trace.config.name
    which = RELATION_OF[trace.method]
    f_x, f_z, f_xhat = _true_values(trace, problem)

    C_k = compute_Ck(trace)
    checks: Dict[str, Check] = {}

    def add(check: Check):
        checks[check.name] = check

    add(check_monotone(trace, tolerances))
    add(check_feasibility(trace, tolerances))
    add(check_dual_norms(trace, tolerances))
    add(check_error_term(trace, C_k, tolerances))
    add(check_averaging(trace, tolerances))
    add(replay_trace(trace, tolerances))

    lhs = relation_lhs(trace, which, f_x=f_x, f_z=f_z, f_xhat=f_xhat)
    relation = check_relation(trace, C_k, which, tolerances, lhs=lhs)
    add(relation)
    if structured(trace):
        add(check_step_conditions(trace, tolerances=tolerances))
    add(check_three_point(trace, tolerances))

    bounds = gaps = values = None
    kind = None
    if optimum is not None and optimum.known:
        bounds, gaps, bound_check = check_bound(trace, C_k, optimum, tolerances, f_xhat=f_xhat)
        add(bound_check)

        if envelope == AUTO:
            envelope = envelope_for(trace)
        if envelope is not None:
            kind = envelope.kind
            values, rate_check = check_rate(trace, envelope, optimum, tolerances, f_xhat=f_xhat)
            add(rate_check)
            averaged = check_averaged_value(trace, envelope, optimum, tolerances, f_x=f_x)
            if len(averaged) or not len(trace):
                add(averaged)
        add(check_boundedness(trace, optimum, tolerances))
    elif optimum is not None:
        l.info("%s: %r is incomplete, skipping the bound checks", name, optimum)

    certificate = Certificate(name, trace.method, which, C_k, relation.values, bounds, gaps, values, kind, checks)
    if certificate.passed:
        l.info("%s: certificate passed over %d iterations", name, len(certificate))
    else:
        l.warning("%s: certificate failed checks %s", name, ", ".join(certificate.failures))
    return certificate
