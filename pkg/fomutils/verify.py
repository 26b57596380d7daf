#
# Verification suites behind `fomutils verify`. Each suite builds seeded instances, runs the
# drivers or the building blocks directly, and returns a list of named outcomes.
#

import logging
import time
from typing import Callable, Dict, List, Optional

import numpy as np

from . import auxfunc
from .certify import (
    SIMPLE_OPTIMAL, WEIGHTED_OPTIMAL, Check, FIELDS, RateEnvelope, certify_trace, check_boundedness, corrupt_trace,
    known_radius, optimal_gamma, optimal_rho,
)
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import SuiteTimeout
from .methods import (
    RunConfig, RunTrace, double_averaging, projected_subgradient, run, tseng_second_apg, tseng_third_apg,
)
from .oracle import (
    COMPOSITE_LASSO, INEXACT, L1_REGRESSION, MAX_AFFINE, QUADRATIC, OptimumInfo, Problem, generate, known_optimum,
    lower_model_value, problem_from_dict, problem_spec, query, true_value,
)
from .os_utils import time_limit
from .schedule import (
    SEEDED_RANDOM, SIMPLE_AVERAGES, WEIGHTED_AVERAGES, MixPolicy, Schedule, beta_hat_sequence, model_choice,
)
from .space import (
    BALL, BOX, ENTROPY, EUCLIDEAN, FREE, PSI_L1, SIMPLEX, CompositeTerm, FeasibleSet, ProxSetup, bregman, d_value,
    prox_argmin,
)

l = logging.getLogger(__name__)

SUITE_SECONDS = 60
REDUCED_ITERS = 200
EQUIVALENCE_TOL = 1e-10

DEFAULT = "default"


class SuiteContext:
    """
    Knobs shared by every suite.

    :ivar kmax:         Cap on iteration counts, or None.
    :ivar seed:         Seed of the generated instances.
    :ivar reduced:      Run at reduced sizes (the default suite).
    :ivar tolerances:   Numerical slack.
    """

    __slots__ = ("kmax", "seed", "reduced", "tolerances")

    def __init__(self, kmax: Optional[int] = None, seed=0, reduced=False, tolerances: Tolerances = DEFAULT_TOLERANCES):
        self.kmax = None if kmax is None else int(kmax)
        self.seed = int(seed)
        self.reduced = reduced
        self.tolerances = tolerances

    def iters(self, full: int, reduced: int = REDUCED_ITERS) -> int:
        n = reduced if self.reduced else full
        return max(1, min(n, self.kmax)) if self.kmax is not None else n

    def count(self, full: int, reduced: int) -> int:
        return reduced if self.reduced else full

    def rng(self, salt=0) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


def _outcome(name: str, ok, detail="", worst=None) -> Dict:
    return {"name": name, "ok": bool(ok), "worst": None if worst is None else float(worst), "detail": detail}


def _from_check(check: Check, prefix: str) -> Dict:
    data = check.to_dict()
    return _outcome(f"{prefix}/{check.name}", data["ok"], data["detail"], data["worst"])


def _certificate_outcomes(certificate, prefix: str) -> List[Dict]:
    return [_from_check(check, prefix) for check in certificate.checks.values()]


def _run(problem: Problem, setup: ProxSetup, preset_name: str, iters: int, schedule: Optional[Dict] = None,
         optimum: Optional[OptimumInfo] = None, tolerances: Tolerances = DEFAULT_TOLERANCES) -> RunTrace:
    data = {"preset": preset_name, "max_iters": iters}
    if schedule:
        data["schedule"] = schedule
    config = RunConfig.from_dict(data, sigma=setup.sigma, lipschitz=problem.lipschitz)
    return run(problem, setup, config, optimum, tolerances)


def _max_dev(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        return float("inf")
    return float(np.max(np.abs(a - b))) if a.size else 0.0


#
# Suites
#

def suite_space(ctx: SuiteContext) -> List[Dict]:
    """
    Bregman distances, strong convexity, and optimality of prox_argmin on every supported set.
    """
    n = 8
    rng = ctx.rng(1)
    tol = ctx.tolerances
    setups = [
        ProxSetup(n, FeasibleSet(FREE, n)),
        ProxSetup(n, FeasibleSet(BOX, n, lower=-1.0, upper=1.0), sigma=2.5),
        ProxSetup(n, FeasibleSet(BALL, n, radius=2.0)),
        ProxSetup(n, FeasibleSet(SIMPLEX, n)),
        ProxSetup(n, FeasibleSet(SIMPLEX, n), geometry=ENTROPY),
    ]
    composite = CompositeTerm(PSI_L1, 0.3)

    outcomes = []
    for setup in setups:
        worst_strong = worst_opt = worst_feas = np.inf
        for _ in range(ctx.count(100, 20)):
            s = 3.0 * rng.standard_normal(n)
            beta = rng.uniform(0.5, 2.0)
            z = prox_argmin(setup, s, beta)
            worst_feas = min(worst_feas, -setup.set.residual(z))
            base = float(s @ z) + beta * d_value(setup, z)
            for x in setup.set.sample(rng, 10, around=z):
                xi = bregman(setup, z, x)
                worst_strong = min(worst_strong, xi - 0.5 * setup.sigma * setup.norm(x - z) ** 2)
                # <s, x> + beta d(x) >= min + beta xi(z, x)
                value = float(s @ x) + beta * d_value(setup, x)
                margin = value - base - beta * xi
                worst_opt = min(worst_opt, margin + tol.relation_slack(value, base))

        outcomes.append(_outcome(f"{setup.ident}/strong_convexity", worst_strong >= -tol.identity, worst=worst_strong))
        outcomes.append(_outcome(f"{setup.ident}/prox_optimality", worst_opt >= 0, worst=worst_opt))
        outcomes.append(_outcome(f"{setup.ident}/prox_feasible", worst_feas >= -tol.feasibility, worst=worst_feas))

        if setup.set.kind in (FREE, BOX) and setup.geometry != ENTROPY:
            worst = np.inf
            for _ in range(ctx.count(50, 10)):
                s = 3.0 * rng.standard_normal(n)
                w = rng.uniform(0.1, 2.0)
                z = prox_argmin(setup, s, 1.0, composite, w)
                base = float(s @ z) + w * composite.value(z) + d_value(setup, z)
                for x in setup.set.sample(rng, 10, around=z):
                    value = float(s @ x) + w * composite.value(x) + d_value(setup, x)
                    worst = min(worst, value - base - bregman(setup, z, x) + tol.relation_slack(value, base))
            outcomes.append(_outcome(f"{setup.ident}/composite_prox_optimality", worst >= 0, worst=worst))
    return outcomes


def _oracle_instances(seed: int, n: int):
    box = ProxSetup(n, FeasibleSet(BOX, n, lower=-1.0, upper=1.0))
    free = ProxSetup(n, FeasibleSet(FREE, n))
    return [
        (generate(MAX_AFFINE, n, seed), ProxSetup(n, FeasibleSet(SIMPLEX, n))),
        (generate(L1_REGRESSION, n, seed), free),
        (generate(QUADRATIC, n, seed, condition=100.0), free),
        (generate(COMPOSITE_LASSO, n, seed), box),
        (generate(INEXACT, n, seed, base={"variant": QUADRATIC, "condition": 100.0}, delta=1e-3), free),
    ]


def suite_oracle(ctx: SuiteContext) -> List[Dict]:
    """
    Lower (and for structured problems upper) model inequalities, reference optima, and rebuilding
    problems from their specs.
    """
    n = 6
    rng = ctx.rng(2)
    tol = ctx.tolerances
    outcomes = []
    for problem, setup in _oracle_instances(ctx.seed, n):
        points = setup.set.sample(rng, ctx.count(40, 10))
        worst_lower = worst_upper = np.inf
        for x in points:
            reply = query(problem, x, setup)
            for y in points:
                f_y = true_value(problem, y)
                lower = lower_model_value(reply, x, y, problem.composite)
                worst_lower = min(worst_lower, f_y - lower + tol.relation_slack(f_y, lower))
                if problem.structured:
                    upper = lower + 0.5 * reply.lipschitz * float((y - x) @ (y - x)) + reply.delta
                    worst_upper = min(worst_upper, upper - f_y + tol.relation_slack(f_y, upper))
        outcomes.append(_outcome(f"{problem.variant}/lower_model", worst_lower >= 0, worst=worst_lower))
        if problem.structured:
            outcomes.append(_outcome(f"{problem.variant}/upper_model", worst_upper >= 0, worst=worst_upper))

        rebuilt = problem_from_dict(problem_spec(problem))
        same = all(true_value(rebuilt, x) == true_value(problem, x) for x in points[:5])
        outcomes.append(_outcome(f"{problem.variant}/spec_rebuild", same))

        optimum = known_optimum(problem, setup)
        if optimum.x_star is not None:
            values = np.array([true_value(problem, x) for x in points])
            margin = float(np.min(values - optimum.f_star)) + tol.relation_slack(optimum.f_star, *values)
            outcomes.append(_outcome(f"{problem.variant}/reference_optimum", margin >= 0, worst=margin))
    return outcomes


def _property_pairs(seed: int, n: int):
    box = ProxSetup(n, FeasibleSet(BOX, n, lower=-1.0, upper=1.0))
    return [
        (generate(MAX_AFFINE, n, seed), ProxSetup(n, FeasibleSet(SIMPLEX, n), geometry=ENTROPY)),
        (generate(QUADRATIC, n, seed, condition=100.0), box),
        (generate(COMPOSITE_LASSO, n, seed), box),
    ]


def suite_aux_property(ctx: SuiteContext) -> List[Dict]:
    """
    The auxiliary-function conditions under seeded random interleavings of MD and DA steps.
    """
    length = ctx.iters(30, 10)
    runs = ctx.count(50, 5)
    samples = ctx.count(auxfunc.DEFAULT_SAMPLE_COUNT, 50)
    outcomes = []
    for problem, setup in _property_pairs(ctx.seed, 6):
        schedule = Schedule(SIMPLE_AVERAGES, sigma=setup.sigma, gamma=1.0)
        failures, sampled, worst = [], False, np.inf
        for r in range(runs):
            mix = MixPolicy(SEEDED_RANDOM, seed=ctx.seed * 1000 + r)
            state = auxfunc.init(setup, schedule.beta_at(-1), problem.composite)
            states, replies, lambdas, betas = [state], [], [], [schedule.beta_at(-1)]
            for k in range(length):
                reply = query(problem, state.minimizer, setup)
                lam, beta = schedule.lambda_at(k), schedule.beta_at(k)
                state = auxfunc.update(state, model_choice(mix, k), reply, state.minimizer, lam, beta)
                states.append(state)
                replies.append(reply)
                lambdas.append(lam)
                betas.append(beta)

            report = auxfunc.check_property(states, setup, problem.composite, replies, lambdas, betas,
                                            sample_count=samples, seed=r, tolerances=ctx.tolerances)
            failures.extend(f"run {r}: {line}" for line in report.failures)
            sampled = sampled or any(report.sampled)
            worst = min([worst] + report.step_residuals + report.min_residuals)

        name = f"{problem.variant}/{setup.ident}"
        outcomes.append(_outcome(f"{name}/conditions", not failures, "; ".join(failures[:3]), worst))
        outcomes.append(_outcome(f"{name}/exact_minimum", not sampled, "sampled" if sampled else ""))
    return outcomes


def suite_beta_hat(ctx: SuiteContext) -> List[Dict]:
    """
    beta_hat_k = sum_{i=-1}^{k-1} 1 / beta_hat_i, and sqrt(2k + 1) <= beta_hat_k <= 1 / (1 + sqrt(3)) + sqrt(2k + 1).
    """
    k_bound = ctx.iters(10 ** 6, 10 ** 4)
    k_identity = min(k_bound, 10 ** 5)

    seq = beta_hat_sequence(k_bound)
    values = seq[1:]
    k = np.arange(k_bound + 1, dtype=float)
    root = np.sqrt(2.0 * k + 1.0)
    lower = float(np.min(values - root))
    upper = float(np.min(1.0 / (1.0 + np.sqrt(3.0)) + root - values))

    sums = np.cumsum(1.0 / seq[: k_identity + 1])
    identity = float(np.max(np.abs(values[: k_identity + 1] - sums) / values[: k_identity + 1]))
    return [
        _outcome("identity", identity <= 1e-9, f"k <= {k_identity}", -identity),
        _outcome("lower_bound", lower >= -ctx.tolerances.identity, f"k <= {k_bound}", lower),
        _outcome("upper_bound", upper >= -ctx.tolerances.identity, f"k <= {k_bound}", upper),
    ]


def suite_equivalence(ctx: SuiteContext) -> List[Dict]:
    """
    Driver/preset pairs against the classical recursions written out directly.
    """
    iters = ctx.iters(500)
    n = 10
    outcomes = []

    def compare(name, trace, expected: Dict[str, np.ndarray]):
        devs = [_max_dev(trace.vectors(f"{key}_k"), value) for key, value in expected.items()]
        dev = max(devs)
        outcomes.append(_outcome(name, dev <= EQUIVALENCE_TOL, f"{len(trace)} iterations", -dev))

    l1 = generate(L1_REGRESSION, n, ctx.seed)
    for setup in (ProxSetup(n, FeasibleSet(FREE, n)), ProxSetup(n, FeasibleSet(BOX, n, lower=-0.5, upper=0.5))):
        trace = _run(l1, setup, "mdm_classic", iters, schedule={"rule": "inv_sqrt", "r": 0.5})
        lambdas = [r.lambda_k for r in trace.records]
        compare(f"mdm_classic/{setup.ident}", trace, {"x": projected_subgradient(l1, setup, lambdas, beta=1.0)})

    pieces = generate(MAX_AFFINE, n, ctx.seed)
    for geometry in (EUCLIDEAN, ENTROPY):
        setup = ProxSetup(n, FeasibleSet(SIMPLEX, n), geometry=geometry)
        trace = _run(pieces, setup, "double_averaging", iters)
        schedule = trace.config.schedule
        expected = double_averaging(pieces, setup, [1.0] * len(trace), schedule.beta_at)
        compare(f"double_averaging/{setup.ident}", trace, {"x": expected})

    quadratic = generate(QUADRATIC, n, ctx.seed, condition=100.0)
    for setup in (ProxSetup(n, FeasibleSet(FREE, n)), ProxSetup(n, FeasibleSet(SIMPLEX, n), geometry=ENTROPY)):
        for preset_name, reference in (("tseng2", tseng_second_apg), ("tseng3", tseng_third_apg)):
            trace = _run(quadratic, setup, preset_name, iters)
            compare(f"{preset_name}/{setup.ident}", trace, reference(quadratic, setup, iters, quadratic.lipschitz))
    return outcomes


def _max_affine_instance(seed: int):
    n = 20
    problem = generate(MAX_AFFINE, n, seed, pieces=10)
    setup = ProxSetup(n, FeasibleSet(SIMPLEX, n))
    return problem, setup, known_optimum(problem, setup)


def suite_nonsmooth_rates(ctx: SuiteContext) -> List[Dict]:
    """
    Relations, bounds and simple-averages envelopes for the subgradient presets, then the
    optimal-constant envelopes with gamma and rho tuned to (M, R).
    """
    iters = ctx.iters(2000)
    problem, setup, optimum = _max_affine_instance(ctx.seed)
    outcomes = []
    for name in ("dam", "extended_mdm"):
        trace = _run(problem, setup, name, iters, optimum=optimum, tolerances=ctx.tolerances)
        outcomes.extend(_certificate_outcomes(certify_trace(trace, optimum, tolerances=ctx.tolerances), name))

    M = problem.subgradient_bound(setup)
    R = known_radius(optimum, setup)
    if not R:
        return outcomes + [_outcome("optimal_constants", False, "x* sits at the prox-center, R = 0")]

    gamma = optimal_gamma(M, R, setup.sigma)
    rho = optimal_rho(R, setup.sigma)
    tuned = (
        ("dam", {"kind": SIMPLE_AVERAGES, "gamma": gamma}, RateEnvelope(SIMPLE_OPTIMAL, M=M, R=R)),
        ("extended_mdm", {"kind": SIMPLE_AVERAGES, "gamma": gamma}, RateEnvelope(SIMPLE_OPTIMAL, M=M, R=R)),
        ("dam", {"kind": WEIGHTED_AVERAGES, "rho": rho}, RateEnvelope(WEIGHTED_OPTIMAL, M=M, R=R)),
    )
    for name, schedule, envelope in tuned:
        trace = _run(problem, setup, name, iters, schedule=schedule, optimum=optimum, tolerances=ctx.tolerances)
        certificate = certify_trace(trace, optimum, envelope=envelope, tolerances=ctx.tolerances)
        outcomes.extend(_certificate_outcomes(certificate, f"{name}_{envelope.kind}"))
    return outcomes


def suite_smooth_rates(ctx: SuiteContext) -> List[Dict]:
    """
    CGM and FGM envelopes on an ill-conditioned quadratic.
    """
    iters = ctx.iters(2000)
    n = 100 if not ctx.reduced else 30
    problem = generate(QUADRATIC, n, ctx.seed, condition=1e3)
    setup = ProxSetup(n, FeasibleSet(FREE, n))
    optimum = known_optimum(problem, setup)

    outcomes = []
    gaps = {}
    for name in ("primal_gradient", "dual_gradient", "fgm_md", "fgm_da"):
        trace = _run(problem, setup, name, iters, optimum=optimum, tolerances=ctx.tolerances)
        certificate = certify_trace(trace, optimum, tolerances=ctx.tolerances)
        outcomes.extend(_certificate_outcomes(certificate, name))
        gaps[name] = certificate.gap

    k = 1000
    if iters > k:
        cgm, fgm = gaps["primal_gradient"][k], gaps["fgm_md"][k]
        outcomes.append(_outcome("fgm_ahead_of_cgm", fgm * 10.0 <= cgm, f"gap at k={k}: fgm {fgm!r}, cgm {cgm!r}"))
    return outcomes


def _inexact_instance(seed: int, reduced: bool):
    n = 50 if not reduced else 20
    problem = generate(INEXACT, n, seed, base={"variant": QUADRATIC, "condition": 1e3}, delta=1e-3)
    setup = ProxSetup(n, FeasibleSet(FREE, n))
    return problem, setup, known_optimum(problem, setup)


def suite_inexact(ctx: SuiteContext) -> List[Dict]:
    """
    CGM and FGM with a delta-inexact oracle: bounds and envelopes including the delta terms.
    """
    problem, setup, optimum = _inexact_instance(ctx.seed, ctx.reduced)
    outcomes = []
    for name, iters in (("primal_gradient", ctx.iters(5000)), ("fgm_da", ctx.iters(2000))):
        trace = _run(problem, setup, name, iters, optimum=optimum, tolerances=ctx.tolerances)
        certificate = certify_trace(trace, optimum, tolerances=ctx.tolerances)
        outcomes.extend(_certificate_outcomes(certificate, name))
    return outcomes


def suite_boundedness(ctx: SuiteContext) -> List[Dict]:
    """
    Iterates of the subgradient presets and of the inexact structured runs stay in their balls around x*.
    """
    outcomes = []
    problem, setup, optimum = _max_affine_instance(ctx.seed)
    for name in ("dam", "extended_mdm", "double_averaging"):
        trace = _run(problem, setup, name, ctx.iters(2000), optimum=optimum, tolerances=ctx.tolerances)
        outcomes.append(_from_check(check_boundedness(trace, optimum, ctx.tolerances), name))

    problem, setup, optimum = _inexact_instance(ctx.seed, ctx.reduced)
    for name in ("primal_gradient", "fgm_md"):
        trace = _run(problem, setup, name, ctx.iters(2000), optimum=optimum, tolerances=ctx.tolerances)
        outcomes.append(_from_check(check_boundedness(trace, optimum, ctx.tolerances), name))
    return outcomes


def suite_mutation(ctx: SuiteContext) -> List[Dict]:
    """
    Seeded single-field corruptions of passing traces must each fail certification.
    """
    iters = ctx.iters(100, 40)
    problem, setup, optimum = _max_affine_instance(ctx.seed)
    quadratic = generate(QUADRATIC, 10, ctx.seed, condition=100.0)
    free = ProxSetup(10, FeasibleSet(FREE, 10))
    bases = [
        (_run(problem, setup, "dam", iters), optimum),
        (_run(quadratic, free, "fgm_da", iters), known_optimum(quadratic, free)),
    ]

    outcomes = []
    for trace, opt in bases:
        certificate = certify_trace(trace, opt, tolerances=ctx.tolerances)
        outcomes.append(_outcome(f"{trace.config.name}/baseline", certificate.passed, ", ".join(certificate.failures)))

    rng = ctx.rng(9)
    for i in range(ctx.count(20, 8)):
        trace, opt = bases[i % len(bases)]
        field = FIELDS[i % len(FIELDS)]
        k = int(rng.integers(len(trace)))
        corrupted = corrupt_trace(trace, field, k, rng)
        certificate = certify_trace(corrupted, opt, tolerances=ctx.tolerances)
        outcomes.append(_outcome(f"{trace.config.name}/{field}@{k}", not certificate.passed,
                                 ", ".join(certificate.failures) or "corruption not detected"))
    return outcomes


SUITES: Dict[str, Callable[[SuiteContext], List[Dict]]] = {
    "space": suite_space,
    "oracle": suite_oracle,
    "aux_property": suite_aux_property,
    "beta_hat": suite_beta_hat,
    "equivalence": suite_equivalence,
    "nonsmooth_rates": suite_nonsmooth_rates,
    "smooth_rates": suite_smooth_rates,
    "inexact": suite_inexact,
    "boundedness": suite_boundedness,
    "mutation": suite_mutation,
}
SUITE_NAMES = tuple(SUITES) + (DEFAULT,)


def run_suite(name: str, ctx: SuiteContext, seconds=SUITE_SECONDS) -> Dict:
    """
    {"passed", "checks", "seconds"} for one suite. A suite that raises or runs out of time fails.
    """
    suite = SUITES[name]
    start = time.perf_counter()
    try:
        with time_limit(seconds, name):
            checks = suite(ctx)
    except SuiteTimeout as ex:
        checks = [_outcome("timeout", False, str(ex))]
    except (ValueError, RuntimeError) as ex:
        l.exception("suite %s raised", name)
        checks = [_outcome("error", False, f"{type(ex).__name__}: {ex}")]

    elapsed = time.perf_counter() - start
    passed = bool(checks) and all(c["ok"] for c in checks)
    log = l.info if passed else l.warning
    log("suite %s %s in %.2fs (%d checks)", name, "passed" if passed else "FAILED", elapsed, len(checks))
    return {"passed": passed, "checks": checks, "seconds": elapsed}


def verify(suite: str = DEFAULT, kmax: Optional[int] = None, seed=0, tolerances: Tolerances = DEFAULT_TOLERANCES,
           seconds=SUITE_SECONDS) -> Dict[str, Dict]:
    """
    Run one suite, or every suite at reduced sizes for "default".
    """
    if suite not in SUITE_NAMES:
        raise ValueError(f"unknown suite {suite!r}, expected one of {SUITE_NAMES}")

    reduced = suite == DEFAULT
    names = list(SUITES) if reduced else [suite]
    ctx = SuiteContext(kmax=kmax, seed=seed, reduced=reduced, tolerances=tolerances)
    return {name: run_suite(name, ctx, seconds) for name in names}
