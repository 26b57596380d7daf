import sys
import unittest

import numpy as np

from fomutils.errors import ConfigError, StepConditionError
from fomutils.methods import (
    CERTIFIED_GAP, CGM, FGM, MAX_ITERS, OPTIMAL_POINT, SUBGRAD_A, RunConfig, check_pairing, double_averaging, preset,
    projected_subgradient, run, run_cgm, tseng_second_apg, tseng_third_apg,
)
from fomutils.oracle import MaxAffine, Quadratic, generate, known_optimum, query
from fomutils.schedule import (
    CLASSIC_SMOOTH, MDM_CLASSIC, PURE_DA, TSENG_LAMBDA, WEIGHTED_AVERAGES, Schedule, model_choice,
)
from fomutils.space import BOX, ENTROPY, FREE, SIMPLEX, FeasibleSet, ProxSetup


def configured(data, problem, setup):
    return RunConfig.from_dict(data, sigma=setup.sigma, lipschitz=problem.lipschitz)


def run_preset(problem, setup, name, iters, **extra):
    return run(problem, setup, configured({"preset": name, "max_iters": iters, **extra}, problem, setup))


class TestRunConfig(unittest.TestCase):
    def test_presets(self):
        """
        Presets expand to their (method, mix, schedule) triples.
        """
        assert preset("tseng3") == {"method": FGM, "mix": PURE_DA, "schedule": TSENG_LAMBDA, "fixed_schedule": True}
        config = RunConfig.from_dict({"preset": "dam", "max_iters": 7})
        assert config.method == SUBGRAD_A and config.mix.kind == PURE_DA
        assert config.schedule.params["gamma"] == 1.0
        assert config.name == "dam" and config.max_iters == 7
        with self.assertRaises(ConfigError):
            preset("heavy_ball")

    def test_preset_conflicts(self):
        """
        A preset's fixed parts cannot be overridden.
        """
        with self.assertRaises(ConfigError):
            RunConfig.from_dict({"preset": "dam", "mix": {"policy": "pure_md"}})
        with self.assertRaises(ConfigError):
            RunConfig.from_dict({"preset": "tseng2", "schedule": {"kind": "fast_smooth"}}, lipschitz=1.0)
        with self.assertRaises(ConfigError):
            RunConfig.from_dict({"preset": "primal_gradient"})
        with self.assertRaises(ConfigError):
            RunConfig.from_dict({"preset": "dam", "max_iters": 0})
        with self.assertRaises(ConfigError):
            RunConfig.from_dict({"preset": "dam", "termination": {"patience": 3}})

    def test_pairing(self):
        """
        Problem, schedule and method combinations no driver can run are rejected.
        """
        lasso = generate("composite_lasso", 3, seed=0)
        pieces = generate("max_affine", 3, seed=0)
        quadratic = generate("quadratic", 3, seed=0)
        setup = ProxSetup(3)
        with self.assertRaises(ConfigError):
            check_pairing(lasso, setup, RunConfig.from_dict({"preset": "dam"}))
        with self.assertRaises(ConfigError):
            check_pairing(pieces, setup, RunConfig(CGM, Schedule(CLASSIC_SMOOTH, L=1.0)))
        with self.assertRaises(ConfigError):
            check_pairing(quadratic, setup, RunConfig(FGM, Schedule(WEIGHTED_AVERAGES, rho=1.0)))
        with self.assertRaises(ConfigError):
            check_pairing(pieces, setup, RunConfig(SUBGRAD_A, Schedule(MDM_CLASSIC, lambdas=[1.0, 1.0]), max_iters=5))
        with self.assertRaises(ConfigError):
            check_pairing(pieces, ProxSetup(4), RunConfig.from_dict({"preset": "dam"}))
        with self.assertRaises(ConfigError):
            run_cgm(pieces, setup, RunConfig.from_dict({"preset": "dam"}))


class TestDrivers(unittest.TestCase):
    def test_records(self):
        """
        Records are contiguous, weights sum to S_k, scalings never decrease, and the subgrad_a
        approximate solution is the weighted average of the test points.
        """
        problem = generate("max_affine", 6, seed=1)
        setup = ProxSetup(6, FeasibleSet(SIMPLEX, 6))
        trace = run_preset(problem, setup, "dam", 40)
        assert len(trace) == 40 and trace.termination == MAX_ITERS
        assert [r.k for r in trace.records] == list(range(40))

        lambdas = trace.column("lambda_k")
        assert np.allclose(trace.column("S_k"), np.cumsum(lambdas), rtol=1e-12)
        betas = np.concatenate([[trace.beta_init], trace.column("beta_k")])
        assert np.all(np.diff(betas) >= 0)

        xs = trace.vectors("x_k")
        expected = np.cumsum(lambdas[:, None] * xs, axis=0) / np.cumsum(lambdas)[:, None]
        assert np.allclose(trace.vectors("xhat_k"), expected, rtol=0, atol=1e-12)
        for r in trace.records:
            assert setup.set.residual(r.x_k) <= 1e-10 and setup.set.residual(r.z_k) <= 1e-10

    def test_mixed_policy(self):
        """
        Each record's model follows the seeded mix policy.
        """
        problem = generate("max_affine", 4, seed=2)
        setup = ProxSetup(4, FeasibleSet(SIMPLEX, 4), geometry=ENTROPY)
        config = configured({"method": "subgrad_a", "mix": {"policy": "seeded_random", "seed": 3},
                             "schedule": {"kind": "simple_averages"}, "max_iters": 30}, problem, setup)
        trace = run(problem, setup, config)
        assert [r.model for r in trace.records] == [model_choice(config.mix, k) for k in range(30)]

    def test_reproducible(self):
        """
        Identical inputs produce identical traces.
        """
        problem = generate("quadratic", 5, seed=3, condition=10.0)
        setup = ProxSetup(5)
        first = run_preset(problem, setup, "fgm_md", 20).to_dict()
        second = run_preset(problem, setup, "fgm_md", 20).to_dict()
        assert first == second

    def test_zero_subgradient(self):
        """
        A zero subgradient at x0 stops the run at an optimal point with no records.
        """
        problem = MaxAffine([[0.0, 0.0]], [1.0])
        setup = ProxSetup(2)
        trace = run_preset(problem, setup, "dam", 10, termination={"zero_subgradient": True})
        assert trace.termination == OPTIMAL_POINT and len(trace) == 0
        assert np.array_equal(trace.terminal_point, setup.x0)

        trace = run_preset(problem, setup, "dam", 10, schedule={"kind": "weighted_averages", "rho": 1.0})
        assert trace.termination == OPTIMAL_POINT and len(trace) == 0

    def test_certified_gap(self):
        """
        The gap termination stops once the certified bound reaches the target.
        """
        problem = generate("quadratic", 5, seed=4, condition=10.0)
        setup = ProxSetup(5)
        optimum = known_optimum(problem, setup)
        config = configured({"preset": "fgm_da", "max_iters": 5000, "termination": {"gap": 1e-3}}, problem, setup)
        trace = run(problem, setup, config, optimum)
        assert trace.termination == CERTIFIED_GAP
        assert len(trace) < 5000
        assert trace.records[-1].f_xhat - optimum.f_star <= 1e-3 + 1e-12

    def test_fgm_step_condition(self):
        """
        Understating L by half breaks the fast-gradient step condition at k = 1.
        """
        problem = Quadratic(np.diag([1.0, 0.5, 0.25]), [1.0, 1.0, 1.0])
        setup = ProxSetup(3)
        with self.assertRaises(StepConditionError) as ctx:
            run_preset(problem, setup, "fgm_md", 10, schedule={"kind": "fast_smooth", "L": 0.5})
        assert ctx.exception.k == 1

        with self.assertRaises(StepConditionError) as ctx:
            run_preset(problem, setup, "primal_gradient", 10, schedule={"kind": "classic_smooth", "L": 0.5})
        assert ctx.exception.k == 0


class TestEquivalences(unittest.TestCase):
    def test_projected_subgradient(self):
        """
        Pure MD with beta fixed at 1 on a Euclidean setup is projected subgradient descent.
        """
        problem = generate("l1_regression", 6, seed=0)
        for feasible_set in (FeasibleSet(FREE, 6), FeasibleSet(BOX, 6, lower=-0.5, upper=0.5)):
            setup = ProxSetup(6, feasible_set)
            trace = run_preset(problem, setup, "mdm_classic", 60, schedule={"rule": "inv_sqrt", "r": 0.5})
            expected = projected_subgradient(problem, setup, trace.column("lambda_k"), beta=1.0)
            assert np.max(np.abs(trace.vectors("x_k") - expected)) <= 1e-12

    def test_double_averaging(self):
        """
        subgrad_b with pure DA reproduces the double averaging recursion.
        """
        problem = generate("max_affine", 6, seed=1)
        for geometry in ("euclidean", "entropy"):
            setup = ProxSetup(6, FeasibleSet(SIMPLEX, 6), geometry=geometry)
            trace = run_preset(problem, setup, "double_averaging", 60)
            expected = double_averaging(problem, setup, [1.0] * len(trace), trace.config.schedule.beta_at)
            assert np.max(np.abs(trace.vectors("x_k") - expected)) <= 1e-10

    def test_tseng(self):
        """
        fgm with the Tseng weights reproduces the second (pure MD) and third (pure DA) methods.
        """
        problem = generate("quadratic", 6, seed=2, condition=100.0)
        for setup in (ProxSetup(6), ProxSetup(6, FeasibleSet(SIMPLEX, 6), geometry=ENTROPY)):
            for name, reference in (("tseng2", tseng_second_apg), ("tseng3", tseng_third_apg)):
                trace = run_preset(problem, setup, name, 80)
                expected = reference(problem, setup, 80, problem.lipschitz)
                for key in ("x", "z", "xhat"):
                    assert np.max(np.abs(trace.vectors(f"{key}_k") - expected[key])) <= 1e-10, (name, key)

    def test_gradient_descent(self):
        """
        The primal gradient method on free space is x_{k+1} = x_k - grad f(x_k) / L.
        """
        problem = generate("quadratic", 5, seed=5, condition=20.0)
        setup = ProxSetup(5)
        trace = run_preset(problem, setup, "primal_gradient", 50)
        x = setup.x0.copy()
        for record in trace.records:
            assert np.max(np.abs(record.x_k - x)) <= 1e-10
            x = x - query(problem, x).slope / problem.lipschitz


if __name__ == "__main__":
    unittest.main(argv=sys.argv)
