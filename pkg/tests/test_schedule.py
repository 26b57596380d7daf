import math
import sys
import unittest

import numpy as np

from fomutils.errors import ConfigError, OptimalPointDetected
from fomutils.schedule import (
    CLASSIC_SMOOTH, CUSTOM, DA, FAST_SMOOTH, MD, MDM_CLASSIC, PATTERN, PURE_DA, PURE_MD, SEEDED_RANDOM,
    SIMPLE_AVERAGES, TSENG_LAMBDA, WEIGHTED_AVERAGES, MixPolicy, Schedule, beta_hat, beta_hat_sequence, model_choice,
    next_params, tseng_lambda,
)


class TestBetaHat(unittest.TestCase):
    def test_first_values(self):
        """
        beta_hat_{-1} = beta_hat_0 = 1, then 2, 2.5, 2.9.
        """
        assert [beta_hat(k) for k in range(-1, 4)] == [1.0, 1.0, 2.0, 2.5, 2.9]
        with self.assertRaises(ValueError):
            beta_hat(-2)

    def test_identity(self):
        """
        beta_hat_k is the sum of the reciprocals beta_hat_{-1} .. beta_hat_{k-1}.
        """
        seq = beta_hat_sequence(10000)
        sums = np.cumsum(1.0 / seq[:-1])
        assert np.all(np.abs(seq[1:] - sums) <= 1e-9 * seq[1:])

    def test_bounds(self):
        """
        sqrt(2k + 1) <= beta_hat_k <= 1 / (1 + sqrt(3)) + sqrt(2k + 1).
        """
        k = np.arange(0, 20001)
        seq = beta_hat_sequence(20000)[1:]
        root = np.sqrt(2 * k + 1)
        assert np.all(root <= seq)
        assert np.all(seq <= 1.0 / (1.0 + math.sqrt(3.0)) + root)


class TestSchedules(unittest.TestCase):
    def test_simple_averages(self):
        """
        Simple averages with gamma = 1 at k = 2 give (1, 2.5).
        """
        assert next_params(Schedule(SIMPLE_AVERAGES, gamma=1.0), 2) == (1.0, 2.5)
        assert Schedule(SIMPLE_AVERAGES, gamma=2.0).beta_at(-1) == 2.0

    def test_tseng_lambda(self):
        """
        lambda_0 = 1, lambda_1 = golden ratio, lambda_2 ~ 2.148, and the partial sums equal lambda_k^2.
        """
        assert tseng_lambda(0) == 1.0
        assert abs(tseng_lambda(1) - (1 + math.sqrt(5)) / 2) < 1e-15
        assert abs(tseng_lambda(2) - 2.148) < 1e-3
        total = 0.0
        for k in range(200):
            lam = tseng_lambda(k)
            total += lam
            assert abs(total - lam * lam) <= 1e-8 * total

    def test_fast_smooth(self):
        """
        With L = 4 and sigma = 1, k = 3 gives (2, 4), and the step condition holds with slack (k+2)/(k+1).
        """
        schedule = Schedule(FAST_SMOOTH, L=4.0)
        assert next_params(schedule, 3) == (2.0, 4.0)
        total = 0.0
        for k in range(50):
            lam, _ = next_params(schedule, k)
            total += lam
            ratio = schedule.sigma * schedule.beta_at(k - 1) * total / (lam * lam)
            assert abs(ratio - 4.0 * (k + 2) / (k + 1)) < 1e-12

    def test_classic_smooth_sigma(self):
        """
        The smooth scalings are L / sigma once bound to a setup.
        """
        schedule = Schedule(CLASSIC_SMOOTH, L=3.0).bind(2.0)
        assert next_params(schedule, 0) == (1.0, 1.5)
        assert schedule.bind(2.0) is schedule

    def test_weighted_averages(self):
        """
        Weighted averages need the subgradient norm and stop on a zero subgradient.
        """
        schedule = Schedule(WEIGHTED_AVERAGES, rho=0.5)
        assert schedule.needs_gradient
        assert schedule.lambda_at(0, 4.0) == 0.25
        assert schedule.beta_at(0) == 2.0
        with self.assertRaises(ConfigError):
            schedule.lambda_at(0)
        with self.assertRaises(OptimalPointDetected):
            schedule.lambda_at(3, 0.0)

    def test_mdm_classic(self):
        """
        mdm_classic keeps beta at 1 and follows its weight rule.
        """
        schedule = Schedule(MDM_CLASSIC, rule="inv_sqrt", r=0.5)
        assert schedule.lambda_at(3) == 0.25
        assert schedule.beta_at(7) == 1.0
        assert schedule.horizon is None
        listed = Schedule(MDM_CLASSIC, lambdas=[1.0, 0.5])
        assert listed.horizon == 2
        with self.assertRaises(ConfigError):
            listed.lambda_at(2)

    def test_invalid(self):
        """
        Bad parameters and decreasing custom scalings are configuration errors.
        """
        with self.assertRaises(ConfigError):
            Schedule("geometric")
        with self.assertRaises(ConfigError):
            Schedule(SIMPLE_AVERAGES, gamma=-1.0)
        with self.assertRaises(ConfigError):
            Schedule(TSENG_LAMBDA)
        with self.assertRaises(ConfigError):
            Schedule(CUSTOM, lambdas=[1.0, 1.0], betas=[1.0, 2.0, 1.5])
        with self.assertRaises(ConfigError):
            Schedule(CUSTOM, lambdas=[1.0, 1.0], betas=[1.0, 2.0])
        with self.assertRaises(ConfigError):
            Schedule(CUSTOM, lambdas=[1.0, 0.0], betas=[1.0, 1.0, 1.0])
        with self.assertRaises(ConfigError):
            Schedule.from_dict({"gamma": 1.0})

    def test_custom(self):
        """
        Custom schedules index scalings from k = -1.
        """
        schedule = Schedule.from_dict({"kind": "custom", "lambdas": [1.0, 2.0], "betas": [1.0, 1.0, 3.0]})
        assert schedule.beta_at(-1) == 1.0
        assert next_params(schedule, 1) == (2.0, 3.0)
        assert schedule.horizon == 2
        assert Schedule.from_dict(schedule.to_dict()) == schedule


class TestMixPolicy(unittest.TestCase):
    def test_pure(self):
        assert model_choice(MixPolicy(PURE_MD), 5) == MD
        assert model_choice(MixPolicy(PURE_DA), 5) == DA
        assert model_choice(MixPolicy.from_dict(None), 0) == DA

    def test_pattern(self):
        """
        Patterns repeat with their own period.
        """
        policy = MixPolicy(PATTERN, pattern=["MD", "DA", "DA"])
        assert [model_choice(policy, k) for k in range(6)] == [MD, DA, DA, MD, DA, DA]
        with self.assertRaises(ConfigError):
            MixPolicy(PATTERN, pattern=[])
        with self.assertRaises(ConfigError):
            MixPolicy(PATTERN, pattern=["MD", "XX"])

    def test_seeded_random(self):
        """
        Seeded choices are reproducible, depend on the seed, and honor the extreme probabilities.
        """
        policy = MixPolicy(SEEDED_RANDOM, seed=11)
        first = [model_choice(policy, k) for k in range(100)]
        assert first == [model_choice(MixPolicy(SEEDED_RANDOM, seed=11), k) for k in range(100)]
        assert MD in first and DA in first
        assert first != [model_choice(MixPolicy(SEEDED_RANDOM, seed=12), k) for k in range(100)]
        assert all(model_choice(MixPolicy(SEEDED_RANDOM, p_md=1.0), k) == MD for k in range(20))
        with self.assertRaises(ConfigError):
            MixPolicy(SEEDED_RANDOM, p_md=1.5)


if __name__ == "__main__":
    unittest.main(argv=sys.argv)
