import sys
import unittest

import numpy as np

from fomutils.certify import (
    FIELDS, R_HAT, RateEnvelope, certify_trace, compute_Ck_nonsmooth, compute_Ck_structured, corrupt_trace,
    step_ratios,
)
from fomutils.errors import ConfigError
from fomutils.methods import CGM, FGM, IterationRecord, RunConfig, RunTrace, run
from fomutils.oracle import OptimumInfo, generate, known_optimum
from fomutils.schedule import CLASSIC_SMOOTH, FAST_SMOOTH, Schedule
from fomutils.space import BOX, NO_COMPOSITE, SIMPLEX, FeasibleSet, ProxSetup


def run_preset(problem, setup, name, iters, optimum=None, **extra):
    config = RunConfig.from_dict({"preset": name, "max_iters": iters, **extra}, sigma=setup.sigma,
                                 lipschitz=problem.lipschitz)
    return run(problem, setup, config, optimum)


def synthetic(config, records, beta_init=1.0):
    return RunTrace(config, "synthetic", ProxSetup(2), NO_COMPOSITE, beta_init,
                    [IterationRecord(k=k, **fields) for k, fields in enumerate(records)])


class TestErrorTerms(unittest.TestCase):
    def test_nonsmooth(self):
        """
        Unit weights, unit subgradient norms and beta_{-1} = beta_0 = 1 give C_1 = 1.
        """
        trace = synthetic(RunConfig.from_dict({"preset": "dam"}), [
            {"lambda_k": 1.0, "beta_k": 1.0, "grad_dual_norm": 1.0},
            {"lambda_k": 1.0, "beta_k": 2.0, "grad_dual_norm": 1.0},
        ])
        assert np.allclose(compute_Ck_nonsmooth(trace), [0.5, 1.0])

    def test_structured(self):
        """
        The classical method accumulates lambda delta, the fast one S delta.
        """
        delta = 1e-3
        cgm = synthetic(RunConfig(CGM, Schedule(CLASSIC_SMOOTH, L=1.0)),
                        [{"lambda_k": 1.0, "delta": delta} for _ in range(5)])
        assert np.allclose(compute_Ck_structured(cgm), delta * np.arange(1, 6))

        fgm = synthetic(RunConfig(FGM, Schedule(FAST_SMOOTH, L=1.0)),
                        [{"lambda_k": (k + 1) / 2.0, "delta": delta} for k in range(5)])
        S = np.array([(k + 1) * (k + 2) / 4.0 for k in range(5)])
        assert np.allclose(compute_Ck_structured(fgm), delta * np.cumsum(S))
        with self.assertRaises(ValueError):
            compute_Ck_structured(fgm, method="subgrad_a")


class TestCertificates(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.pieces = generate("max_affine", 10, seed=0)
        cls.simplex = ProxSetup(10, FeasibleSet(SIMPLEX, 10))
        cls.pieces_optimum = known_optimum(cls.pieces, cls.simplex)
        cls.dam = run_preset(cls.pieces, cls.simplex, "dam", 300)

        cls.quadratic = generate("quadratic", 8, seed=1, condition=100.0)
        cls.free = ProxSetup(8)
        cls.quadratic_optimum = known_optimum(cls.quadratic, cls.free)

    def test_dam(self):
        """
        A dual averaging run on a max-type function passes every check with the simple-averages envelope.
        """
        certificate = certify_trace(self.dam, self.pieces_optimum)
        assert certificate.passed, certificate.failures
        assert certificate.relation == R_HAT
        assert certificate.envelope_kind == "simple_averages"
        assert len(certificate) == 300
        for name in ("monotone", "replay", "relation_R_hat", "three_point", "bound", "rate_simple_averages",
                     "averaged_value", "boundedness"):
            assert name in certificate.checks
        assert np.all(certificate.gap <= certificate.bound + 1e-9)
        assert np.all(certificate.residual >= -1e-9)

    def test_subgrad_b(self):
        """
        Double averaging is certified by relation R on the approximate solutions.
        """
        trace = run_preset(self.pieces, self.simplex, "double_averaging", 200)
        certificate = certify_trace(trace, self.pieces_optimum)
        assert certificate.passed, certificate.failures
        assert certificate.relation == "R"

    def test_fgm(self):
        """
        The fast gradient method passes with step ratios (k + 2) / (k + 1).
        """
        trace = run_preset(self.quadratic, self.free, "fgm_md", 200)
        certificate = certify_trace(trace, self.quadratic_optimum)
        assert certificate.passed, certificate.failures
        assert certificate.envelope_kind == "fgm"
        k = np.arange(200)
        assert np.allclose(step_ratios(trace), (k + 2) / (k + 1), rtol=1e-9)

    def test_tseng_ratios(self):
        """
        With the Tseng weights the fast step condition holds with equality.
        """
        trace = run_preset(self.quadratic, self.free, "tseng3", 100)
        assert np.allclose(step_ratios(trace), 1.0, rtol=0, atol=1e-8)
        assert certify_trace(trace, self.quadratic_optimum).passed

    def test_cgm_inexact(self):
        """
        With a delta-inexact oracle the classical method is certified with C_k = (k + 1) delta.
        """
        problem = generate("inexact_wrapper", 8, seed=2, base={"variant": "quadratic", "condition": 100.0}, delta=1e-3)
        optimum = known_optimum(problem, self.free)
        trace = run_preset(problem, self.free, "primal_gradient", 300, optimum)
        certificate = certify_trace(trace, optimum)
        assert certificate.passed, certificate.failures
        assert np.allclose(certificate.C_k, 1e-3 * np.arange(1, 301))

    def test_lasso_with_radius_bound(self):
        """
        A composite run on a box is certified against D >= d(x*) when only f* and D are given.
        """
        problem = generate("composite_lasso", 5, seed=3, weight=0.1)
        setup = ProxSetup(5, FeasibleSet(BOX, 5, lower=-1.0, upper=1.0))
        exact = known_optimum(problem, setup)
        optimum = OptimumInfo(f_star=exact.f_star, d_star_upper=2.5)
        trace = run_preset(problem, setup, "fgm_da", 150)
        certificate = certify_trace(trace, optimum)
        assert certificate.passed, certificate.failures

    def test_single_step(self):
        """
        One iteration already satisfies the relation.
        """
        trace = run_preset(self.pieces, self.simplex, "extended_mdm", 1)
        certificate = certify_trace(trace, self.pieces_optimum)
        assert len(certificate) == 1
        assert certificate.residual[0] >= -1e-9
        assert certificate.passed, certificate.failures

    def test_without_optimum(self):
        """
        Without f* only the trace-internal checks run.
        """
        certificate = certify_trace(self.dam)
        assert certificate.passed
        assert certificate.bound is None and certificate.gap is None
        assert "bound" not in certificate.checks

    def test_read_only_and_deterministic(self):
        """
        Certifying twice gives the same certificate and leaves the trace unchanged.
        """
        before = self.dam.to_dict()
        first = certify_trace(self.dam, self.pieces_optimum).to_dict()
        second = certify_trace(self.dam, self.pieces_optimum, problem=self.pieces).to_dict()
        assert first == second
        assert self.dam.to_dict() == before

    def test_mismatched_envelope(self):
        """
        An envelope from another parameter family is a configuration error.
        """
        with self.assertRaises(ConfigError):
            certify_trace(self.dam, self.pieces_optimum, envelope=RateEnvelope("cgm", L=1.0))
        with self.assertRaises(ConfigError):
            certify_trace(self.dam, self.pieces_optimum, envelope=RateEnvelope("simple_averages", gamma=2.0))


class TestMutations(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        problem = generate("max_affine", 6, seed=4)
        setup = ProxSetup(6, FeasibleSet(SIMPLEX, 6))
        cls.optimum = known_optimum(problem, setup)
        cls.trace = run_preset(problem, setup, "dam", 40)

    def test_every_field(self):
        """
        A single corrupted field at one iteration fails certification.
        """
        assert certify_trace(self.trace, self.optimum).passed
        rng = np.random.default_rng(0)
        for field in FIELDS:
            for k in (0, 5, 20):
                corrupted = corrupt_trace(self.trace, field, k, rng)
                assert not certify_trace(corrupted, self.optimum).passed, (field, k)

    def test_negative_weight(self):
        """
        A weight with its sign flipped is caught.
        """
        corrupted = self.trace.copy()
        corrupted.records[3].lambda_k = -corrupted.records[3].lambda_k
        certificate = certify_trace(corrupted, self.optimum)
        assert not certificate.passed
        assert not certificate.checks["monotone"].ok

    def test_original_untouched(self):
        """
        Corruption works on a copy and rejects unknown fields and indices.
        """
        before = self.trace.to_dict()
        corrupt_trace(self.trace, "z", 2)
        assert self.trace.to_dict() == before
        with self.assertRaises(ValueError):
            corrupt_trace(self.trace, "x", 2)
        with self.assertRaises(ValueError):
            corrupt_trace(self.trace, "z", 40)


if __name__ == "__main__":
    unittest.main(argv=sys.argv)
