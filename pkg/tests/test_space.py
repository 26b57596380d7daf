import math
import sys
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fomutils.errors import ConfigError, DimensionError, InfeasiblePointError, UnsupportedSubproblemError
from fomutils.space import (
    BOX, ENTROPY, FREE, PSI_INDICATOR, PSI_L1, SIMPLEX, CompositeTerm, FeasibleSet, ProxSetup, bregman, d_grad,
    d_value, dual_norm, is_feasible, l_d, prox_argmin, project_simplex,
)


def euclidean(n=2, **kwargs):
    return ProxSetup(n, FeasibleSet(FREE, n), **kwargs)


def entropy(n=2):
    return ProxSetup(n, FeasibleSet(SIMPLEX, n), geometry=ENTROPY)


class TestProxFunction(unittest.TestCase):
    def test_d_value(self):
        """
        d vanishes at the prox-center, is ln n at a simplex vertex for the entropy, and half the
        squared distance for the Euclidean geometry.
        """
        setup = euclidean()
        assert d_value(setup, setup.x0) == 0.0
        assert d_value(setup, [3.0, 4.0]) == 12.5
        assert math.isclose(d_value(entropy(), [1.0, 0.0]), math.log(2.0), rel_tol=1e-12)

    def test_d_grad(self):
        """
        Gradients of both prox-functions at simple points.
        """
        setup = euclidean()
        assert np.array_equal(d_grad(setup, [3.0, 4.0]), [3.0, 4.0])
        assert not np.any(d_grad(setup, setup.x0))
        assert np.allclose(d_grad(entropy(), [0.5, 0.5]), 1.0 + math.log(0.5))

    def test_entropy_gradient_on_boundary(self):
        """
        The entropy is not differentiable where a coordinate vanishes.
        """
        with self.assertRaises(InfeasiblePointError):
            d_grad(entropy(), [1.0, 0.0])

    def test_points_outside_set(self):
        """
        d, its gradient, xi and l_d are only evaluated on the feasible set; rounding-level
        violations are accepted.
        """
        simplex = entropy()
        box = ProxSetup(2, FeasibleSet(BOX, 2, lower=0.0, upper=1.0))
        with self.assertRaises(InfeasiblePointError):
            d_value(simplex, [3.0, 3.0])
        with self.assertRaises(InfeasiblePointError):
            d_value(box, [5.0, 5.0])
        with self.assertRaises(InfeasiblePointError):
            d_grad(box, [0.5, 1.5])
        with self.assertRaises(InfeasiblePointError):
            bregman(box, [0.5, 0.5], [0.5, -0.5])
        with self.assertRaises(InfeasiblePointError):
            l_d(simplex, [0.5, 0.5], [0.9, 0.9])

        assert not is_feasible(box, [5.0, 5.0])
        assert is_feasible(simplex, [0.5, 0.5 + 1e-12], tol=1e-9)
        assert math.isclose(d_value(simplex, [0.5, 0.5 + 1e-12]), 0.0, abs_tol=1e-11)

    def test_bregman(self):
        """
        Half the squared distance in the Euclidean case, KL divergence for the entropy.
        """
        assert bregman(euclidean(), [1.0, 0.0], [0.0, 1.0]) == 1.0
        assert bregman(euclidean(), [0.3, -2.0], [0.3, -2.0]) == 0.0
        kl = 0.75 * math.log(1.5) + 0.25 * math.log(0.5)
        assert math.isclose(bregman(entropy(), [0.5, 0.5], [0.75, 0.25]), kl, rel_tol=1e-12)
        assert math.isclose(kl, 0.1308, abs_tol=1e-4)

    def test_linearization(self):
        """
        l_d(z; x) = d(x) - xi(z, x); at the uniform point the entropy linearization is zero on the simplex.
        """
        assert l_d(euclidean(), [1.0, 0.0], [0.0, 1.0]) == -0.5
        setup = entropy(3)
        rng = np.random.default_rng(0)
        for x in rng.dirichlet(np.ones(3), size=10):
            assert abs(l_d(setup, setup.x0, x)) < 1e-12

    def test_dual_norm(self):
        """
        l2 is self-dual; the entropy's l1 norm has the max norm as its dual.
        """
        assert dual_norm(euclidean(), [3.0, 4.0]) == 5.0
        assert dual_norm(entropy(), [3.0, -4.0]) == 4.0
        assert dual_norm(euclidean(), [0.0, 0.0]) == 0.0
        with self.assertRaises(DimensionError):
            dual_norm(euclidean(), [1.0, 2.0, 3.0])

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 5, elements=st.floats(-10, 10)), arrays(np.float64, 5, elements=st.floats(-10, 10)))
    def test_euclidean_strong_convexity(self, z, x):
        """
        xi(z, x) >= sigma / 2 ||x - z||^2 with equality for the Euclidean prox-function.
        """
        setup = euclidean(5, sigma=3.0)
        expected = 1.5 * float((x - z) @ (x - z))
        assert math.isclose(bregman(setup, z, x), expected, rel_tol=1e-12, abs_tol=1e-12)


class TestProxArgmin(unittest.TestCase):
    def test_zero_slope(self):
        """
        With s = 0 and no composite term the minimizer is the prox-center.
        """
        setup = euclidean(3, x0=[1.0, -1.0, 2.0])
        assert np.array_equal(prox_argmin(setup, np.zeros(3), 2.0), setup.x0)

    def test_entropy_softmax(self):
        """
        On the simplex with the entropy, x_i is proportional to exp(-s_i / beta), and no sampled point
        of the simplex does better.
        """
        setup = entropy(3)
        s = np.array([0.3, -1.2, 0.8])
        beta = 0.7
        z = prox_argmin(setup, s, beta)
        expected = np.exp(-s / beta)
        assert np.allclose(z, expected / expected.sum(), rtol=1e-12)

        best = float(s @ z) + beta * d_value(setup, z)
        rng = np.random.default_rng(1)
        for x in rng.dirichlet(np.ones(3), size=200):
            assert float(s @ x) + beta * d_value(setup, x) >= best - 1e-12

    def test_soft_threshold(self):
        """
        An l1 term on free space soft-thresholds the unconstrained minimizer.
        """
        setup = euclidean()
        z = prox_argmin(setup, np.array([-3.0, 0.5]), 1.0, CompositeTerm(PSI_L1, 1.0), 1.0)
        assert np.allclose(z, [2.0, 0.0])

    def test_box_with_l1(self):
        """
        On a box the soft-thresholded point is clipped.
        """
        setup = ProxSetup(2, FeasibleSet(BOX, 2, lower=-1.0, upper=1.0))
        z = prox_argmin(setup, np.array([-3.0, 0.5]), 1.0, CompositeTerm(PSI_L1, 1.0), 1.0)
        assert np.allclose(z, [1.0, 0.0])

    def test_unsupported(self):
        """
        No exact l1 prox exists on the simplex.
        """
        setup = ProxSetup(3, FeasibleSet(SIMPLEX, 3))
        with self.assertRaises(UnsupportedSubproblemError):
            prox_argmin(setup, np.ones(3), 1.0, CompositeTerm(PSI_L1, 1.0), 1.0)

    def test_indicator_absorbed(self):
        """
        The indicator term is already enforced by minimizing over Q: it has no weight, is zero on
        Q, and leaves the prox step a plain projection.
        """
        psi = CompositeTerm(PSI_INDICATOR, 5.0)
        assert psi.weight == 0.0 and psi.l1_weight == 0.0
        assert psi.value(np.array([0.2, 0.8])) == 0.0
        assert CompositeTerm.from_dict(psi.to_dict()) == psi

        setup = ProxSetup(3, FeasibleSet(SIMPLEX, 3))
        s = np.array([0.4, -2.0, 1.0])
        assert np.array_equal(prox_argmin(setup, s, 1.5, psi, 1.0), prox_argmin(setup, s, 1.5))

    def test_positive_beta(self):
        with self.assertRaises(ValueError):
            prox_argmin(euclidean(), np.ones(2), 0.0)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 6, elements=st.floats(-100, 100)))
    def test_simplex_projection(self, v):
        """
        Projections onto the simplex are feasible and idempotent.
        """
        p = project_simplex(v)
        assert np.all(p >= 0)
        assert abs(p.sum() - 1.0) < 1e-9
        assert np.allclose(project_simplex(p), p, atol=1e-12)


class TestSetups(unittest.TestCase):
    def test_invalid_setups(self):
        """
        Entropy off the simplex, nonpositive sigma, and prox-centers outside Q are rejected.
        """
        with self.assertRaises(ConfigError):
            ProxSetup(2, FeasibleSet(BOX, 2, lower=0.0, upper=1.0), geometry=ENTROPY)
        with self.assertRaises(ConfigError):
            euclidean(sigma=0.0)
        with self.assertRaises(ConfigError):
            ProxSetup(2, FeasibleSet(BOX, 2, lower=0.0, upper=1.0), x0=[2.0, 0.0])
        with self.assertRaises(ConfigError):
            FeasibleSet(BOX, 2, lower=1.0, upper=0.0)

    def test_json_form(self):
        """
        A setup rebuilt from its JSON form is equal to the original.
        """
        setup = ProxSetup(3, FeasibleSet(BOX, 3, lower=-1.0, upper=[1.0, 2.0, 3.0]), sigma=2.0, x0=[0.5, 0.0, 0.0])
        assert ProxSetup.from_dict(setup.to_dict()) == setup
        assert setup.ident == "box-euclidean-n3"

    def test_residual_and_sampling(self):
        """
        Sampled points are feasible for every compact set.
        """
        rng = np.random.default_rng(3)
        for feasible_set in (FeasibleSet(BOX, 4, lower=-1.0, upper=2.0), FeasibleSet(SIMPLEX, 4),
                             FeasibleSet("ball", 4, radius=0.5)):
            for x in feasible_set.sample(rng, 20):
                assert feasible_set.residual(x) <= 1e-12
        assert FeasibleSet(SIMPLEX, 2).residual(np.array([1.0, 1.0])) == 1.0


if __name__ == "__main__":
    unittest.main(argv=sys.argv)
