#
# Classical recursions written out directly, without auxiliary functions. They are the reference
# side of the equivalence checks: each one is a known special case of a driver/preset pair.
#

import logging
from typing import Callable, Dict, Sequence

import numpy as np

from ..oracle import Problem, query
from ..schedule import tseng_lambda
from ..space import ENTROPY, ProxSetup, projections

l = logging.getLogger(__name__)


def _bregman_step(setup: ProxSetup, z: np.ndarray, g: np.ndarray, step: float) -> np.ndarray:
    """
    argmin_Q step <g, x> + xi(z, x) / sigma, i.e. a mirror step of length ``step`` from z.
    """
    if setup.geometry == ENTROPY:
        return projections.entropic_step(z, g, step)
    return setup.set.project(z - step * g)


def _dual_step(setup: ProxSetup, s: np.ndarray, scale: float) -> np.ndarray:
    """
    argmin_Q <s, x> + scale d(x) / sigma.
    """
    if setup.geometry == ENTROPY:
        return projections.entropic_argmin(s, scale)
    return setup.set.project(setup.x0 - s / scale)


def projected_subgradient(problem: Problem, setup: ProxSetup, lambdas: Sequence[float], beta=1.0) -> np.ndarray:
    """
    x_0 = x0, x_{k+1} = proj(x_k - lambda_k g_k / (beta sigma)) on a Euclidean setup.

    :return: The test points x_0..x_{K-1}, one per row.
    """
    if setup.geometry == ENTROPY:
        raise ValueError("projected subgradient descent needs a Euclidean setup")

    x = setup.x0.copy()
    points = np.zeros((len(lambdas), setup.dim))
    for k, lam in enumerate(lambdas):
        points[k] = x
        g = query(problem, x).slope
        x = setup.set.project(x - lam * g / (beta * setup.sigma))
    return points


def double_averaging(problem: Problem, setup: ProxSetup, lambdas: Sequence[float],
                     beta: Callable[[int], float]) -> np.ndarray:
    """
    x_0 = x0, z_k = argmin sum_{i<=k} lambda_i l_f(x_i; .) + beta_k d, x_{k+1} = (1 - tau_k) x_k + tau_k z_k
    with tau_k = lambda_{k+1} / S_{k+1}.

    :param beta:    k -> beta_k.
    :return:        The test points x_0..x_{K-1}, one per row.
    """
    x = setup.x0.copy()
    s = np.zeros(setup.dim)
    S = 0.0
    points = np.zeros((len(lambdas), setup.dim))
    for k, lam in enumerate(lambdas):
        points[k] = x
        S += lam
        s = s + lam * query(problem, x).slope
        z = _dual_step(setup, s, beta(k) * setup.sigma)
        if k + 1 < len(lambdas):
            tau = lambdas[k + 1] / (S + lambdas[k + 1])
            x = (1.0 - tau) * x + tau * z
    return points


def _tseng(problem: Problem, setup: ProxSetup, iters: int, lipschitz: float, accumulate: bool) -> Dict[str, np.ndarray]:
    scale = lipschitz  # beta sigma with beta = L / sigma
    x = setup.x0.copy()
    lam = tseng_lambda(0)
    S = lam
    g = query(problem, x).slope
    s = lam * g
    z = _dual_step(setup, s, scale) if accumulate else _bregman_step(setup, setup.x0, g, lam / scale)
    xhat = z.copy()

    xs, zs, xhats = [x.copy()], [z.copy()], [xhat.copy()]
    for k in range(iters - 1):
        lam = tseng_lambda(k + 1)
        S += lam
        tau = lam / S
        x = (1.0 - tau) * xhat + tau * z
        g = query(problem, x).slope
        if accumulate:
            s = s + lam * g
            z = _dual_step(setup, s, scale)
        else:
            z = _bregman_step(setup, z, g, lam / scale)
        xhat = (1.0 - tau) * xhat + tau * z
        xs.append(x.copy())
        zs.append(z.copy())
        xhats.append(xhat.copy())

    return {"x": np.array(xs), "z": np.array(zs), "xhat": np.array(xhats)}


def tseng_second_apg(problem: Problem, setup: ProxSetup, iters: int, lipschitz: float) -> Dict[str, np.ndarray]:
    """
    Tseng's second accelerated proximal gradient method: one Bregman step from z_k per iteration.

    :return: {"x", "z", "xhat"}, each with one row per iteration.
    """
    return _tseng(problem, setup, iters, lipschitz, accumulate=False)


def tseng_third_apg(problem: Problem, setup: ProxSetup, iters: int, lipschitz: float) -> Dict[str, np.ndarray]:
    """
    Tseng's third accelerated proximal gradient method: z_k minimizes all accumulated
    linearizations plus (L / sigma) d.

    :return: {"x", "z", "xhat"}, each with one row per iteration.
    """
    return _tseng(problem, setup, iters, lipschitz, accumulate=True)
