#
# Closed-form Euclidean projections, the soft-thresholding operator, the entropic argmin, and
# exact minimizers of affine (+ l1) functions over the supported compact sets.
#

from typing import Tuple

import numpy as np
from scipy.special import softmax


def project_simplex(v: np.ndarray, radius=1.0) -> np.ndarray:
    """
    Euclidean projection onto {x >= 0, sum(x) = radius} by the sort-based threshold rule.
    A stable sort keeps the result reproducible when entries tie.
    """
    v = np.asarray(v, dtype=float)
    u = -np.sort(-v, kind="stable")
    cssv = np.cumsum(u) - radius
    ind = np.arange(1, v.size + 1)
    cond = u - cssv / ind > 0
    rho = np.count_nonzero(cond)
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def project_box(v: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return np.clip(v, lower, upper)


def project_ball(v: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    diff = v - center
    dist = np.linalg.norm(diff)
    if dist <= radius:
        return np.array(v, dtype=float)

    return center + diff * (radius / dist)


def soft_threshold(v: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def entropic_argmin(s: np.ndarray, scale: float) -> np.ndarray:
    """
    argmin over the simplex of <s, x> + scale * sum(x log x), i.e. x_i proportional to exp(-s_i / scale).
    """
    return softmax(-np.asarray(s, dtype=float) / scale)


def entropic_step(z: np.ndarray, g: np.ndarray, step: float) -> np.ndarray:
    """
    Multiplicative-weights update z_i * exp(-step * g_i), normalized.
    """
    logits = np.log(z) - step * np.asarray(g, dtype=float)
    return softmax(logits)


#
# Affine minimization over compact sets
#

def min_affine_box(a: np.ndarray, lower: np.ndarray, upper: np.ndarray, l1=0.0) -> Tuple[float, np.ndarray]:
    """
    Minimize <a, x> + l1 * ||x||_1 over the box coordinate by coordinate. Each one-dimensional
    piece is convex and piecewise linear, so its minimum sits at a bound or at zero.
    """
    candidates = np.stack([lower, upper, np.clip(np.zeros_like(lower), lower, upper)])
    values = candidates * a + l1 * np.abs(candidates)
    best = np.argmin(values, axis=0)
    point = candidates[best, np.arange(a.size)]
    return float(np.sum(values[best, np.arange(a.size)])), point


def min_affine_simplex(a: np.ndarray) -> Tuple[float, np.ndarray]:
    idx = int(np.argmin(a))
    point = np.zeros_like(a, dtype=float)
    point[idx] = 1.0
    return float(a[idx]), point


def min_affine_ball(a: np.ndarray, center: np.ndarray, radius: float) -> Tuple[float, np.ndarray]:
    norm = np.linalg.norm(a)
    if norm == 0:
        return float(a @ center), np.array(center, dtype=float)

    point = center - radius * a / norm
    return float(a @ center - radius * norm), point
