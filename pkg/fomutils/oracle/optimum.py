#
# Known optima for certification. Each solver is independent of the methods being certified:
# linear algebra for quadratics, a linear program with an active-set polish for max-affine
# functions on the simplex, and cyclic coordinate descent for the lasso.
#

import logging
from typing import Dict, Optional

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from ..space import BOX, FREE, SIMPLEX, ProxSetup, d_value, soft_threshold
from .problems import CompositeLasso, InexactWrapper, MaxAffine, Problem, Quadratic, true_value

l = logging.getLogger(__name__)

LASSO_TOL = 1e-12
LASSO_MAX_SWEEPS = 200000
ACTIVE_TOL = 1e-7
SUPPORT_TOL = 1e-9
# relative residual of A x = b below which b counts as in the range of A
RANGE_TOL = 1e-10


class OptimumInfo:
    """
    What is known about a minimizer. Any field may be absent.

    :ivar x_star:           A minimizer x*.
    :ivar f_star:           f(x*).
    :ivar d_star_upper:     An upper bound D >= d(x*).
    """

    __slots__ = ("x_star", "f_star", "d_star_upper")

    def __init__(self, x_star=None, f_star=None, d_star_upper=None):
        self.x_star = None if x_star is None else np.asarray(x_star, dtype=float)
        self.f_star = None if f_star is None else float(f_star)
        self.d_star_upper = None if d_star_upper is None else float(d_star_upper)
        if self.d_star_upper is not None and self.d_star_upper < 0:
            raise ValueError(f"D must be nonnegative, got {self.d_star_upper!r}")

    def __repr__(self):
        return f"<OptimumInfo f*={self.f_star!r} x*={'known' if self.x_star is not None else 'absent'} D={self.d_star_upper!r}>"

    @property
    def known(self) -> bool:
        return self.f_star is not None and (self.x_star is not None or self.d_star_upper is not None)

    def d_star(self, setup: ProxSetup) -> Optional[float]:
        if self.x_star is not None:
            return d_value(setup, self.x_star)
        return self.d_star_upper

    def to_dict(self) -> Dict:
        return {
            "x_star": None if self.x_star is None else self.x_star.tolist(),
            "f_star": self.f_star,
            "d_star_upper": self.d_star_upper,
        }

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "OptimumInfo":
        data = data or {}
        return cls(data.get("x_star"), data.get("f_star"), data.get("d_star_upper"))


def known_optimum(problem: Problem, setup: ProxSetup, d_star_upper: Optional[float] = None) -> OptimumInfo:
    """
    Exact optimum for the analytically solvable cases, absent otherwise. ``d_star_upper`` is an
    optional user bound D >= d(x*) carried along either way.
    """
    base = problem.base if isinstance(problem, InexactWrapper) else problem
    kind = setup.set.kind

    x_star = None
    if isinstance(base, Quadratic) and kind == FREE:
        x_star = quadratic_minimizer(base, setup.x0)
    elif isinstance(base, MaxAffine) and kind == SIMPLEX:
        x_star = max_affine_simplex_minimizer(base)
    elif isinstance(base, CompositeLasso) and kind in (FREE, BOX):
        lower = setup.set.lower if kind == BOX else None
        upper = setup.set.upper if kind == BOX else None
        x_star = lasso_coordinate_descent(base.A, base.b, base.weight, lower=lower, upper=upper)

    if x_star is None:
        l.debug("no exact optimum for %s on %s", problem.ident, setup.ident)
        return OptimumInfo(d_star_upper=d_star_upper)

    return OptimumInfo(x_star, true_value(problem, x_star), d_star_upper=d_star_upper)


def quadratic_minimizer(problem: Quadratic, x0: np.ndarray) -> Optional[np.ndarray]:
    """
    Minimizer of 1/2 x^T A x - <b, x> over free space. For singular A a minimizer exists only when b
    lies in the range of A; the one closest to x0 is returned. None when f is unbounded below.
    """
    A, b = problem.A, problem.b
    eigvals = scipy.linalg.eigvalsh(A)
    rcond = A.shape[0] * np.finfo(float).eps
    if eigvals[0] > rcond * float(eigvals[-1]):
        return scipy.linalg.solve(A, b, assume_a="pos")

    # minimum-norm correction from x0
    step, *_ = scipy.linalg.lstsq(A, b - A @ x0, cond=rcond)
    x = x0 + step
    if np.linalg.norm(A @ x - b) > RANGE_TOL * max(1.0, float(np.linalg.norm(b))):
        l.debug("quadratic %s is unbounded below", problem.ident)
        return None
    return x


def max_affine_simplex_minimizer(problem: MaxAffine) -> np.ndarray:
    """
    min over the simplex of max_i <a_i, x> + b_i as the linear program min t s.t. Ax + b <= t,
    followed by a polish: the vertex the solver lands on is re-solved exactly from its active
    pieces and support, which removes the solver's feasibility slack.
    """
    A, b = problem.A, problem.b
    m, n = A.shape
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_ub = np.hstack([A, -np.ones((m, 1))])
    A_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    bounds = [(0, None)] * n + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=-b, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"reference LP failed for {problem.ident}: {res.message}")

    x_lp = np.maximum(res.x[:n], 0.0)
    x_lp /= np.sum(x_lp)
    polished = _polish_vertex(A, b, x_lp)
    if polished is not None and problem._value(polished) <= problem._value(x_lp):
        return polished
    return x_lp


def _polish_vertex(A: np.ndarray, b: np.ndarray, x: np.ndarray) -> Optional[np.ndarray]:
    pieces = A @ x + b
    t = np.max(pieces)
    active = np.flatnonzero(pieces >= t - ACTIVE_TOL)
    support = np.flatnonzero(x > SUPPORT_TOL)
    if support.size == 0:
        return None

    # unknowns: x on the support and t
    rows = [np.append(A[i, support], -1.0) for i in active]
    rows.append(np.append(np.ones(support.size), 0.0))
    rhs = np.append(-b[active], 1.0)
    sol, *_ = np.linalg.lstsq(np.array(rows), rhs, rcond=None)
    polished = np.zeros_like(x)
    polished[support] = sol[:-1]
    if np.any(polished < 0) or abs(np.sum(polished) - 1.0) > 1e-14:
        return None
    return polished


def lasso_coordinate_descent(A: np.ndarray, b: np.ndarray, weight: float, lower=None, upper=None,
                             tol=LASSO_TOL, max_sweeps=LASSO_MAX_SWEEPS) -> np.ndarray:
    """
    Cyclic coordinate descent on 1/2 ||Ax - b||^2 + weight ||x||_1, optionally over a box. Each
    coordinate is minimized exactly (soft-threshold, then clip), and sweeps stop once no coordinate
    moves by more than ``tol``.
    """
    n = A.shape[1]
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    x = np.clip(np.zeros(n), lower, upper)
    r = b - A @ x
    col_sq = np.sum(A * A, axis=0)

    for sweep in range(max_sweeps):
        max_move = 0.0
        for j in range(n):
            if col_sq[j] == 0:
                new = float(np.clip(0.0, lower[j], upper[j]))
            else:
                rho = A[:, j] @ r + col_sq[j] * x[j]
                new = float(np.clip(soft_threshold(rho, weight) / col_sq[j], lower[j], upper[j]))

            move = new - x[j]
            if move != 0.0:
                r -= move * A[:, j]
                x[j] = new
                max_move = max(max_move, abs(move))

        if max_move <= tol:
            l.debug("lasso reference converged after %d sweeps", sweep + 1)
            break
    else:
        l.warning("lasso reference stopped at %d sweeps without reaching %g", max_sweeps, tol)

    return x
