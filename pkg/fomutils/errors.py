#
# Exception types shared across the package. Each maps to a distinct failure kind so the CLI
# can translate it into an exit code.
#


class ConfigError(ValueError):
    """
    An experiment, schedule or run configuration is invalid.
    """


class DimensionError(ValueError):
    pass


class InfeasiblePointError(ValueError):
    """
    A point lies outside the feasible set, or on the part of its boundary where the
    prox-function is not differentiable.
    """


class UnsupportedSubproblemError(ValueError):
    """
    No exact solver exists for the requested (set, geometry, composite term) combination.
    """


class StepConditionError(RuntimeError):
    """
    A structured run met an iterate where the step condition on (lambda, beta, L) fails.

    :ivar k:        The iteration index where the condition failed.
    :ivar lhs:      The left side, a function of sigma, beta_{k-1}, lambda_k and S_k.
    :ivar rhs:      The local Lipschitz constant L(x_k).
    """

    def __init__(self, k: int, lhs: float, rhs: float, method: str = ""):
        self.k = k
        self.lhs = lhs
        self.rhs = rhs
        self.method = method
        super().__init__(
            f"step condition violated for {method or 'run'} at k={k}: {lhs!r} < L(x_k)={rhs!r}"
        )


class OptimalPointDetected(Exception):
    """
    Raised when a zero subgradient is met under a schedule that divides by its norm.
    The driver attaches the test point, which is optimal.
    """

    def __init__(self, k: int, point=None):
        self.k = k
        self.point = point
        super().__init__(f"zero subgradient at k={k}, the test point is optimal")


class SuiteTimeout(RuntimeError):
    pass
