"""Exception types raised by the toolkit."""


class ResolutionError(ValueError):
    """A dyadic object is finer than the working grid allows."""


class CapacityError(RuntimeError):
    """A brute-force search or dense assembly would exceed its configured cap."""


class ConvergenceError(ArithmeticError):
    """An iterative method hit its iteration cap.

    The best estimate reached so far is kept on ``estimate``.
    """

    def __init__(self, message, estimate=None, iterations=None):
        super().__init__(message)
        self.estimate = estimate
        self.iterations = iterations
