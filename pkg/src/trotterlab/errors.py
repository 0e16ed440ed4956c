"""Exception types shared across trotterlab."""


class TrotterLabError(Exception):
    """Base class for all library errors."""


class BudgetExceeded(TrotterLabError, RuntimeError):
    """A configured cell, iteration, node or grid budget would be exceeded."""


class InvalidTestFunction(TrotterLabError, ValueError):
    """A test function produced non-finite samples."""


class InvalidBoundInputs(TrotterLabError, ValueError):
    """Bound inputs violate the positivity / range conditions."""


class ConvergenceError(TrotterLabError, RuntimeError):
    """An iterative procedure failed to reach its tolerance."""


class KernelValidationError(TrotterLabError, RuntimeError):
    """The closed-form magnetic kernel disagrees with the dense oracle."""
