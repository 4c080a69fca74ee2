"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input violates a documented contract.

    The CLI maps this to exit code 1 (I/O problems map to 2).
    """
