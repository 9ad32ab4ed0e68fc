"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Rejected input: wrong shape, non-finite entries, bad parameter range."""


class UnsupportedDiagnosticError(RuntimeError):
    """A diagnostic needs a capability (g*, dense Hessian, ...) the problem lacks."""


class EmptyResultError(RuntimeError):
    """An enumeration produced no admissible candidate."""


class DivergenceError(RuntimeError):
    """Iterates left the finite range; carries the last finite state."""

    def __init__(self, message, iterate=None, trace=None):
        super().__init__(message)
        self.iterate = iterate
        self.trace = [] if trace is None else trace
