"""Exception types shared across the package."""


class CapacityError(ValueError):
    """A requested Hilbert space or configuration table exceeds the size cap."""


class NumericalFailureError(RuntimeError):
    """An eigensolver did not converge or a result failed a numerical sanity check."""
