class NsgfError(Exception):
    """Base class for errors raised by this package."""


class UserError(NsgfError):
    """Invalid input, configuration, or missing/corrupt files."""


class FittingError(NsgfError):
    """Numerical failure during an optimization run."""
