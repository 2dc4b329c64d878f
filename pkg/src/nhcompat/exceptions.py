class NonholonomicError(Exception):
    """Base class for errors raised by nhcompat."""


class FactorizationError(NonholonomicError):
    """A metric (or other matrix expected to be SPD) failed to factorize."""


class DegeneratePointError(NonholonomicError):
    """The constraint covector vanishes (or nearly so) at the evaluation point."""


class RankParityError(NonholonomicError):
    """An odd number of nonzero eigenvalues survived rank thresholding."""


class PairingError(NonholonomicError):
    """The kappa-pairing of the b-basis could not be made orthonormal."""


class PreconditionError(NonholonomicError, ValueError):
    pass


class ConfigError(NonholonomicError, ValueError):
    """Invalid scenario configuration. ``path`` names the offending field."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
