"""Exception hierarchy shared by all modules."""


class CopulaError(Exception):
    """Base class for every error raised by copulamix."""


class InputError(CopulaError, ValueError):
    """Malformed or out-of-range input."""


class ParameterError(InputError):
    """Family parameter outside its admissible set."""


class BracketError(InputError):
    """Root-finding bracket without a sign change."""


class InfeasibleEnvelopeError(InputError):
    """Envelope functions whose integrals sum to 2 or more."""


class NumericError(CopulaError, ArithmeticError):
    """Non-finite values or non-convergence.

    ``location`` carries the offending point (or residual) when known.
    """

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{message} (at {location})")
        self.location = location


class UnsupportedFeatureError(CopulaError, NotImplementedError):
    """Operation requested on a structure it does not handle."""


class NotApplicableError(CopulaError):
    """Operation undefined for this kind of object (e.g. strict generator)."""


class SingularCopulaError(CopulaError):
    """Copula whose absolutely continuous part vanishes."""
