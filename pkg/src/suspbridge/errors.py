"""Exception hierarchy shared by every module.

The CLI maps each class to a distinct exit code, so new failure modes
should subclass one of these rather than raising bare ``ValueError``.
"""


class BridgeError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ParameterError(BridgeError, ValueError):
    """Invalid input: out-of-range parameter, shape mismatch, unknown tag."""

    exit_code = 2


class NumericalError(BridgeError, ArithmeticError):
    """A numerical procedure failed to converge or meet its tolerance."""

    exit_code = 3


class DivergenceError(NumericalError):
    """An ODE integration produced non-finite values."""

    def __init__(self, message, abscissa=None):
        super().__init__(message)
        self.abscissa = abscissa


class BlowUpError(BridgeError, ArithmeticError):
    """Time stepping produced a non-finite state.

    ``partial`` carries whatever part of the trajectory was recorded
    before the failure (may be ``None``).
    """

    exit_code = 4

    def __init__(self, message, t=None, partial=None):
        super().__init__(message)
        self.t = t
        self.partial = partial


class HorizonTooLargeError(NumericalError):
    """Picard iteration failed to contract on the requested window."""

    def __init__(self, message, ratios=()):
        super().__init__(message)
        self.ratios = list(ratios)
