"""Exception hierarchy.

Validation problems (bad parameters, violated preconditions) derive from
``ValidationError``; failures of a numerical procedure derive from
``NumericalError``. The CLI maps the two families onto exit codes 2 and 3.
"""


class PurcellError(Exception):
    pass


class ValidationError(PurcellError, ValueError):
    pass


class NumericalError(PurcellError, ArithmeticError):
    pass


# model
class NonPositiveKappa(ValidationError):
    pass


class NegativeRate(ValidationError):
    pass


class WrongExcitationCount(ValidationError):
    pass


class TooManyAtoms(ValidationError):
    pass


# effective / spectra
class DimensionTooLarge(ValidationError):
    pass


class DegenerateEp(ValidationError):
    pass


class OutsideEp3Window(ValidationError):
    pass


class NoConvergence(NumericalError):
    pass


class FitFailure(NumericalError):
    pass


# lindblad
class DimensionMismatch(ValidationError):
    pass


class StepTooLarge(ValidationError):
    pass


class TraceDrift(NumericalError):
    pass


# rates
class ZeroGammaB(ValidationError):
    pass


class DenominatorNonpositive(ValidationError):
    pass


class PoleAtRealAxis(ValidationError):
    pass


class WindowNotReached(NumericalError):
    pass


class OscillatoryResidual(NumericalError):
    pass


class AmbiguousSlowMode(NumericalError):
    pass


# cli
class ParseError(ValidationError):
    pass
