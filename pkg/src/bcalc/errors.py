"""Exception hierarchy shared by all modules."""


class BCalcError(Exception):
    """Base class. ``exit_code`` is what the command line reports."""

    exit_code = 2


class ParseError(BCalcError):
    pass


class UnsupportedNode(BCalcError):
    pass


class DomainError(BCalcError, ValueError):
    pass


class Indeterminate(BCalcError):
    exit_code = 3


class FactorizationFailure(BCalcError):
    pass


class NotInterior(BCalcError):
    pass


class NotBNormal(BCalcError):
    pass


class NotADiffeo(BCalcError):
    pass


class NotStronglySmooth(BCalcError):
    pass


class WeightInconsistent(BCalcError):
    pass


class PositivityViolated(BCalcError):
    pass


class NotElliptic(BCalcError):
    pass


class NotFredholm(BCalcError):
    pass


class DiscretizationUnstable(BCalcError):
    exit_code = 3


class ManifestError(BCalcError):
    pass
