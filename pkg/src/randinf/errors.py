"""Exception types shared across the package."""


class RandinfError(Exception):
    """Base class for all package-specific errors."""


class InputError(RandinfError):
    """Malformed or inconsistent user input (files, columns, flags)."""


class MissingColumn(InputError):
    """A required column is absent from the input file."""


class NonBinaryColumn(InputError):
    """A column that must contain only 0/1 holds another value."""


class NonFiniteValue(InputError):
    """A numeric field failed to parse or is NaN/inf."""


class DegenerateDesign(InputError):
    """The assignment design leaves fewer than two units in an arm."""


class InvalidStrataSplit(InputError):
    """A synthetic population was requested with an impossible split of
    units across compliance strata."""


class TooManyAssignments(RandinfError):
    """Exhaustive enumeration was requested but C(n, n1) exceeds the cap."""


class DegenerateVariance(RandinfError):
    """A studentized statistic has a variance term that is not strictly
    positive over the whole real line, so the test function is undefined."""


class ZeroVariance(DegenerateVariance):
    """The variance term vanishes at the specific point requested."""


class SingularDesign(RandinfError):
    """A regression design matrix is too ill-conditioned even for the
    pseudo-inverse fallback to produce finite coefficients."""


class UndefinedEstimate(RandinfError):
    """A ratio estimator was required but its take-up contrast vanishes."""
