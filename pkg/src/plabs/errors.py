"""Exception and warning types shared across the toolkit."""


class PlabsError(Exception):
    """Base class for all toolkit errors."""


class TooLarge(PlabsError):
    """An exhaustive enumeration would exceed the configured size limit."""


class SingularSmoothPart(PlabsError):
    """The smooth-part matrix J is singular or numerically unusable.

    Callers can regularize the form (shifting J by a multiple of the
    identity) and retry.
    """


class SingularShift(PlabsError):
    """J + alpha*I is numerically singular for the requested shift."""


class SingularPiece(PlabsError):
    """The selected piece has a (near-)singular Jacobian."""


class SingularS(PlabsError):
    """S is singular, so the absolute-value-equation form does not exist."""


class SingularIMinusS(PlabsError):
    """I - S is singular and the role-swapped reduction was not requested."""


class PivotBreakdown(PlabsError):
    """Signed elimination hit a pivot too close to zero."""


class BasisSingular(PlabsError):
    """Could not complete the requested direction to a nonsingular basis."""


class UnknownExample(PlabsError):
    """No gallery family with the requested name."""


class BadParams(PlabsError):
    """Gallery parameters are invalid for the requested family."""


class BadAngles(PlabsError):
    """Rosette knot angles violate the subdivision preconditions."""


class Unclassified(PlabsError):
    """The rosette does not match any classification rule."""


class DocumentError(PlabsError):
    """A problem file failed to parse or violates the document invariants."""


class DegenerateSwitch(UserWarning):
    """A switching variable is identically zero along the probe path."""
