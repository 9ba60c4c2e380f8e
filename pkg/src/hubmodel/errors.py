"""Exception types raised by hubmodel."""


class HubModelError(Exception):
    """Base class for all hubmodel errors."""


class ValidationError(HubModelError, ValueError):
    """Input data violates a type invariant."""


class MalformedFile(ValidationError):
    pass


class EmptyGroup(ValidationError):
    pass


class NonBinaryEntry(ValidationError):
    pass


class DuplicateLabel(ValidationError):
    pass


class HubNotMember(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class IoFailure(HubModelError, OSError):
    pass


class ZeroProbabilityGroup(HubModelError):
    """An observed group has probability zero under the current parameters."""

    def __init__(self, index):
        super().__init__(f"observation {index} has zero probability")
        self.index = index


class AllRestartsDegenerate(HubModelError):
    pass


class DegenerateDegreeSequence(HubModelError):
    pass


class EmptyCommunity(ValidationError):
    pass


class ZeroAssociation(HubModelError):
    pass


class SingularDenominator(HubModelError, ZeroDivisionError):
    pass


class UndefinedPairWarning(UserWarning):
    """Known-hub estimate of a pair whose nodes are never hubs; set to 0."""
