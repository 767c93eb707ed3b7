"""Exception types raised across the package."""

__all__ = ["QuasiflatError", "DegenerateSimplex", "PointNotInSet", "ScaleBelowResolution",
           "NotInjective", "DegenerateSamples", "DomainError", "ZeroLinearPart", "HypothesisViolated",
           "UnsupportedDimension", "MissingSamples", "EpsilonTooLarge", "ResolutionTooCoarse",
           "UnresolvableCube", "CollarViolation", "BadSpec"]


class QuasiflatError(Exception):
    """Base class for all library errors."""


class DegenerateSimplex(QuasiflatError):
    pass


class PointNotInSet(QuasiflatError):
    pass


class ScaleBelowResolution(QuasiflatError):
    pass


class NotInjective(QuasiflatError):
    pass


class DegenerateSamples(QuasiflatError):
    pass


class DomainError(QuasiflatError):
    pass


class ZeroLinearPart(QuasiflatError):
    pass


class HypothesisViolated(QuasiflatError):
    """Raised when inputs fail a precondition; the message names it."""


class UnsupportedDimension(QuasiflatError):
    pass


class MissingSamples(QuasiflatError):
    pass


class EpsilonTooLarge(QuasiflatError):
    pass


class ResolutionTooCoarse(QuasiflatError):
    pass


class UnresolvableCube(QuasiflatError):
    pass


class CollarViolation(QuasiflatError):
    pass


class BadSpec(QuasiflatError):
    pass
