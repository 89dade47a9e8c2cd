"""Exception types raised across the package."""


class CapVoronoiError(Exception):
    """Base class for all package errors."""


class DegenerateTriangle(CapVoronoiError):
    pass


class TooFewSites(CapVoronoiError):
    pass


class DuplicateSites(CapVoronoiError):
    pass


class HemisphericSites(CapVoronoiError):
    """All sites lie in one closed hemisphere, so the origin is not interior to their hull."""


class EmptySiteSet(CapVoronoiError):
    pass


class EmptyBisector(CapVoronoiError):
    """The weight difference is at least the site separation; no two-sided boundary exists."""


class NoSharedEdge(CapVoronoiError):
    pass


class Infeasible(CapVoronoiError):
    """Total capacity is below total demand."""

    def __init__(self, deficit: float):
        super().__init__(f"total capacity short of demand by {deficit!r}")
        self.deficit = deficit


class NotConverged(CapVoronoiError):
    """Iteration caps were hit; the partial result is attached."""

    def __init__(self, result):
        super().__init__("solver hit its iteration caps before converging")
        self.result = result


class InfeasibleInstance(CapVoronoiError):
    pass


class ParseError(CapVoronoiError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateId(ParseError):
    pass


class NegativeMass(ParseError):
    pass


class MismatchedAssignment(CapVoronoiError):
    pass
