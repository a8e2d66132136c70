"""Exception hierarchy shared across the package."""


class RiskGameError(Exception):
    """Base class for all errors raised by riskgame."""


class HorizonMismatch(RiskGameError):
    pass


class DimensionMismatch(RiskGameError):
    pass


class EmptyTrajectory(RiskGameError):
    pass


class EmptyMap(RiskGameError):
    pass


class NoOverlap(RiskGameError):
    pass


class ParseError(RiskGameError):
    pass


class VersionError(RiskGameError):
    pass


class ValidationError(RiskGameError):
    """Invariant breach in loaded data; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
