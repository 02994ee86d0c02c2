from typing import List, Optional


class MplsSimError(Exception):
    """Base class for every error raised by the simulator."""


class ScenarioError(MplsSimError):
    """Scenario file could not be turned into a usable scenario."""


class ParseError(ScenarioError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class SchemaError(ScenarioError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class ValidationError(ScenarioError):
    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__(
            f"{len(self.violations)} violation(s): " + "; ".join(self.violations)
        )


class SpoofSetExceedsSpace(MplsSimError):
    pass


class EmptyActiveSet(MplsSimError):
    pass


class AuthDisabled(MplsSimError):
    pass


class InvalidDistribution(MplsSimError):
    pass


class MitigationDisabled(MplsSimError):
    pass


class WrongModel(MplsSimError):
    pass


class NonMonotonicTime(MplsSimError):
    pass


class InconsistentScenario(MplsSimError):
    pass
