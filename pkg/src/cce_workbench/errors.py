"""Exception hierarchy shared by every engine."""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


class ParseError(WorkbenchError):
    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class UnknownIdentifier(ParseError):
    def __init__(self, name, position=None):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", position)


class UnknownVariable(WorkbenchError):
    pass


class PoleError(WorkbenchError, ZeroDivisionError):
    """Denominator vanishes at an evaluation point."""


class MissingAssignment(WorkbenchError):
    pass


class ZeroConstantTerm(WorkbenchError, ZeroDivisionError):
    pass


class FieldMismatch(WorkbenchError):
    pass


class DegenerateMetric(WorkbenchError):
    pass


class ChartError(WorkbenchError):
    pass


class DimensionError(WorkbenchError):
    pass


class ZeroConformalFactor(WorkbenchError):
    pass


class RecursionDegenerate(WorkbenchError):
    """Requested expansion order reaches the degenerate step p = n - 1."""


class NonDivisible(WorkbenchError):
    pass


class InvalidWeights(WorkbenchError):
    pass


class UnsupportedFactor(WorkbenchError):
    pass


class ConditionCountMismatch(WorkbenchError):
    pass


class TaskError(WorkbenchError):
    pass
