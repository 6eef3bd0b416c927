"""Exception hierarchy shared by all modules."""


class HomlagError(Exception):
    pass


class DimensionError(HomlagError, ValueError):
    pass


class NumericError(HomlagError, ArithmeticError):
    pass


class DomainError(NumericError):
    """A primitive was evaluated outside its domain (log/sqrt of non-positive, division by zero)."""


class ChartViolation(NumericError):
    """A point left the chart domain of a scaling structure (e.g. f(q) <= 0)."""


class SingularLagrangianError(NumericError):
    def __init__(self, message, condition=None, time=None):
        super().__init__(message)
        self.condition = condition
        self.time = time


class ReducedRegularityError(SingularLagrangianError):
    pass


class NumericWarning(UserWarning):
    pass


class ScenarioError(HomlagError):
    """Scenario lookup or schema failure; ``path`` points into the offending document."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
