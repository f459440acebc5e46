"""Exception hierarchy.

Every input problem is a subclass of :class:`EvaluationError` (itself a
``ValueError``) so callers can catch validation failures in one place; the
CLI maps them to exit status 1.
"""


class EvaluationError(ValueError):
    pass


class LengthMismatch(EvaluationError):
    pass


class UnknownClass(EvaluationError):
    pass


class MissingThreshold(EvaluationError):
    pass


class NonFiniteCoordinate(EvaluationError):
    pass


class EmptyCloud(EvaluationError):
    pass


class InvalidProbabilities(EvaluationError):
    pass


class NoModels(EvaluationError):
    pass


class MissingColumn(EvaluationError):
    pass


class MissingProbabilities(EvaluationError):
    pass


class InvalidDistribution(EvaluationError):
    pass


class SpecError(EvaluationError):
    pass


class ConfigError(EvaluationError):
    pass


class ParseError(EvaluationError):
    """Malformed table content; ``line`` is 1-based and counts the header."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
