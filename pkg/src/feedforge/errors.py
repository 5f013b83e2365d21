"""Exception hierarchy shared by every stage of the pipeline."""


class FeedforgeError(Exception):
    """Base class for all errors raised by feedforge."""


class ConfigError(FeedforgeError, ValueError):
    """Invalid or inconsistent configuration."""


class DataError(FeedforgeError):
    """Input data cannot be turned into a usable graph or network."""


class ParseError(DataError):
    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class EmptyGraphError(DataError):
    pass


class ProjectionError(DataError):
    pass


class SchemaError(DataError):
    pass


class NetworkValidationError(DataError):
    """Raised with the full list of offending elements, not just the first."""

    def __init__(self, message, offenders=()):
        self.offenders = list(offenders)
        detail = "; ".join(str(o) for o in self.offenders[:10])
        if len(self.offenders) > 10:
            detail += f"; ... ({len(self.offenders)} total)"
        super().__init__(f"{message}: {detail}" if detail else message)


class SolverError(FeedforgeError):
    pass


class RejectedSolutionError(SolverError):
    def __init__(self, message, violations=()):
        self.violations = list(violations)
        super().__init__(message)


class ConvergenceError(FeedforgeError):
    pass
