"""Exception hierarchy shared by every evalbars module."""


class EvalbarsError(Exception):
    """Base class for all library errors."""


class DomainError(EvalbarsError, ValueError):
    """An argument lies outside the domain of a function or distribution."""


class EmptyDataError(EvalbarsError, ValueError):
    """An estimator received zero observations."""


class InsufficientDataError(EvalbarsError, ValueError):
    """Too few observations for the requested estimator (e.g. no sample variance)."""


class UndefinedMetricError(EvalbarsError, ValueError):
    """A metric is undefined for the given counts (zero denominator)."""


class DegeneratePosteriorError(EvalbarsError, RuntimeError):
    """Importance weights or posterior draws collapsed and no interval can be formed."""


class ConfigurationError(EvalbarsError, ValueError):
    """A simulation config or analysis request is invalid."""


class IngestError(EvalbarsError, ValueError):
    """An input file failed to parse or validate.

    ``line`` is the 1-based line number in the source file when known.
    """

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
