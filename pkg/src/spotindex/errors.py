"""Exception types shared across the package."""


class SpotIndexError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(SpotIndexError):
    """A record in an input file could not be parsed.

    Carries enough context (source, line, field) to locate the offending record.
    """

    def __init__(self, message, source=None, line=None, field=None):
        parts = []
        if source is not None:
            parts.append(str(source))
        if line is not None:
            parts.append(f"line {line}")
        if field is not None:
            parts.append(f"field {field!r}")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.source = source
        self.line = line
        self.field = field


class ConflictError(SpotIndexError):
    """Two records claim the same identity (e.g. duplicate catalog id)."""


class InvariantError(SpotIndexError):
    """A value violates a type invariant (non-positive capacity, NaN price, ...)."""


class OutOfRangeError(SpotIndexError):
    """A timestamp falls outside the range a trace or series covers."""


class GapError(SpotIndexError):
    """A sample cannot be computed (all members capped, missing trace, ...)."""


class CoverageError(SpotIndexError):
    """A computation needs samples that the inputs do not cover."""


class SelectionError(SpotIndexError):
    """A policy cannot produce a selection from the offered candidates."""


class SimulationError(SpotIndexError):
    """The simulator cannot run or continue with the given inputs."""
