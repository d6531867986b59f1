"""Exception types shared across pipeline stages."""

from __future__ import annotations


class RscurateError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RscurateError):
    """Input violates a documented precondition or schema.

    May carry multiple problems so callers can report everything at once.
    """

    def __init__(self, problems: list[str] | str):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = problems
        super().__init__("; ".join(problems))


class MissingKeyError(ValidationError):
    """A lookup key (embedding, record, tar member) does not exist."""

    def __init__(self, keys: list[str] | str, context: str = ""):
        if isinstance(keys, str):
            keys = [keys]
        self.keys = keys
        suffix = f" in {context}" if context else ""
        super().__init__(f"missing keys{suffix}: {', '.join(keys)}")


class StageError(RscurateError):
    """A pipeline stage failed after its inputs validated."""
