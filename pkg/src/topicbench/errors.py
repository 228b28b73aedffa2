"""Shared exception types.

Every operational failure raises a subclass of :class:`TopicbenchError` so
callers (CLI, HTTP service) can map failures to exit codes / status codes
without string matching.
"""


class TopicbenchError(Exception):
    """Base class for all workbench errors."""


class ParseError(TopicbenchError):
    """A corpus or config file could not be parsed. Carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ValidationError(TopicbenchError):
    """Input violated a documented precondition or invariant."""


class ConfigError(TopicbenchError):
    """A configuration value is missing or inconsistent."""


class StratificationError(ValidationError):
    """A label has too few members for the requested split or fold count."""


class TransportError(TopicbenchError):
    """An external provider or service could not be reached."""


class ProtocolError(TopicbenchError):
    """An external provider returned a response violating its contract."""


class ConflictError(TopicbenchError):
    """A write collided with an existing record (duplicate judgment)."""


class NotFoundError(TopicbenchError):
    """A referenced record does not exist."""


class StageError(TopicbenchError):
    """A pipeline stage failed; names the stage and wraps the cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
