# Copyright Fracsense Authors 2026
from typing import Optional


class Error(Exception):
    """
    Base error class for all fracsense errors.

    **Usage**

    ```python
    import fracsense

    try:
        fracsense.pipeline.full_pipeline(cfg)
    except fracsense.Error:
        # Catch any exception raised by the library.
        print("Responding to error...")
    ```
    """


class InvalidError(Error):
    """Raised when an argument or a configuration value is invalid."""


class ConfigError(InvalidError):
    """Raised when an experiment config file cannot be parsed or names an unknown key."""

    def __init__(self, msg: str, key: Optional[str] = None, line: Optional[int] = None):
        location = []
        if key is not None:
            location.append(f"key '{key}'")
        if line is not None:
            location.append(f"line {line}")
        super().__init__(f"{msg} ({', '.join(location)})" if location else msg)
        self.key = key
        self.line = line


class DomainError(Error):
    """Raised when a kernel or a field is evaluated at a singular point or outside the mesh."""


class AssemblyError(Error):
    """Raised when the quadrature of a singular element does not converge."""


class SolverError(Error):
    """Raised when a linear system is singular or a solve breaks down."""

    def __init__(self, msg: str, condition_number: Optional[float] = None):
        if condition_number is not None:
            msg = f"{msg} (condition number {condition_number:.3e})"
        super().__init__(msg)
        self.condition_number = condition_number


class NotFoundError(Error):
    """Raised when a requested artifact or selection is empty or missing."""


class StageError(Error):
    """Raised when a pipeline stage fails. Wraps the original exception."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class RegularizationWarning(UserWarning):
    """Emitted when a regularization rule falls back to a weaker choice."""
