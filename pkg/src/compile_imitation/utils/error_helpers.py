"""
Centralized error handling utilities and custom exception classes for compile-imitation.

Defines the exceptions raised by generation, dataset validation, training and output
code, and a helper for raising exceptions with context and logging.
"""

import logging
from typing import Optional

logger = logging.getLogger(__name__)


class CompileError(Exception):
    """Base exception for compile-imitation errors."""
    pass


class ConfigError(CompileError):
    """Exception for invalid configurations or env/model mismatches."""
    pass


class ResampleError(CompileError):
    """Signal that a generated instance must be resampled (unsolvable, over cap, unfinished)."""
    pass


class ResampleExhaustedError(CompileError):
    """Exception raised when an instance could not be generated within the retry budget."""
    pass


class DatasetValidationError(CompileError):
    """Exception for dataset schema or invariant violations.

    Attributes:
        line (int, optional): 1-based line number in the JSONL file.
        field (str, optional): Name of the offending field.
    """

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        super().__init__(message)
        self.line = line
        self.field = field


class ReplayMismatchError(CompileError):
    """Exception for a replay that diverges from the stored record.

    Attributes:
        step (int, optional): 1-based index of the first divergent step.
    """

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class BatchError(CompileError):
    """Exception for records that cannot be batched together."""
    pass


class TrainingDivergenceError(CompileError):
    """Exception raised when the training loss becomes non-finite."""
    pass


class CheckpointError(CompileError):
    """Exception for unreadable or malformed checkpoints."""
    pass


class OutputWriteError(CompileError):
    """Exception for output writing errors (e.g., file I/O)."""
    pass


def raise_with_context(exc_class, message, context=None):
    """Raise an exception with additional context and log the error.

    Args:
        exc_class (Exception): Exception class to raise.
        message (str): Error message.
        context (Any, optional): Additional context to include in the log and exception message.

    Raises:
        exc_class: The exception with the provided message and context.
    """
    if context:
        logger.error(f"{exc_class.__name__}: {message} | Context: {context}")
        raise exc_class(f"{message} | Context: {context}")
    else:
        logger.error(f"{exc_class.__name__}: {message}")
        raise exc_class(message)
