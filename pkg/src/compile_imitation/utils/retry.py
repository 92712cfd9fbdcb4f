"""
Bounded resampling for instance generators.
"""

import logging
from functools import wraps
from typing import Any, Callable, TypeVar

from .error_helpers import ResampleError, ResampleExhaustedError

logger = logging.getLogger(__name__)

T = TypeVar('T')


def resample_on_failure(
    max_attempts: int = 100,
    exceptions: tuple = (ResampleError,),
) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """
    Decorator that re-invokes a generator with an increasing ``attempt`` keyword.

    The wrapped function must accept ``attempt`` and derive its randomness from it,
    so every retry is deterministic given the caller's arguments.

    Args:
        max_attempts (int): Maximum number of attempts before giving up
        exceptions (tuple): Tuple of exceptions that request a resample

    Returns:
        Callable: Decorated function

    Raises:
        ResampleExhaustedError: If every attempt requested a resample.
    """
    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> T:
            first = kwargs.pop("attempt", 0)
            last_exception = None
            for attempt in range(first, first + max_attempts):
                try:
                    return func(*args, attempt=attempt, **kwargs)
                except exceptions as e:
                    last_exception = e
                    logger.debug(f"{func.__name__}: attempt {attempt} resampled ({e})")
            raise ResampleExhaustedError(
                f"{func.__name__} failed after {max_attempts} attempts: {last_exception}"
            )

        return wrapper
    return decorator
