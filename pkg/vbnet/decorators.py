import time
from functools import wraps

from loguru import logger


def log_elapsed(label: str = None, level: str = "INFO"):
    """
    Logs the wall time taken by the decorated function.

    Args:
        label (str, optional): Name used in the log line; defaults to the function name.
        level (str): Loguru level of the log line.
    """

    def decorator(func):
        name = label or func.__name__

        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                delta = time.perf_counter() - start_time
                logger.log(level, f"{name} finished in {delta:.1f}s")

        return wrapper

    return decorator
