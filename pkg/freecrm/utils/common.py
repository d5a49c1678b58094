"""Common utilities and decorators for freecrm.

- Error translation decorator turning arithmetic, numpy and LinAlg failures
  into ``NumericalError``
- Highlighted headings for CLI summaries
"""

from functools import wraps
from typing import Tuple

import numpy as np

from freecrm.exceptions import FreeCrmError, NumericalError, ValidationError
from .logger import Logger

logger = Logger.get_logger()


def translate_numpy_errors(func):
    """Decorator mapping arithmetic, numpy and linear-algebra failures to ``NumericalError``."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except FreeCrmError:
            raise
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
            raise NumericalError(
                f"Numerical failure in {func.__name__}: {type(e).__name__}: {e!s}"
            ) from e
        except MemoryError as e:
            raise NumericalError(f"Out of memory in {func.__name__}; reduce the matrix size") from e

    return wrapper


def create_highlighted_heading(
    msg: str,
    line_symbol: str = "━",
    total_length: int = 80,
    center_highlighter: Tuple[str, str] = (" ◀ ", " ▶ "),
) -> str:
    """Center ``msg`` between two rules of ``line_symbol``.

    Raises:
        ValidationError: If ``total_length`` is too short to hold the decoration.
    """
    if total_length < 20:
        raise ValidationError("Total length must be at least 20", field_name="total_length")

    body = f"{center_highlighter[0]}{msg}{center_highlighter[1]}"
    remaining = max(total_length - len(body), 2)
    left = remaining // 2
    return f"{line_symbol * left}{body}{line_symbol * (remaining - left)}"


__all__ = [
    "translate_numpy_errors",
    "create_highlighted_heading",
]
