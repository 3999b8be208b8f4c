"""Decorators that turn raising numerical steps into ``Result``-returning ones."""

import functools
import logging
from collections.abc import Callable
from typing import cast, overload

import numpy as np

from .exceptions import SolverError, StapSlpError
from .result import Err, Ok, Result

logger = logging.getLogger(__name__)


@overload
def resultify[**P, R](
    func: Callable[P, R],
) -> Callable[P, Result[R, StapSlpError]]: ...


@overload
def resultify[**P, R](
    *,
    step: str | None = None,
    catch_types: type[Exception] | tuple[type[Exception], ...] = Exception,
) -> Callable[[Callable[P, R]], Callable[P, Result[R, StapSlpError]]]: ...


def resultify[**P, R](
    func: Callable[P, R] | None = None,
    *,
    step: str | None = None,
    catch_types: type[Exception] | tuple[type[Exception], ...] = Exception,
) -> (
    Callable[P, Result[R, StapSlpError]]
    | Callable[[Callable[P, R]], Callable[P, Result[R, StapSlpError]]]
):
    """Wrap a function so that it returns a Result instead of raising.

    Can be used bare or with parameters::

        @resultify
        def factor(W: np.ndarray) -> np.ndarray:
            return np.linalg.cholesky(W)

        @resultify(step="x-update")
        def update_x(problem: ConvexSubproblem) -> SolveReport:
            ...

    Error routing:

    * a ``StapSlpError`` raised inside is passed through unchanged as ``Err``;
    * ``LinAlgError``/``ValueError`` go through ``StapSlpError.from_linalg``
      and keep the original exception as ``cause``;
    * any other exception matched by ``catch_types`` becomes a
      ``SolverError`` tagged with ``step`` (defaults to the function name).

    Functions already returning a ``Result`` are passed through unchanged.
    Exceptions not matched by ``catch_types`` propagate normally.
    """

    def decorator(fn: Callable[P, R]) -> Callable[P, Result[R, StapSlpError]]:
        label = step or getattr(fn, "__name__", repr(fn))

        @functools.wraps(fn)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> Result[R, StapSlpError]:
            try:
                value = fn(*args, **kwargs)
                if isinstance(value, (Ok, Err)):
                    return cast(Result[R, StapSlpError], value)
                return Ok(value)
            except StapSlpError as e:
                return Err(e)
            except (np.linalg.LinAlgError, ValueError) as e:
                logger.debug("step=%s linalg failure: %s", label, e)
                return Err(StapSlpError.from_linalg(e, label))
            except catch_types as e:
                return Err(SolverError(f"{label} failed: {e}", step=label, cause=e))

        return wrapper

    if func is not None:
        return decorator(func)
    return decorator
