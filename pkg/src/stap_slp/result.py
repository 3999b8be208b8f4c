"""Railway-oriented ``Result`` used by the fallible design pipeline stages.

Stages that can legitimately fail on valid input (an infeasible QoS target,
a diverging inner solve) return ``Ok(value)`` or ``Err(error)`` instead of
raising, so sweeps can record a failed point and keep going. Code that sits
inside another fallible stage re-raises with :meth:`Err.unwrap_or_raise`,
which keeps the original :class:`~stap_slp.exceptions.StapSlpError` type
(and so the CLI exit code) intact.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass
from typing import Never


@dataclass(frozen=True, slots=True)
class Ok[T]:
    value: T

    def is_ok(self) -> bool:
        return True

    def is_err(self) -> bool:
        return False

    def __bool__(self) -> bool:
        return True

    def unwrap(self) -> T:
        return self.value

    def unwrap_err(self) -> Never:
        raise ValueError(f"Called unwrap_err on an Ok value: {self.value!r}")

    def unwrap_or_raise(self) -> T:
        return self.value

    def map[U, E](self, fn: Callable[[T], U]) -> Result[U, E]:
        return Ok(fn(self.value))

    def and_then[E, U](self, fn: Callable[[T], Result[U, E]]) -> Result[U, E]:
        return fn(self.value)

    def inspect_err[E](self, f: Callable[[E], None]) -> Ok[T]:
        return self


@dataclass(frozen=True, slots=True)
class Err[E]:
    error: E

    def is_ok(self) -> bool:
        return False

    def is_err(self) -> bool:
        return True

    def __bool__(self) -> bool:
        return False

    def unwrap(self) -> Never:
        raise ValueError(f"Called unwrap on an Err value: {self.error!r}")

    def unwrap_err(self) -> E:
        return self.error

    def unwrap_or_raise(self) -> Never:
        """Raise the carried exception itself; non-exceptions raise ``ValueError``."""
        if isinstance(self.error, BaseException):
            raise self.error
        raise ValueError(f"Called unwrap_or_raise on an Err value: {self.error!r}")

    def map[T, U](self, fn: Callable[[T], U]) -> Result[U, E]:
        return self

    def and_then[T, U](self, fn: Callable[[T], Result[U, E]]) -> Result[U, E]:
        return self

    def inspect_err(self, f: Callable[[E], None]) -> Err[E]:
        """Calls ``f`` with the error (typically a logger) and returns self."""
        f(self.error)
        return self


type Result[T, E] = Ok[T] | Err[E]


def partition[K, T, E](
    results: Iterable[tuple[K, Result[T, E]]],
) -> tuple[dict[K, T], dict[K, E]]:
    """Split keyed results into successes and failures, keeping key order.

    Examples:
        >>> partition([("cm/ci", Ok(1.5)), ("cm/zf", Err("infeasible"))])
        ({'cm/ci': 1.5}, {'cm/zf': 'infeasible'})
    """
    done: dict[K, T] = {}
    failed: dict[K, E] = {}
    for key, result in results:
        match result:
            case Ok(value):
                done[key] = value
            case Err(error):
                failed[key] = error
    return done, failed
