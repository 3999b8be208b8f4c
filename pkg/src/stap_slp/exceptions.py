"""Exception hierarchy for stap-slp."""

import numpy as np

# ---- Base ----------------------------------------------------------------


class StapSlpError(Exception):
    """Base exception for waveform-design operations.

    Every exception in this package carries an optional ``cause`` that keeps
    the original exception, usually a raw NumPy/SciPy linear-algebra error.

    Examples:
        >>> raise StapSlpError("design failed")
        StapSlpError('design failed')

        >>> try:
        ...     np.linalg.cholesky(-np.eye(2))
        ... except np.linalg.LinAlgError as e:
        ...     raise StapSlpError("factorization failed", cause=e) from e
    """

    def __init__(self, message: str, *, cause: BaseException | None = None) -> None:
        super().__init__(message)
        self.cause = cause
        if cause is not None:
            self.__cause__ = cause

    def __repr__(self) -> str:
        if self.cause:
            return f"{type(self).__name__}({self.args[0]!r}, cause={self.cause!r})"
        return f"{type(self).__name__}({self.args[0]!r})"

    @classmethod
    def from_linalg(cls, error: Exception, operation: str) -> "StapSlpError":
        """Wrap a raw linear-algebra exception with the step that raised it.

        ``LinAlgError`` (singular or indefinite matrices) becomes a
        ``SolverError`` tagged with ``operation``; shape errors surfaced as
        ``ValueError`` become ``ModelError``. Anything else falls back to
        ``cls``.

        Examples:
            >>> err = StapSlpError.from_linalg(np.linalg.LinAlgError("not pd"), "cholesky")
            >>> type(err).__name__, err.step
            ('SolverError', 'cholesky')
        """
        subtype = _LINALG_ERROR_MAP.get(type(error))
        if subtype is SolverError:
            return SolverError(f"{operation}: {error}", step=operation, cause=error)
        if subtype is ModelError:
            return ModelError(f"{operation}: {error}", cause=error)
        return cls(f"{operation}: {error}", cause=error)


# ---- Subclasses ----------------------------------------------------------


class ValidationError(StapSlpError):
    """Raised when a configuration value or input fails a validation rule.

    ``field`` is the dotted configuration path (``"array.n_tx"``) or the
    argument name, ``value`` the offending value.

    Examples:
        >>> err = ValidationError("must be positive", field="array.n_tx", value=0)
        >>> err.field
        'array.n_tx'
    """

    def __init__(
        self,
        message: str,
        *,
        field: str | None = None,
        value: object = None,
        cause: BaseException | None = None,
    ) -> None:
        super().__init__(message, cause=cause)
        self.field = field
        self.value = value

    def __repr__(self) -> str:
        parts = [repr(self.args[0])]
        if self.field is not None:
            parts.append(f"field={self.field!r}")
        if self.value is not None:
            parts.append(f"value={self.value!r}")
        if self.cause is not None:
            parts.append(f"cause={self.cause!r}")
        return f"ValidationError({', '.join(parts)})"


class ModelError(StapSlpError):
    """Raised when signal-model objects are inconsistent.

    Dimension mismatches carry ``expected`` and ``got`` so callers can report
    both shapes without parsing the message.

    Examples:
        >>> err = ModelError("steering length", expected=(32,), got=(30,))
        >>> err.expected
        (32,)
    """

    def __init__(
        self,
        message: str,
        *,
        expected: object = None,
        got: object = None,
        cause: BaseException | None = None,
    ) -> None:
        super().__init__(message, cause=cause)
        self.expected = expected
        self.got = got

    def __repr__(self) -> str:
        parts = [repr(self.args[0])]
        if self.expected is not None:
            parts.append(f"expected={self.expected!r}")
        if self.got is not None:
            parts.append(f"got={self.got!r}")
        if self.cause is not None:
            parts.append(f"cause={self.cause!r}")
        return f"ModelError({', '.join(parts)})"


class SolverError(StapSlpError):
    """Raised when a numerical step fails.

    ``step`` names the failing stage (``"cholesky"``, ``"x-update"``,
    ``"barrier"``) so the CLI can report it without parsing the message.

    Examples:
        >>> err = SolverError("Newton system singular", step="barrier")
        >>> err.step
        'barrier'
    """

    def __init__(
        self,
        message: str,
        *,
        step: str | None = None,
        cause: BaseException | None = None,
    ) -> None:
        super().__init__(message, cause=cause)
        self.step = step

    def __repr__(self) -> str:
        parts = [repr(self.args[0])]
        if self.step is not None:
            parts.append(f"step={self.step!r}")
        if self.cause is not None:
            parts.append(f"cause={self.cause!r}")
        return f"SolverError({', '.join(parts)})"


class InfeasibleScenarioError(StapSlpError):
    """Raised when the QoS requirements cannot be met under the waveform constraints.

    ``margin`` is the best achievable minimum CI margin (negative when the
    scenario is infeasible).

    Examples:
        >>> err = InfeasibleScenarioError("QoS unreachable", margin=-0.2)
        >>> err.margin
        -0.2
    """

    def __init__(
        self,
        message: str,
        *,
        margin: float | None = None,
        cause: BaseException | None = None,
    ) -> None:
        super().__init__(message, cause=cause)
        self.margin = margin

    def __repr__(self) -> str:
        parts = [repr(self.args[0])]
        if self.margin is not None:
            parts.append(f"margin={self.margin!r}")
        if self.cause is not None:
            parts.append(f"cause={self.cause!r}")
        return f"InfeasibleScenarioError({', '.join(parts)})"


# ---- Linear-algebra error mapping ----------------------------------------

# from_linalg() uses this to route raw NumPy/SciPy errors to a subclass.
# scipy.linalg re-exports numpy.linalg.LinAlgError, so one entry covers both.
_LINALG_ERROR_MAP: dict[type[Exception], type[StapSlpError]] = {
    np.linalg.LinAlgError: SolverError,
    ValueError: ModelError,
}
