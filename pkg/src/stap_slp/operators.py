"""Linear operators mapping the waveform vector to filter-space echoes.

The waveform is ``x = vec(X)`` with ``X = [X₁, ..., X_M]`` (Nₜ × MN), so entry
``(m·N + n)·Nₜ + t`` holds ``X_m[t, n]``. Echo vectors (length MNN_r) are
indexed ``m·N·N_r + r·N + n``.

For a steering-space vector ``u`` (length MN_rNₜ) the echo ``X̄u`` is built
without materializing ``X̄``: with ``arr[m, n, t] = X_m[t, n]`` and
``U[m, r, t] = u[m·N_r·Nₜ + r·Nₜ + t]``,

    (X̄u)[m, r, n] = Σ_t arr[m, n, t] · U[m, r, t].

A range shift ``J̄_l`` then moves every length-N segment by ``l`` samples.
The dense forms exist for verification only.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .exceptions import ModelError
from .geometry import ArrayConfig, ComplexVector

logger = logging.getLogger(__name__)


def shift_matrix(n: int, l: int) -> NDArray[np.float64]:
    """Shift matrix J_l with ones where ``i - j + l = 0``; zero when ``|l| >= n``.

    Examples:
        >>> shift_matrix(3, 1)
        array([[0., 1., 0.],
               [0., 0., 1.],
               [0., 0., 0.]])
    """
    return np.eye(n, k=l)


def permutation_T(n_tx: int, n: int) -> NDArray[np.float64]:
    """Permutation with ``vec(Xᵀ) = T · vec(X)`` for any Nₜ × N matrix X."""
    order = np.arange(n_tx * n).reshape(n, n_tx).T.ravel()
    return np.eye(n_tx * n)[order]


def shift_segments(values: NDArray, l: int) -> NDArray:
    """Apply J_lᵀ to every length-N segment along the last axis: ``out[k] = v[k - l]``."""
    if l == 0:
        return values
    out = np.zeros_like(values)
    n = values.shape[-1]
    if abs(l) >= n:
        return out
    if l > 0:
        out[..., l:] = values[..., :-l]
    else:
        out[..., :l] = values[..., -l:]
    return out


def unshift_segments(values: NDArray, l: int) -> NDArray:
    """Apply J_l to every segment: ``out[k] = v[k + l]`` (adjoint of :func:`shift_segments`)."""
    return shift_segments(values, -l)


def _check_len(name: str, vector: NDArray, expected: int) -> None:
    if vector.shape[-1] != expected:
        raise ModelError(f"{name} length mismatch", expected=(expected,), got=vector.shape)


@dataclass(frozen=True, slots=True)
class StOperator:
    """Implicit operator ``x ↦ J̄_l X̄ u`` for one steering-space factor ``u``.

    ``shift = 0`` gives the target operator A₀; a clutter factor ``u_{l,r}``
    in range cell ``l`` gives A_{l,r}.
    """

    cfg: ArrayConfig
    factor: ComplexVector
    shift: int = 0

    def __post_init__(self) -> None:
        _check_len("steering factor", self.factor, self.cfg.steering_len)

    def _factor_blocks(self) -> NDArray[np.complex128]:
        c = self.cfg
        return self.factor.reshape(c.n_pulses, c.n_rx, c.n_tx)

    def apply(self, x: ComplexVector) -> ComplexVector:
        c = self.cfg
        _check_len("waveform", x, c.waveform_len)
        arr = x.reshape(c.n_pulses, c.n_samples, c.n_tx)
        echo = np.einsum("mnt,mrt->mrn", arr, self._factor_blocks())
        return shift_segments(echo, self.shift).reshape(-1)

    def adjoint(self, y: ComplexVector) -> ComplexVector:
        c = self.cfg
        _check_len("echo", y, c.filter_len)
        echo = unshift_segments(y.reshape(c.n_pulses, c.n_rx, c.n_samples), self.shift)
        return np.einsum("mrn,mrt->mnt", echo, self._factor_blocks().conj()).reshape(-1)

    def to_dense(self) -> NDArray[np.complex128]:
        """Dense matrix ``J̄_l · blkdiag((U_mᵀ ⊗ I_N) T)``."""
        c = self.cfg
        T = permutation_T(c.n_tx, c.n_samples)
        blocks = []
        for m in range(c.n_pulses):
            u_m = self.factor[m * c.n_rx * c.n_tx : (m + 1) * c.n_rx * c.n_tx]
            U_m = u_m.reshape(c.n_rx, c.n_tx).T  # vec(U_m) = u_m, column-major
            blocks.append(np.kron(U_m.T, np.eye(c.n_samples)) @ T)
        dense = scipy.linalg.block_diag(*blocks)
        J_bar = np.kron(np.eye(c.n_pulses * c.n_rx), shift_matrix(c.n_samples, self.shift).T)
        return J_bar @ dense


def build_target_operator(cfg: ArrayConfig, u0: ComplexVector) -> StOperator:
    return StOperator(cfg, np.asarray(u0, dtype=complex), 0)


def build_clutter_operator(cfg: ArrayConfig, l: int, u_lr: ComplexVector) -> StOperator:
    return StOperator(cfg, np.asarray(u_lr, dtype=complex), l)


def waveform_block_matrix(cfg: ArrayConfig, x: ComplexVector) -> NDArray[np.complex128]:
    """Definitional ``X̄ = blkdiag(I_{N_r} ⊗ X_mᵀ)`` of shape MNN_r × MN_rNₜ."""
    _check_len("waveform", x, cfg.waveform_len)
    arr = x.reshape(cfg.n_pulses, cfg.n_samples, cfg.n_tx)
    blocks = [np.kron(np.eye(cfg.n_rx), arr[m]) for m in range(cfg.n_pulses)]
    return scipy.linalg.block_diag(*blocks)


@dataclass(frozen=True, slots=True)
class OperatorSet:
    """Target operator plus every clutter factor operator, stored implicitly.

    Clutter factors are kept stacked (``factors[f]`` with range shift
    ``shifts[f]``) so a whole echo matrix ``Y = [A_f x]`` is one einsum per
    distinct shift.
    """

    cfg: ArrayConfig
    target_steering: ComplexVector
    shifts: NDArray[np.int64]
    factors: NDArray[np.complex128]
    noise_power: float
    a0: StOperator = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "a0", build_target_operator(self.cfg, self.target_steering))
        if self.factors.ndim != 2 or self.factors.shape[0] != self.shifts.shape[0]:
            raise ModelError(
                "clutter factors and shifts disagree",
                expected=(self.shifts.shape[0], self.cfg.steering_len),
                got=self.factors.shape,
            )
        if self.factors.shape[0]:
            _check_len("clutter factor", self.factors, self.cfg.steering_len)
        if self.noise_power < 0:
            raise ModelError("receiver noise power must be nonnegative", got=self.noise_power)

    @classmethod
    def from_factors(
        cls,
        cfg: ArrayConfig,
        target_steering: ComplexVector,
        cells: Sequence[tuple[int, NDArray[np.complex128]]],
        noise_power: float,
    ) -> OperatorSet:
        """Stack ``(l, factors_l)`` pairs, ``factors_l`` of shape (R_l, MN_rNₜ)."""
        shifts = [np.full(f.shape[0], l, dtype=np.int64) for l, f in cells]
        mats = [np.asarray(f, dtype=complex).reshape(-1, cfg.steering_len) for _, f in cells]
        return cls(
            cfg=cfg,
            target_steering=np.asarray(target_steering, dtype=complex),
            shifts=np.concatenate(shifts) if shifts else np.zeros(0, dtype=np.int64),
            factors=np.vstack(mats) if mats else np.zeros((0, cfg.steering_len), dtype=complex),
            noise_power=noise_power,
        )

    @property
    def n_factors(self) -> int:
        return int(self.factors.shape[0])

    def apply_clutter(self, x: ComplexVector) -> NDArray[np.complex128]:
        """Echo matrix of shape (F, MNN_r) with row f equal to A_f x."""
        c = self.cfg
        _check_len("waveform", x, c.waveform_len)
        out = np.zeros((self.n_factors, c.n_pulses, c.n_rx, c.n_samples), dtype=complex)
        if not self.n_factors:
            return out.reshape(0, c.filter_len)
        arr = x.reshape(c.n_pulses, c.n_samples, c.n_tx)
        blocks = self.factors.reshape(-1, c.n_pulses, c.n_rx, c.n_tx)
        echo = np.einsum("mnt,fmrt->fmrn", arr, blocks)
        for l in np.unique(self.shifts):
            rows = self.shifts == l
            out[rows] = shift_segments(echo[rows], int(l))
        return out.reshape(self.n_factors, c.filter_len)

    def adjoint_clutter(self, y: ComplexVector) -> NDArray[np.complex128]:
        """Rows ``A_fᴴ y`` for one echo-space vector y, shape (F, MNNₜ)."""
        c = self.cfg
        _check_len("echo", y, c.filter_len)
        if not self.n_factors:
            return np.zeros((0, c.waveform_len), dtype=complex)
        echo = y.reshape(c.n_pulses, c.n_rx, c.n_samples)
        blocks = self.factors.reshape(-1, c.n_pulses, c.n_rx, c.n_tx).conj()
        out = np.empty((self.n_factors, c.n_pulses, c.n_samples, c.n_tx), dtype=complex)
        for l in np.unique(self.shifts):
            rows = self.shifts == l
            moved = unshift_segments(echo, int(l))
            out[rows] = np.einsum("mrn,fmrt->fmnt", moved, blocks[rows])
        return out.reshape(self.n_factors, c.waveform_len)
