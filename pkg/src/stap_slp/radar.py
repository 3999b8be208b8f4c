"""Radar-side evaluation: interference covariance, MVDR filter, SINR, ambiguity.

Every inverse of the interference-plus-noise covariance

    W(x) = Σ_f (A_f x)(A_f x)ᴴ + σ_r² I

goes through one Cholesky factorization (``scipy.linalg.cho_factor``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import polars as pl
import scipy.linalg
from numpy.typing import NDArray

from .exceptions import SolverError, ValidationError
from .geometry import (
    ArrayConfig,
    ComplexVector,
    azimuth_from_spatial_frequency,
    doppler_vec,
    steering_rx,
    steering_tx,
)
from .operators import OperatorSet

logger = logging.getLogger(__name__)


def interference_covariance(ops: OperatorSet, x: ComplexVector) -> NDArray[np.complex128]:
    Y = ops.apply_clutter(x)
    W = Y.T @ Y.conj()
    W[np.diag_indices_from(W)] += ops.noise_power
    return W


@dataclass(frozen=True, slots=True)
class EchoSolve:
    """Target echo ``s = A₀x`` together with ``q = W⁻¹s`` and ``g = sᴴq``."""

    echo: ComplexVector
    whitened: ComplexVector
    objective: float


def solve_echo(ops: OperatorSet, x: ComplexVector) -> EchoSolve:
    if ops.noise_power <= 0:
        raise SolverError(
            "receiver noise power must be positive for W to be invertible", step="cholesky"
        )
    W = interference_covariance(ops, x)
    s = ops.a0.apply(x)
    try:
        factor = scipy.linalg.cho_factor(W, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise SolverError(f"covariance factorization failed: {e}", step="cholesky", cause=e) from e
    q = scipy.linalg.cho_solve(factor, s, check_finite=False)
    return EchoSolve(echo=s, whitened=q, objective=float(np.real(np.vdot(s, q))))


def concentrated_objective(ops: OperatorSet, x: ComplexVector) -> float:
    """``g(x) = (A₀x)ᴴ W(x)⁻¹ (A₀x)``; output SINR under MVDR is ``σ₀² g(x)``."""
    return solve_echo(ops, x).objective


def mvdr_filter(ops: OperatorSet, x: ComplexVector) -> ComplexVector:
    """``w = W⁻¹A₀x / ((A₀x)ᴴ W⁻¹ A₀x)``, so that ``wᴴA₀x = 1``."""
    sol = solve_echo(ops, x)
    if sol.objective <= 0:
        raise SolverError("target echo vanishes; MVDR filter undefined", step="mvdr")
    return sol.whitened / sol.objective


def output_sinr(
    ops: OperatorSet, target_power: float, x: ComplexVector, w: ComplexVector
) -> float:
    """Linear output SINR ``σ₀²|wᴴA₀x|² / (wᴴ W w)``."""
    if not np.any(w):
        raise ValidationError("receive filter is zero", field="w")
    Y = ops.apply_clutter(x)
    clutter = float(np.sum(np.abs(Y.conj() @ w) ** 2))
    denom = clutter + ops.noise_power * float(np.real(np.vdot(w, w)))
    gain = abs(np.vdot(w, ops.a0.apply(x))) ** 2
    return target_power * gain / denom


def sinr_db(ops: OperatorSet, target_power: float, x: ComplexVector) -> float:
    return float(10.0 * np.log10(target_power * concentrated_objective(ops, x)))


def cross_ambiguity(
    cfg: ArrayConfig,
    x: ComplexVector,
    w: ComplexVector,
    doppler_grid: NDArray[np.float64],
    spatial_grid: NDArray[np.float64],
) -> NDArray[np.float64]:
    """``|wᴴ X̄ u(f_d, θ)|²`` on a grid, shape (len(doppler_grid), len(spatial_grid)).

    ``spatial_grid`` holds receive spatial frequencies ``d_r sin θ / λ``.
    The factorization ``(X̄u)[m, r, n] = d_m b_r Σ_t X_m[t, n] a_t`` keeps the
    cost at one small einsum per grid axis.
    """
    if not len(doppler_grid) or not len(spatial_grid):
        raise ValidationError("ambiguity grid must be nonempty", field="grid")
    thetas = azimuth_from_spatial_frequency(cfg, spatial_grid)
    A = np.stack([steering_tx(cfg, float(t)) for t in thetas])  # (S, Nt)
    B = np.stack([steering_rx(cfg, float(t)) for t in thetas])  # (S, Nr)
    D = np.stack([doppler_vec(cfg, float(f)) for f in doppler_grid])  # (F, M)
    arr = x.reshape(cfg.n_pulses, cfg.n_samples, cfg.n_tx)
    Wf = w.reshape(cfg.n_pulses, cfg.n_rx, cfg.n_samples).conj()
    C = np.einsum("mnt,st->smn", arr, A)
    Z = np.einsum("mrn,sr,smn->sm", Wf, B, C)
    return np.abs(D @ Z.T) ** 2


def ambiguity_frame(
    cfg: ArrayConfig,
    x: ComplexVector,
    w: ComplexVector,
    points: int = 101,
    *,
    reference: float | None = None,
) -> pl.DataFrame:
    """Ambiguity map in dB over ``[-0.5, 0.5]²`` normalized to ``reference`` (default 1)."""
    grid = np.linspace(-0.5, 0.5, points)
    values = cross_ambiguity(cfg, x, w, grid, grid)
    ref = 1.0 if reference is None else reference
    fd, fs = np.meshgrid(grid, grid, indexing="ij")
    return pl.DataFrame(
        {
            "norm_doppler": fd.ravel(),
            "norm_spatial_freq": fs.ravel(),
            "value_db": 10.0 * np.log10(np.maximum(values.ravel() / ref, 1e-30)),
        }
    )
