"""Clutter scenes, inner clutter covariance matrices and their rank factors."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import StrEnum

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .exceptions import ModelError, ValidationError
from .geometry import ArrayConfig, ComplexVector, spatial_frequency, st_steering
from .operators import OperatorSet

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
DEFAULT_RANK_THRESHOLD = 1e-10


class DopplerModel(StrEnum):
    ZERO = "zero"
    RIDGE = "ridge"
    RANDOM = "random"


class AzimuthMode(StrEnum):
    GRID = "grid"
    RANDOM = "random"


@dataclass(frozen=True, slots=True)
class ClutterPatch:
    azimuth_rad: float
    normalized_doppler: float


@dataclass(frozen=True, slots=True)
class ClutterScene:
    """Clutter patches for range cells ``l = -L, ..., L``.

    ``cells[i]`` holds the patches of range cell ``i - L``.
    """

    half_width_cells: int
    patches_per_cell: int
    patch_power: float
    doppler_model: DopplerModel
    cells: tuple[tuple[ClutterPatch, ...], ...]
    rng_seed: int
    ridge_slope: float = 1.0

    @property
    def cell_indices(self) -> range:
        return range(-self.half_width_cells, self.half_width_cells + 1)

    def patches(self, l: int) -> tuple[ClutterPatch, ...]:
        if abs(l) > self.half_width_cells:
            raise ValidationError(f"range cell {l} outside the scene", field="l", value=l)
        return self.cells[l + self.half_width_cells]

    def to_dict(self) -> dict[str, object]:
        return {
            "half_width_cells": self.half_width_cells,
            "patches_per_cell": self.patches_per_cell,
            "patch_power": self.patch_power,
            "doppler_model": str(self.doppler_model),
            "ridge_slope": self.ridge_slope,
            "rng_seed": self.rng_seed,
            "cells": [
                {
                    "l": l,
                    "azimuth_rad": [p.azimuth_rad for p in cell],
                    "normalized_doppler": [p.normalized_doppler for p in cell],
                }
                for l, cell in zip(self.cell_indices, self.cells, strict=True)
            ],
        }


def _wrap_doppler(f: NDArray[np.float64]) -> NDArray[np.float64]:
    """Fold normalized Dopplers into [-0.5, 0.5)."""
    return (f + 0.5) % 1.0 - 0.5


def generate_scene(
    cfg: ArrayConfig,
    half_width_cells: int,
    patches_per_cell: int,
    patch_power: float,
    doppler_model: DopplerModel = DopplerModel.RIDGE,
    seed: int = 0,
    *,
    azimuth_mode: AzimuthMode = AzimuthMode.GRID,
    ridge_slope: float = 1.0,
) -> ClutterScene:
    """Draw a reproducible clutter scene.

    Grid mode places ``N_c`` patches at ``-π/2 + kπ/N_c``; random mode draws
    them uniformly in ``[-π/2, π/2)``. Patch Dopplers follow ``doppler_model``:
    zero, the ridge ``β · d_r sin θ / λ`` or uniform in ``[-0.5, 0.5)``.
    """
    if half_width_cells < 0:
        raise ValidationError("must be nonnegative", field="clutter.half_width_cells")
    if patches_per_cell < 1:
        raise ValidationError("must be positive", field="clutter.patches_per_cell")
    if patch_power < 0:
        raise ValidationError("must be nonnegative", field="clutter.patch_power_db")

    rng = np.random.default_rng(seed)
    cells = []
    for _ in range(2 * half_width_cells + 1):
        if azimuth_mode is AzimuthMode.GRID:
            theta = -math.pi / 2 + np.arange(patches_per_cell) * math.pi / patches_per_cell
        else:
            theta = rng.uniform(-math.pi / 2, math.pi / 2, patches_per_cell)
        match doppler_model:
            case DopplerModel.ZERO:
                f = np.zeros(patches_per_cell)
            case DopplerModel.RIDGE:
                f = _wrap_doppler(ridge_slope * spatial_frequency(cfg, theta))
            case DopplerModel.RANDOM:
                f = rng.uniform(-0.5, 0.5, patches_per_cell)
        cells.append(
            tuple(ClutterPatch(float(a), float(d)) for a, d in zip(theta, f, strict=True))
        )
    logger.debug(
        "clutter scene cells=%d patches=%d model=%s",
        len(cells),
        patches_per_cell,
        doppler_model,
    )
    return ClutterScene(
        half_width_cells=half_width_cells,
        patches_per_cell=patches_per_cell,
        patch_power=patch_power,
        doppler_model=DopplerModel(doppler_model),
        cells=tuple(cells),
        rng_seed=seed,
        ridge_slope=ridge_slope,
    )


@dataclass(frozen=True, slots=True)
class InnerCCM:
    """Inner clutter covariance ``M_l`` of range cell ``l`` in steering space.

    ``rank_factors`` has shape (R_l, MN_rNₜ) with ``Σ_r u_r u_rᴴ ≈ M_l``;
    it is empty until :func:`rank_factorize` runs.
    """

    cell_index: int
    matrix: NDArray[np.complex128]
    rank_factors: NDArray[np.complex128] = field(
        default_factory=lambda: np.zeros((0, 0), dtype=complex)
    )

    @property
    def rank(self) -> int:
        return int(self.rank_factors.shape[0])


def inner_ccm(cfg: ArrayConfig, scene: ClutterScene, l: int) -> InnerCCM:
    """``M_l = σ_c² Σ_k u_k u_kᴴ`` over the patches of range cell ``l``."""
    patches = scene.patches(l)
    U = np.stack([st_steering(cfg, p.normalized_doppler, p.azimuth_rad) for p in patches])
    matrix = scene.patch_power * (U.T @ U.conj())
    return InnerCCM(cell_index=l, matrix=matrix)


def rank_factorize(m: InnerCCM, rel_threshold: float = DEFAULT_RANK_THRESHOLD) -> InnerCCM:
    """Keep eigenpairs with ``λ >= rel_threshold · λ_max`` as factors ``√λ ũ``."""
    matrix = m.matrix
    asym = np.max(np.abs(matrix - matrix.conj().T), initial=0.0)
    scale = max(np.max(np.abs(matrix), initial=0.0), 1.0)
    if asym > HERMITIAN_TOL * scale:
        raise ModelError("inner CCM is not Hermitian", expected=0.0, got=float(asym))
    dim = matrix.shape[0]
    evals, evecs = scipy.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    lam_max = evals[-1] if evals.size else 0.0
    if lam_max <= 0:
        return replace(m, rank_factors=np.zeros((0, dim), dtype=complex))
    keep = evals >= rel_threshold * lam_max
    factors = (evecs[:, keep] * np.sqrt(evals[keep])).T
    return replace(m, rank_factors=np.ascontiguousarray(factors[::-1]))


def scene_ccms(
    cfg: ArrayConfig, scene: ClutterScene, rel_threshold: float = DEFAULT_RANK_THRESHOLD
) -> list[InnerCCM]:
    ccms = [rank_factorize(inner_ccm(cfg, scene, l), rel_threshold) for l in scene.cell_indices]
    logger.debug("clutter ranks=%s", [c.rank for c in ccms])
    return ccms


def clutter_cells(ccms: list[InnerCCM]) -> list[tuple[int, NDArray[np.complex128]]]:
    """``(l, factors)`` pairs for :meth:`OperatorSet.from_factors`."""
    return [(c.cell_index, c.rank_factors) for c in ccms if c.rank]


def full_ccm(ops: OperatorSet, x: ComplexVector) -> NDArray[np.complex128]:
    """Clutter covariance ``R_c = Σ_f (A_f x)(A_f x)ᴴ`` in echo space."""
    Y = ops.apply_clutter(x)
    return Y.T @ Y.conj()
