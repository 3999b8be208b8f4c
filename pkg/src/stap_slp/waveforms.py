"""Waveform constraint variants, the LFM reference, exact projections and audits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import StrEnum

import numpy as np

from .comm import CIConstraintSet, ZFConstraintSet, ci_margins
from .exceptions import ValidationError
from .geometry import ArrayConfig, ComplexVector


class VariantKind(StrEnum):
    CM = "cm"
    PAPR = "papr"
    CMS = "cms"

    @property
    def strictness(self) -> int:
        """Smaller means a smaller feasible set: CMS ⊂ CM ⊂ PAPR."""
        return {VariantKind.CMS: 0, VariantKind.CM: 1, VariantKind.PAPR: 2}[self]


@dataclass(frozen=True, slots=True)
class ConstraintVariant:
    """Nonconvex waveform constraint.

    ``CM``: ``|x_j| = √(P/n)``. ``PAPR``: ``‖x‖² = P`` and
    ``|x_j|² <= (1 + ε) P/n``. ``CMS``: constant modulus plus
    ``|x_j - x₀_j| <= ξ`` around a constant-modulus reference.
    """

    kind: VariantKind
    total_power: float
    papr_eps: float = 0.0
    similarity_xi: float = math.inf
    reference: ComplexVector | None = None

    def __post_init__(self) -> None:
        if not self.total_power > 0:
            raise ValidationError(
                "must be positive", field="variant.total_power", value=self.total_power
            )
        if self.papr_eps < 0:
            raise ValidationError("must be nonnegative", field="variant.papr_eps")
        if self.similarity_xi < 0:
            raise ValidationError("must be nonnegative", field="variant.similarity_xi")
        if self.kind is VariantKind.CMS and self.reference is None:
            raise ValidationError("similarity variant needs a reference", field="variant.kind")

    @classmethod
    def cm(cls, total_power: float) -> ConstraintVariant:
        return cls(VariantKind.CM, total_power)

    @classmethod
    def papr(cls, total_power: float, eps: float) -> ConstraintVariant:
        return cls(VariantKind.PAPR, total_power, papr_eps=eps)

    @classmethod
    def cms(cls, total_power: float, xi: float, reference: ComplexVector) -> ConstraintVariant:
        return cls(VariantKind.CMS, total_power, similarity_xi=xi, reference=reference)

    def modulus(self, n: int) -> float:
        return math.sqrt(self.total_power / n)

    def peak_modulus(self, n: int) -> float:
        return math.sqrt((1.0 + self.papr_eps) * self.total_power / n)


def build_reference_lfm(cfg: ArrayConfig, total_power: float) -> ComplexVector:
    """Orthogonal LFM reference ``X₀(i, j) = √(P/n) e^{j2πi(j-1)/Nₜ} e^{jπ(j-1)²/Nₜ}``.

    ``i = 1..Nₜ`` and ``j = 1..MN`` are 1-based; returns ``vec(X₀)``.
    """
    if not total_power > 0:
        raise ValidationError("must be positive", field="variant.total_power")
    nt = cfg.n_tx
    i = np.arange(1, nt + 1)[:, None]
    j = np.arange(1, cfg.n_slots + 1)[None, :]
    amp = math.sqrt(total_power / cfg.waveform_len)
    X0 = amp * np.exp(2j * np.pi * i * (j - 1) / nt) * np.exp(1j * np.pi * (j - 1) ** 2 / nt)
    return X0.ravel(order="F")


def _phases(x: ComplexVector) -> ComplexVector:
    mag = np.abs(x)
    return np.where(mag > 0, x / np.where(mag > 0, mag, 1.0), 1.0 + 0j)


def snap_constant_modulus(x: ComplexVector, modulus: float) -> ComplexVector:
    """Set every modulus to ``modulus`` keeping phases (phase 0 for zeros)."""
    return modulus * _phases(x)


def snap_papr(x: ComplexVector, total_power: float, eps: float) -> ComplexVector:
    """Rescale to ``‖x‖² = P`` while clipping entries above the PAPR peak.

    Clipped entries sit at the peak; the rest share the remaining power.
    """
    n = x.shape[0]
    peak = math.sqrt((1.0 + eps) * total_power / n)
    mag, phase = np.abs(x), _phases(x)
    if not np.any(mag):
        return snap_constant_modulus(x, math.sqrt(total_power / n))
    fixed = np.zeros(n, dtype=bool)
    new = mag
    for _ in range(n):
        free = ~fixed
        free_power = total_power - fixed.sum() * peak**2
        free_energy = float(np.sum(mag[free] ** 2))
        if free_energy <= 0 or free_power <= 0:
            new = np.where(fixed, peak, math.sqrt(max(free_power, 0.0) / max(free.sum(), 1)))
            break
        new = np.where(fixed, peak, mag * math.sqrt(free_power / free_energy))
        over = (new > peak * (1 + 1e-12)) & free
        if not np.any(over):
            break
        fixed |= over
    return new * phase


def snap_to_variant(variant: ConstraintVariant, x: ComplexVector) -> ComplexVector:
    n = x.shape[0]
    if variant.kind is VariantKind.PAPR:
        return snap_papr(x, variant.total_power, variant.papr_eps)
    return snap_constant_modulus(x, variant.modulus(n))


def papr(x: ComplexVector) -> float:
    """Peak-to-average power ratio ``max|x_j|² / (‖x‖²/n)``."""
    power = float(np.sum(np.abs(x) ** 2))
    if power == 0:
        return math.inf
    return float(np.max(np.abs(x) ** 2)) * x.shape[0] / power


@dataclass(frozen=True, slots=True)
class FeasibilityReport:
    min_ci_margin: float | None
    max_modulus_deviation: float
    papr: float
    max_similarity_deviation: float | None
    total_power: float
    zf_residual: float | None = None

    def to_dict(self) -> dict[str, float | None]:
        return asdict(self)


def feasibility_report(
    variant: ConstraintVariant,
    x: ComplexVector,
    cset: CIConstraintSet | None = None,
    zf: ZFConstraintSet | None = None,
) -> FeasibilityReport:
    n = x.shape[0]
    similarity = margin = None
    if variant.reference is not None:
        similarity = float(np.max(np.abs(x - variant.reference)))
    if cset is not None and len(cset):
        margin = float(np.min(ci_margins(cset, x)))
    return FeasibilityReport(
        min_ci_margin=margin,
        max_modulus_deviation=float(np.max(np.abs(np.abs(x) - variant.modulus(n)))),
        papr=papr(x),
        max_similarity_deviation=similarity,
        total_power=float(np.sum(np.abs(x) ** 2)),
        zf_residual=None if zf is None else float(np.max(np.abs(zf.residuals(x)))),
    )


def satisfies_variant(variant: ConstraintVariant, x: ComplexVector, *, tol: float = 1e-9) -> bool:
    """Exact variant membership up to a relative tolerance."""
    n = x.shape[0]
    P = variant.total_power
    report = feasibility_report(variant, x)
    if variant.kind is VariantKind.PAPR:
        return (
            abs(report.total_power - P) <= tol * P
            and report.papr <= (1 + variant.papr_eps) * (1 + tol)
        )
    ok = report.max_modulus_deviation <= tol * variant.modulus(n)
    if variant.kind is VariantKind.CMS and report.max_similarity_deviation is not None:
        ok = ok and report.max_similarity_deviation <= variant.similarity_xi * (1 + tol)
    return ok
