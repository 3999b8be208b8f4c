"""Array geometry, target description and space-time steering vectors.

All vectors follow one layout: the space-time steering vector is
``d(f) ⊗ b(θ) ⊗ a(θ)`` (pulse-major, then receive element, then transmit
element), and spatial phases progress as ``exp(-j 2π k f_s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .exceptions import ValidationError

type ComplexVector = NDArray[np.complex128]


@dataclass(frozen=True, slots=True)
class ArrayConfig:
    """Co-located MIMO array and pulse train.

    Attributes:
        n_tx: Transmit antennas Nₜ.
        n_rx: Receive antennas N_r.
        d_tx_over_lambda: Transmit element spacing in wavelengths.
        d_rx_over_lambda: Receive element spacing in wavelengths.
        n_pulses: Pulses per coherent processing interval M.
        n_samples: Fast-time samples per pulse N.
        prf_hz: Pulse repetition frequency.
        carrier_hz: Carrier frequency.
    """

    n_tx: int
    n_rx: int
    d_tx_over_lambda: float = 2.0
    d_rx_over_lambda: float = 0.5
    n_pulses: int = 4
    n_samples: int = 8
    prf_hz: float = 1000.0
    carrier_hz: float = 2.4e9

    def __post_init__(self) -> None:
        for name in ("n_tx", "n_rx", "n_pulses", "n_samples"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValidationError(
                    f"{name} must be a positive integer", field=f"array.{name}", value=value
                )
        for name in ("d_tx_over_lambda", "d_rx_over_lambda", "prf_hz", "carrier_hz"):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(
                    f"{name} must be positive", field=f"array.{name}", value=value
                )

    @property
    def n_slots(self) -> int:
        """Transmit time slots MN (one length-Nₜ block of the waveform each)."""
        return self.n_pulses * self.n_samples

    @property
    def waveform_len(self) -> int:
        return self.n_slots * self.n_tx

    @property
    def filter_len(self) -> int:
        return self.n_slots * self.n_rx

    @property
    def steering_len(self) -> int:
        return self.n_pulses * self.n_rx * self.n_tx

    @property
    def wavelength_m(self) -> float:
        return 299_792_458.0 / self.carrier_hz

    @property
    def pri_s(self) -> float:
        return 1.0 / self.prf_hz


@dataclass(frozen=True, slots=True)
class TargetModel:
    azimuth_rad: float
    normalized_doppler: float
    power: float = 1.0

    def __post_init__(self) -> None:
        if abs(self.normalized_doppler) > 0.5:
            raise ValidationError(
                "normalized Doppler must lie in [-0.5, 0.5]",
                field="target.normalized_doppler",
                value=self.normalized_doppler,
            )
        if abs(self.azimuth_rad) > math.pi / 2:
            raise ValidationError(
                "azimuth must lie in [-pi/2, pi/2]",
                field="target.azimuth_deg",
                value=math.degrees(self.azimuth_rad),
            )
        if self.power < 0:
            raise ValidationError("power must be nonnegative", field="target.power_db")


def spatial_frequency(cfg: ArrayConfig, theta: float | NDArray[np.float64]) -> NDArray[np.float64]:
    """Receive-side normalized spatial frequency ``d_r sin θ / λ``."""
    return cfg.d_rx_over_lambda * np.sin(theta)


def azimuth_from_spatial_frequency(
    cfg: ArrayConfig, f_s: float | NDArray[np.float64]
) -> NDArray[np.float64]:
    """Inverse of :func:`spatial_frequency`; values outside the visible region are clipped."""
    return np.arcsin(np.clip(np.asarray(f_s, dtype=float) / cfg.d_rx_over_lambda, -1.0, 1.0))


def _ula_phases(n: int, spacing_over_lambda: float, theta: float) -> ComplexVector:
    k = np.arange(n)
    return np.exp(-2j * np.pi * k * spacing_over_lambda * math.sin(theta))


def steering_tx(cfg: ArrayConfig, theta: float) -> ComplexVector:
    """Transmit steering vector a(θ), length Nₜ.

    Examples:
        >>> cfg = ArrayConfig(n_tx=3, n_rx=2)
        >>> np.allclose(steering_tx(cfg, 0.0), np.ones(3))
        True
    """
    return _ula_phases(cfg.n_tx, cfg.d_tx_over_lambda, theta)


def steering_rx(cfg: ArrayConfig, theta: float) -> ComplexVector:
    """Receive steering vector b(θ), length N_r."""
    return _ula_phases(cfg.n_rx, cfg.d_rx_over_lambda, theta)


def doppler_vec(cfg: ArrayConfig, normalized_doppler: float) -> ComplexVector:
    """Doppler response d(f), element m = exp(j 2π m f T_r)."""
    m = np.arange(cfg.n_pulses)
    return np.exp(2j * np.pi * m * normalized_doppler)


def st_steering(cfg: ArrayConfig, normalized_doppler: float, theta: float) -> ComplexVector:
    """Space-time steering vector ``d(f) ⊗ b(θ) ⊗ a(θ)`` of length M N_r Nₜ."""
    return np.kron(
        doppler_vec(cfg, normalized_doppler),
        np.kron(steering_rx(cfg, theta), steering_tx(cfg, theta)),
    )


def target_steering(cfg: ArrayConfig, target: TargetModel) -> ComplexVector:
    return st_steering(cfg, target.normalized_doppler, target.azimuth_rad)


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)
