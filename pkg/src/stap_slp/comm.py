"""Multi-user downlink: channels, PSK symbols and communication constraints.

User ``k`` receives ``h_kᴴ x_j`` in time slot ``j = m·N + n``, where ``x_j`` is
the length-Nₜ block ``x[j·Nₜ:(j+1)·Nₜ]``. Constructive interference (CI)
requires the noise-free point, rotated back by the symbol phase, to lie in
the sector of half-angle Φ = π/Ω pushed out by ``σ√Γ_k``:

    Re(z) sin Φ ∓ Im(z) cos Φ >= σ √Γ_k sin Φ,   z = h_kᴴ x_j e^{-j∠s}.

Both inequalities are stored as rows ``Re{h̃ᴴ x} >= γ`` restricted to one slot.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
import polars as pl
from numpy.typing import NDArray

from .exceptions import ModelError, ValidationError
from .geometry import ArrayConfig, ComplexVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class CommSetup:
    """Users, channels and the PSK symbol block of one CPI.

    Attributes:
        channels: (K_u, Nₜ) complex, row k is h_k.
        symbol_index: (K_u, M, N) integers in ``0..Ω-1``.
        symbols: (K_u, M, N) unit-modulus PSK symbols.
        noise_power: σ² (linear).
        qos: (K_u,) per-user Γ_k (linear).
    """

    psk_order: int
    channels: NDArray[np.complex128]
    symbol_index: NDArray[np.int64]
    symbols: NDArray[np.complex128]
    noise_power: float
    qos: NDArray[np.float64]
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.psk_order < 2 or self.psk_order & (self.psk_order - 1):
            raise ValidationError(
                "PSK order must be a power of two >= 2",
                field="comm.psk_order",
                value=self.psk_order,
            )
        if self.noise_power <= 0:
            raise ValidationError("must be positive", field="comm.noise_power_db")
        if np.any(self.qos < 0):
            raise ValidationError("QoS must be nonnegative", field="comm.qos_db")
        if self.qos.shape != (self.n_users,) or self.symbols.shape[0] != self.n_users:
            raise ModelError(
                "per-user data disagree with the channel count",
                expected=(self.n_users,),
                got=(self.qos.shape, self.symbols.shape),
            )
        if np.any(np.linalg.norm(self.channels, axis=1) == 0):
            raise ModelError("channel vectors must be nonzero")

    @property
    def n_users(self) -> int:
        return int(self.channels.shape[0])

    @property
    def half_angle(self) -> float:
        return math.pi / self.psk_order

    def amplitudes(self) -> NDArray[np.float64]:
        """Per-user ``σ√Γ_k``."""
        return math.sqrt(self.noise_power) * np.sqrt(self.qos)

    def with_qos(self, qos: NDArray[np.float64]) -> CommSetup:
        return CommSetup(
            self.psk_order,
            self.channels,
            self.symbol_index,
            self.symbols,
            self.noise_power,
            np.asarray(qos, dtype=float),
            self.rng_seed,
        )

    def to_dict(self) -> dict[str, object]:
        return {
            "psk_order": self.psk_order,
            "noise_power": self.noise_power,
            "qos": self.qos.tolist(),
            "rng_seed": self.rng_seed,
            "channels": [[[z.real, z.imag] for z in h] for h in self.channels],
            "symbol_index": self.symbol_index.tolist(),
        }


def _user_streams(seed: int, n_users: int) -> list[np.random.Generator]:
    """One independent stream per user, so fewer users form a prefix."""
    children = np.random.SeedSequence(seed).spawn(n_users)
    return [np.random.default_rng(c) for c in children]


def generate_channels(n_tx: int, n_users: int, seed: int) -> NDArray[np.complex128]:
    """Rayleigh channels with i.i.d. CN(0, 1) entries, shape (K_u, Nₜ)."""
    rows = []
    for rng in _user_streams(seed, n_users):
        rows.append((rng.standard_normal(n_tx) + 1j * rng.standard_normal(n_tx)) / math.sqrt(2))
    return np.array(rows, dtype=complex).reshape(n_users, n_tx)


def psk_constellation(psk_order: int) -> ComplexVector:
    """Offset Ω-PSK points ``exp(j(2πq/Ω + π/Ω))``."""
    q = np.arange(psk_order)
    return np.exp(1j * (2 * np.pi * q / psk_order + np.pi / psk_order))


def generate_symbols(
    n_users: int, n_pulses: int, n_samples: int, psk_order: int, seed: int
) -> tuple[NDArray[np.int64], NDArray[np.complex128]]:
    """Uniform PSK symbols; returns ``(indices, symbols)`` each (K_u, M, N)."""
    if psk_order < 2:
        raise ValidationError("PSK order must be >= 2", field="comm.psk_order", value=psk_order)
    idx = np.array(
        [
            rng.integers(0, psk_order, size=(n_pulses, n_samples))
            for rng in _user_streams(seed, n_users)
        ],
        dtype=np.int64,
    ).reshape(n_users, n_pulses, n_samples)
    return idx, psk_constellation(psk_order)[idx]


def make_comm_setup(
    cfg: ArrayConfig,
    n_users: int,
    psk_order: int,
    noise_power: float,
    qos: NDArray[np.float64] | float,
    *,
    channel_seed: int,
    symbol_seed: int,
) -> CommSetup:
    idx, symbols = generate_symbols(n_users, cfg.n_pulses, cfg.n_samples, psk_order, symbol_seed)
    return CommSetup(
        psk_order=psk_order,
        channels=generate_channels(cfg.n_tx, n_users, channel_seed),
        symbol_index=idx,
        symbols=symbols,
        noise_power=noise_power,
        qos=np.broadcast_to(np.asarray(qos, dtype=float), (n_users,)).copy(),
        rng_seed=channel_seed,
    )


def _check_dims(setup: CommSetup, cfg: ArrayConfig) -> None:
    expected = (setup.n_users, cfg.n_pulses, cfg.n_samples)
    if setup.channels.shape[1] != cfg.n_tx or setup.symbols.shape != expected:
        raise ModelError(
            "communication setup does not match the array",
            expected=((setup.n_users, cfg.n_tx), expected),
            got=(setup.channels.shape, setup.symbols.shape),
        )


@dataclass(frozen=True, slots=True)
class CIConstraintSet:
    """Rows ``Re{h̃ᵢᴴ x} >= γᵢ``, each supported on one time slot.

    Row ``2i`` (``+`` cos Φ term) and ``2i + 1`` (``-``) belong to user ``k``
    and slot ``j`` with ``i = k·MN + j``. ``coeffs[i]`` is the length-Nₜ
    restriction of h̃ᵢ to ``slots[i]``.
    """

    coeffs: NDArray[np.complex128]
    slots: NDArray[np.int64]
    thresholds: NDArray[np.float64]
    n_tx: int
    n_slots: int

    def __len__(self) -> int:
        return int(self.thresholds.shape[0])

    @property
    def users(self) -> NDArray[np.int64]:
        return np.arange(len(self)) // (2 * self.n_slots)

    def dense_rows(self) -> NDArray[np.complex128]:
        """Full h̃ rows, shape (2K_uMN, MNNₜ)."""
        rows = np.zeros((len(self), self.n_slots * self.n_tx), dtype=complex)
        cols = self.slots[:, None] * self.n_tx + np.arange(self.n_tx)
        np.put_along_axis(rows, cols, self.coeffs, axis=1)
        return rows

    def l1_norms(self) -> NDArray[np.float64]:
        return np.sum(np.abs(self.coeffs), axis=1)


def build_ci_constraints(setup: CommSetup, cfg: ArrayConfig) -> CIConstraintSet:
    _check_dims(setup, cfg)
    phi = setup.half_angle
    n_slots = cfg.n_slots
    # c = h_k e^{j∠s} so that cᴴ x_j = h_kᴴ x_j e^{-j∠s}
    rot = setup.symbols.reshape(setup.n_users, n_slots) / np.abs(
        setup.symbols.reshape(setup.n_users, n_slots)
    )
    c = setup.channels[:, None, :] * rot[:, :, None]  # (K, MN, Nt)
    plus = c * (math.sin(phi) + 1j * math.cos(phi))
    minus = c * (math.sin(phi) - 1j * math.cos(phi))
    coeffs = np.stack([plus, minus], axis=2).reshape(-1, cfg.n_tx)
    slots = np.repeat(np.tile(np.arange(n_slots), setup.n_users), 2)
    gamma = np.repeat(setup.amplitudes() * math.sin(phi), 2 * n_slots)
    return CIConstraintSet(coeffs, slots.astype(np.int64), gamma, cfg.n_tx, n_slots)


def ci_margins(cset: CIConstraintSet, x: ComplexVector) -> NDArray[np.float64]:
    """``Re{h̃ᵢᴴ x} - γᵢ`` per row."""
    expected = cset.n_slots * cset.n_tx
    if x.shape != (expected,):
        raise ModelError("waveform length mismatch", expected=(expected,), got=x.shape)
    blocks = x.reshape(cset.n_slots, cset.n_tx)[cset.slots]
    return np.real(np.sum(cset.coeffs.conj() * blocks, axis=1)) - cset.thresholds


@dataclass(frozen=True, slots=True)
class ZFConstraintSet:
    """Equalities ``h_kᴴ x_j = targets[i]`` with ``i = k·MN + j``."""

    channels: NDArray[np.complex128]
    slots: NDArray[np.int64]
    targets: NDArray[np.complex128]
    n_tx: int
    n_slots: int

    def __len__(self) -> int:
        return int(self.targets.shape[0])

    def dense_rows(self) -> NDArray[np.complex128]:
        """Rows ``e`` such that ``eᴴ x = target``, shape (K_uMN, MNNₜ)."""
        rows = np.zeros((len(self), self.n_slots * self.n_tx), dtype=complex)
        cols = self.slots[:, None] * self.n_tx + np.arange(self.n_tx)
        np.put_along_axis(rows, cols, self.channels, axis=1)
        return rows

    def residuals(self, x: ComplexVector) -> NDArray[np.complex128]:
        blocks = x.reshape(self.n_slots, self.n_tx)[self.slots]
        return np.sum(self.channels.conj() * blocks, axis=1) - self.targets


def build_zf_constraints(
    setup: CommSetup, cfg: ArrayConfig, *, amplitude_boost: NDArray[np.float64] | None = None
) -> ZFConstraintSet:
    """Exact symbol reproduction ``h_kᴴ x_j = (σ√Γ_k + boost_k) s_{j,k}``."""
    _check_dims(setup, cfg)
    if setup.n_users > cfg.n_tx:
        raise ValidationError(
            "zero-forcing needs at most as many users as transmit antennas",
            field="comm.n_users",
            value=setup.n_users,
        )
    n_slots = cfg.n_slots
    amp = setup.amplitudes()
    if amplitude_boost is not None:
        amp = amp + amplitude_boost
    targets = (amp[:, None] * setup.symbols.reshape(setup.n_users, n_slots)).reshape(-1)
    channels = np.repeat(setup.channels, n_slots, axis=0)
    slots = np.tile(np.arange(n_slots), setup.n_users).astype(np.int64)
    return ZFConstraintSet(channels, slots, targets, cfg.n_tx, n_slots)


def received_points(setup: CommSetup, x: ComplexVector) -> NDArray[np.complex128]:
    """Noise-free ``h_kᴴ x_j``, shape (K_u, MN)."""
    blocks = x.reshape(-1, setup.channels.shape[1])
    return setup.channels.conj() @ blocks.T


def detect_psk(points: NDArray[np.complex128], psk_order: int) -> NDArray[np.int64]:
    """Nearest-sector decision for the offset constellation."""
    q = np.round((np.angle(points) - np.pi / psk_order) * psk_order / (2 * np.pi))
    return np.mod(q, psk_order).astype(np.int64)


@dataclass(frozen=True, slots=True)
class SerEstimate:
    user: int
    trials: int
    errors: int

    @property
    def rate(self) -> float:
        return self.errors / self.trials

    @property
    def ci95(self) -> float:
        """Normal-approximation binomial half-width."""
        p = self.rate
        return 1.96 * math.sqrt(p * (1 - p) / self.trials)


def _shard_errors(
    clean: NDArray[np.complex128],
    sent: NDArray[np.int64],
    scale: float,
    psk_order: int,
    batch: int,
    stream: np.random.SeedSequence,
) -> NDArray[np.int64]:
    rng = np.random.default_rng(stream)
    noise = scale * (
        rng.standard_normal((batch, *clean.shape))
        + 1j * rng.standard_normal((batch, *clean.shape))
    )
    decided = detect_psk(clean[None] + noise, psk_order)
    return np.sum(decided != sent[None], axis=(0, 2)).astype(np.int64)


def estimate_ser(
    setup: CommSetup,
    x: ComplexVector,
    n_trials: int,
    *,
    seed: int = 0,
    chunk: int = 4096,
    jobs: int = 1,
) -> list[SerEstimate]:
    """Monte Carlo symbol error rate over AWGN of variance σ².

    ``n_trials`` noise draws are made per slot, so each user sees
    ``n_trials · MN`` decisions. Trials are cut into shards of ``chunk``, each
    drawing from its own child of ``SeedSequence(seed)``; shards run on
    ``jobs`` processes and the counts do not depend on ``jobs``.
    """
    if n_trials < 1:
        raise ValidationError("must be >= 1", field="comm.ser_trials", value=n_trials)
    if jobs < 1:
        raise ValidationError("must be >= 1", field="jobs", value=jobs)
    clean = received_points(setup, x)  # (K, MN)
    sent = setup.symbol_index.reshape(setup.n_users, -1)
    scale = math.sqrt(setup.noise_power / 2)
    sizes = [min(chunk, n_trials - start) for start in range(0, n_trials, chunk)]
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    shard = partial(_shard_errors, clean, sent, scale, setup.psk_order)
    if jobs == 1 or len(sizes) == 1:
        counts = list(map(shard, sizes, streams))
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(sizes))) as pool:
            counts = list(pool.map(shard, sizes, streams))
    errors = np.sum(counts, axis=0)
    total = n_trials * clean.shape[1]
    logger.debug("ser shards=%d jobs=%d errors=%s", len(sizes), jobs, errors.tolist())
    return [SerEstimate(k, total, int(errors[k])) for k in range(setup.n_users)]


def ser_frame(estimates: list[SerEstimate], line: str = "") -> pl.DataFrame:
    return pl.DataFrame(
        {
            "line": [line] * len(estimates),
            "user": [e.user for e in estimates],
            "trials": [e.trials for e in estimates],
            "errors": [e.errors for e in estimates],
            "rate": [e.rate for e in estimates],
            "ci95": [e.ci95 for e in estimates],
        },
        schema={
            "line": pl.String,
            "user": pl.Int64,
            "trials": pl.Int64,
            "errors": pl.Int64,
            "rate": pl.Float64,
            "ci95": pl.Float64,
        },
    )
