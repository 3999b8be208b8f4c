"""Tests for channels, PSK symbols and the CI/ZF constraint sets."""

import math

import numpy as np
import polars as pl
import pytest

from stap_slp.comm import (
    CommSetup,
    build_ci_constraints,
    build_zf_constraints,
    ci_margins,
    detect_psk,
    estimate_ser,
    generate_channels,
    generate_symbols,
    make_comm_setup,
    psk_constellation,
    received_points,
    ser_frame,
)
from stap_slp.exceptions import ModelError, ValidationError
from stap_slp.geometry import ArrayConfig

from .conftest import crandn


@pytest.fixture
def cfg() -> ArrayConfig:
    return ArrayConfig(n_tx=3, n_rx=2, n_pulses=2, n_samples=3)


@pytest.fixture
def setup(cfg: ArrayConfig) -> CommSetup:
    return make_comm_setup(cfg, 2, 4, 0.01, 10 ** 0.5, channel_seed=1, symbol_seed=2)


def _zero_forcing(setup: CommSetup, cfg: ArrayConfig, boost: np.ndarray | None = None):
    zf = build_zf_constraints(setup, cfg, amplitude_boost=boost)
    x, *_ = np.linalg.lstsq(zf.dense_rows().conj(), zf.targets, rcond=None)
    return zf, x


class TestGeneration:
    """Seeded channels and symbols."""

    def test_channels_form_a_prefix(self) -> None:
        """Test that fewer users reuse the first users' channels."""
        np.testing.assert_array_equal(generate_channels(4, 2, 9), generate_channels(4, 3, 9)[:2])

    def test_symbols_form_a_prefix(self) -> None:
        """Test that fewer users reuse the first users' symbols."""
        idx2, _ = generate_symbols(2, 2, 3, 8, seed=5)
        idx3, _ = generate_symbols(3, 2, 3, 8, seed=5)
        np.testing.assert_array_equal(idx2, idx3[:2])

    def test_constellation(self) -> None:
        """Test the offset unit-modulus QPSK points."""
        points = psk_constellation(4)
        np.testing.assert_allclose(np.abs(points), 1.0)
        assert np.angle(points[0]) == pytest.approx(math.pi / 4)

    @pytest.mark.parametrize("order", [2, 4, 8, 16])
    def test_detection_recovers_indices(self, order: int) -> None:
        """Test that noise-free points decide to their own index."""
        points = 3.0 * psk_constellation(order)
        np.testing.assert_array_equal(detect_psk(points, order), np.arange(order))

    def test_bad_psk_order(self, cfg: ArrayConfig) -> None:
        """Test that PSK orders must be powers of two."""
        with pytest.raises(ValidationError) as info:
            make_comm_setup(cfg, 1, 6, 0.01, 1.0, channel_seed=0, symbol_seed=0)
        assert info.value.field == "comm.psk_order"

    def test_with_qos(self, setup: CommSetup) -> None:
        """Test that replacing the QoS keeps the channels."""
        np.testing.assert_array_equal(setup.with_qos(np.ones(2)).channels, setup.channels)
        assert setup.with_qos(np.array([1.0, 4.0])).amplitudes()[1] == pytest.approx(0.2)


class TestCIConstraints:
    """Constructive-interference halfspaces."""

    def test_margins_match_sector_formula(
        self, setup: CommSetup, cfg: ArrayConfig, rng: np.random.Generator
    ) -> None:
        """Test the rows against Re z sin Φ ± Im z cos Φ − σ√Γ sin Φ."""
        cset = build_ci_constraints(setup, cfg)
        x = crandn(rng, cfg.waveform_len)
        margins = ci_margins(cset, x)
        assert len(cset) == 2 * setup.n_users * cfg.n_slots
        phi = setup.half_angle
        pts = received_points(setup, x)
        for k in range(setup.n_users):
            for j in range(cfg.n_slots):
                s = setup.symbols.reshape(setup.n_users, -1)[k, j]
                z = pts[k, j] * np.conj(s) / abs(s)
                gamma = setup.amplitudes()[k] * math.sin(phi)
                i = k * cfg.n_slots + j
                plus = z.real * math.sin(phi) + z.imag * math.cos(phi) - gamma
                minus = z.real * math.sin(phi) - z.imag * math.cos(phi) - gamma
                assert margins[2 * i] == pytest.approx(plus)
                assert margins[2 * i + 1] == pytest.approx(minus)

    def test_dense_rows_agree(
        self, setup: CommSetup, cfg: ArrayConfig, rng: np.random.Generator
    ) -> None:
        """Test that dense rows reproduce the slot-restricted margins."""
        cset = build_ci_constraints(setup, cfg)
        x = crandn(rng, cfg.waveform_len)
        dense = np.real(cset.dense_rows().conj() @ x) - cset.thresholds
        np.testing.assert_allclose(dense, ci_margins(cset, x), atol=1e-13)

    def test_users_and_norms(self, setup: CommSetup, cfg: ArrayConfig) -> None:
        """Test the per-row user index and that ‖h̃‖₁ equals ‖h‖₁."""
        cset = build_ci_constraints(setup, cfg)
        np.testing.assert_array_equal(np.bincount(cset.users), [12, 12])
        expected = np.repeat(np.sum(np.abs(setup.channels), axis=1), 2 * cfg.n_slots)
        np.testing.assert_allclose(cset.l1_norms(), expected)

    def test_wrong_waveform_length(self, setup: CommSetup, cfg: ArrayConfig) -> None:
        """Test that ci_margins checks the waveform length."""
        with pytest.raises(ModelError):
            ci_margins(build_ci_constraints(setup, cfg), np.ones(5, dtype=complex))

    def test_zero_forcing_point_is_on_the_boundary(
        self, setup: CommSetup, cfg: ArrayConfig
    ) -> None:
        """Test that exact symbol reproduction gives zero CI margins."""
        zf, x = _zero_forcing(setup, cfg)
        np.testing.assert_allclose(zf.residuals(x), 0.0, atol=1e-12)
        margins = ci_margins(build_ci_constraints(setup, cfg), x)
        np.testing.assert_allclose(margins, 0.0, atol=1e-12)

    def test_boosted_zero_forcing_is_inside(self, setup: CommSetup, cfg: ArrayConfig) -> None:
        """Test that a positive amplitude boost gives positive margins."""
        _, x = _zero_forcing(setup, cfg, np.array([0.1, 0.2]))
        assert ci_margins(build_ci_constraints(setup, cfg), x).min() > 0


class TestZFConstraints:
    """Zero-forcing equalities."""

    def test_too_many_users(self) -> None:
        """Test that K_u > Nₜ is rejected."""
        cfg = ArrayConfig(n_tx=2, n_rx=2, n_pulses=1, n_samples=2)
        setup = make_comm_setup(cfg, 3, 4, 0.01, 1.0, channel_seed=0, symbol_seed=0)
        with pytest.raises(ValidationError) as info:
            build_zf_constraints(setup, cfg)
        assert info.value.field == "comm.n_users"

    def test_targets(self, setup: CommSetup, cfg: ArrayConfig) -> None:
        """Test that targets are σ√Γ times the symbols, user-major."""
        zf = build_zf_constraints(setup, cfg)
        expected = setup.amplitudes()[:, None] * setup.symbols.reshape(setup.n_users, -1)
        np.testing.assert_allclose(zf.targets, expected.ravel())


class TestSer:
    """Monte Carlo symbol error rate."""

    def test_strong_signal_has_no_errors(self, cfg: ArrayConfig) -> None:
        """Test that a 40 dB margin decodes without errors."""
        setup = make_comm_setup(cfg, 2, 4, 0.01, 1e4, channel_seed=1, symbol_seed=2)
        _, x = _zero_forcing(setup, cfg)
        estimates = estimate_ser(setup, x, 200, seed=0)
        assert [e.errors for e in estimates] == [0, 0]
        assert estimates[0].trials == 200 * cfg.n_slots

    def test_silent_waveform_guesses(self, setup: CommSetup, cfg: ArrayConfig) -> None:
        """Test that a zero waveform errs at the QPSK guessing rate."""
        estimates = estimate_ser(setup, np.zeros(cfg.waveform_len, dtype=complex), 2000, seed=0)
        for e in estimates:
            assert e.rate == pytest.approx(0.75, abs=0.03)
            assert e.ci95 > 0

    def test_frame(self, setup: CommSetup, cfg: ArrayConfig) -> None:
        """Test the SER frame schema."""
        estimates = estimate_ser(setup, np.zeros(cfg.waveform_len, dtype=complex), 10, seed=0)
        frame = ser_frame(estimates, "cm/ci")
        assert frame.schema["errors"] == pl.Int64
        assert frame["line"].to_list() == ["cm/ci", "cm/ci"]

    def test_needs_trials(self, setup: CommSetup, cfg: ArrayConfig) -> None:
        """Test that zero trials is rejected."""
        with pytest.raises(ValidationError):
            estimate_ser(setup, np.zeros(cfg.waveform_len, dtype=complex), 0)

    def test_independent_of_jobs(self, setup: CommSetup, cfg: ArrayConfig) -> None:
        """Test that sharded counts agree for one and two worker processes."""
        x = np.zeros(cfg.waveform_len, dtype=complex)
        serial = estimate_ser(setup, x, 500, seed=7, chunk=64)
        parallel = estimate_ser(setup, x, 500, seed=7, chunk=64, jobs=2)
        assert [e.errors for e in serial] == [e.errors for e in parallel]
        assert serial[0].trials == 500 * cfg.n_slots

    def test_needs_workers(self, setup: CommSetup, cfg: ArrayConfig) -> None:
        """Test that zero jobs is rejected."""
        with pytest.raises(ValidationError):
            estimate_ser(setup, np.zeros(cfg.waveform_len, dtype=complex), 10, jobs=0)
