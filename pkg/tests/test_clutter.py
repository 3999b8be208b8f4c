"""Tests for clutter scenes and inner clutter covariance matrices."""

import math

import numpy as np
import pytest

from stap_slp.clutter import (
    AzimuthMode,
    ClutterScene,
    DopplerModel,
    InnerCCM,
    clutter_cells,
    full_ccm,
    generate_scene,
    inner_ccm,
    rank_factorize,
    scene_ccms,
)
from stap_slp.exceptions import ModelError, ValidationError
from stap_slp.geometry import ArrayConfig, spatial_frequency
from stap_slp.operators import OperatorSet, shift_matrix, waveform_block_matrix

from .conftest import crandn


class TestScene:
    """Scene generation."""

    def test_grid_azimuths(self, small_array: ArrayConfig) -> None:
        """Test that grid mode spaces patches by π/N_c from -π/2."""
        scene = generate_scene(small_array, 1, 4, 1.0, DopplerModel.ZERO)
        thetas = [p.azimuth_rad for p in scene.patches(0)]
        np.testing.assert_allclose(thetas, -math.pi / 2 + np.arange(4) * math.pi / 4)
        assert all(p.normalized_doppler == 0.0 for p in scene.patches(-1))

    def test_ridge_doppler(self, small_array: ArrayConfig) -> None:
        """Test that ridge Dopplers follow β d_r sin θ / λ."""
        scene = generate_scene(small_array, 0, 7, 1.0, DopplerModel.RIDGE, ridge_slope=0.5)
        for p in scene.patches(0):
            expected = 0.5 * spatial_frequency(small_array, p.azimuth_rad)
            assert p.normalized_doppler == pytest.approx(float(expected))

    def test_random_mode_is_seeded(self, small_array: ArrayConfig) -> None:
        """Test that random scenes repeat for the same seed and differ otherwise."""

        def make(seed: int) -> ClutterScene:
            return generate_scene(
                small_array, 1, 5, 1.0, DopplerModel.RANDOM, seed, azimuth_mode=AzimuthMode.RANDOM
            )

        assert make(7).to_dict() == make(7).to_dict()
        assert make(7).to_dict() != make(8).to_dict()

    def test_cell_out_of_range(self, small_array: ArrayConfig) -> None:
        """Test that asking for a cell outside the scene raises."""
        scene = generate_scene(small_array, 1, 3, 1.0)
        with pytest.raises(ValidationError):
            scene.patches(2)

    def test_invalid_sizes(self, small_array: ArrayConfig) -> None:
        """Test that patch counts and powers are validated."""
        with pytest.raises(ValidationError):
            generate_scene(small_array, 1, 0, 1.0)
        with pytest.raises(ValidationError):
            generate_scene(small_array, 1, 3, -1.0)


class TestInnerCCM:
    """Inner clutter covariance and its rank factors."""

    def test_hermitian_psd(self, small_array: ArrayConfig) -> None:
        """Test that every inner CCM is Hermitian and numerically PSD."""
        scene = generate_scene(small_array, 1, 5, 2.0)
        for l in scene.cell_indices:
            m = inner_ccm(small_array, scene, l).matrix
            np.testing.assert_allclose(m, m.conj().T, atol=1e-12)
            assert np.linalg.eigvalsh(m).min() >= -1e-10 * np.abs(m).max()

    def test_factors_reconstruct(self, small_array: ArrayConfig) -> None:
        """Test Σ_r u_r u_rᴴ ≈ M_l and rank at most the patch count."""
        scene = generate_scene(small_array, 1, 5, 1.0)
        for ccm in scene_ccms(small_array, scene):
            U = ccm.rank_factors
            assert ccm.rank <= 5
            recon = U.T @ U.conj()
            np.testing.assert_allclose(recon, ccm.matrix, atol=1e-8 * np.abs(ccm.matrix).max())

    def test_non_hermitian_rejected(self) -> None:
        """Test that a non-Hermitian matrix is refused."""
        bad = InnerCCM(cell_index=0, matrix=np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex))
        with pytest.raises(ModelError, match="Hermitian"):
            rank_factorize(bad)

    def test_zero_matrix_has_no_factors(self) -> None:
        """Test that a zero CCM factorizes to rank 0."""
        zero = InnerCCM(cell_index=0, matrix=np.zeros((3, 3), dtype=complex))
        assert rank_factorize(zero).rank == 0

    def test_full_ccm_matches_definition(
        self, small_array: ArrayConfig, rng: np.random.Generator
    ) -> None:
        """Test R_c = Σ_l J̄_l X̄ M_l X̄ᴴ J̄_lᴴ against the factored echoes."""
        cfg = small_array
        scene = generate_scene(cfg, 1, 4, 1.0)
        ccms = scene_ccms(cfg, scene)
        ops = OperatorSet.from_factors(
            cfg, crandn(rng, cfg.steering_len), clutter_cells(ccms), noise_power=1.0
        )
        x = crandn(rng, cfg.waveform_len)
        X_bar = waveform_block_matrix(cfg, x)
        expected = np.zeros((cfg.filter_len, cfg.filter_len), dtype=complex)
        for ccm in ccms:
            J = np.kron(
                np.eye(cfg.n_pulses * cfg.n_rx), shift_matrix(cfg.n_samples, ccm.cell_index).T
            )
            expected += J @ X_bar @ ccm.matrix @ X_bar.conj().T @ J.conj().T
        np.testing.assert_allclose(full_ccm(ops, x), expected, atol=1e-8 * np.abs(expected).max())
