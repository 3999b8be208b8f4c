"""Tests for the MM majorizer."""

import numpy as np
import pytest

from stap_slp.designer import Scenario
from stap_slp.surrogate import (
    build_surrogate,
    mm_objective,
    surrogate_gradient,
    surrogate_value,
)

from .conftest import crandn


@pytest.fixture
def tangent(tiny_scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    return crandn(rng, tiny_scenario.cfg.waveform_len)


class TestMajorizer:
    """Tangency and majorization of the quadratic surrogate."""

    def test_tangent_at_iterate(self, tiny_scenario: Scenario, tangent: np.ndarray) -> None:
        """Test that the surrogate equals f at x_t."""
        ops = tiny_scenario.operators
        coeffs = build_surrogate(ops, tangent)
        f = mm_objective(ops, tangent)
        assert abs(surrogate_value(coeffs, tangent) - f) <= 1e-9 * max(1.0, abs(f))

    def test_upper_bound(
        self, tiny_scenario: Scenario, tangent: np.ndarray, rng: np.random.Generator
    ) -> None:
        """Test surrogate >= f on random perturbations of several sizes."""
        ops = tiny_scenario.operators
        coeffs = build_surrogate(ops, tangent)
        scale = np.linalg.norm(tangent)
        for k in range(200):
            step = 10.0 ** (-3 + 4 * k / 200) * scale
            d = crandn(rng, tangent.shape[0])
            x = tangent + step * d / np.linalg.norm(d)
            f = mm_objective(ops, x)
            assert surrogate_value(coeffs, x) - f >= -1e-8 * max(1.0, abs(f))

    def test_gradient_matches_objective(
        self, tiny_scenario: Scenario, tangent: np.ndarray, rng: np.random.Generator
    ) -> None:
        """Test that the surrogate gradient at x_t is the directional derivative of f."""
        ops = tiny_scenario.operators
        coeffs = build_surrogate(ops, tangent)
        grad = surrogate_gradient(coeffs, tangent)
        d = crandn(rng, tangent.shape[0])
        eps = 1e-6
        numeric = (mm_objective(ops, tangent + eps * d) - mm_objective(ops, tangent - eps * d)) / (
            2 * eps
        )
        assert float(np.real(np.vdot(grad, d))) == pytest.approx(numeric, rel=1e-5)

    def test_quadratic_term_is_psd(self, tiny_scenario: Scenario, tangent: np.ndarray) -> None:
        """Test that D_t is Hermitian positive semidefinite."""
        D = build_surrogate(tiny_scenario.operators, tangent).d_matrix
        np.testing.assert_allclose(D, D.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(D).min() >= -1e-10 * max(1.0, np.abs(D).max())
