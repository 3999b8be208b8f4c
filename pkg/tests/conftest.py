"""Shared fixtures: a tiny scenario that designs in seconds."""

import numpy as np
import pytest

from stap_slp.config import ScenarioConfig, parse_config
from stap_slp.designer import Scenario, SolverConfig
from stap_slp.experiments import build_scenario
from stap_slp.geometry import ArrayConfig

TINY_DOC = {
    "name": "tiny",
    "array": {"n_tx": 3, "n_rx": 3, "n_pulses": 2, "n_samples": 3},
    "target": {"normalized_doppler": 0.3},
    "clutter": {"half_width_cells": 1, "patches_per_cell": 6},
    "comm": {"n_users": 2, "psk_order": 4, "qos_db": 5.0, "noise_power_db": -20.0},
    "variant": {"kind": "cm", "total_power": 10.0, "papr_eps": 1.0, "similarity_xi": 1.5},
    "solver": {"mm_max_iter": 8, "mm_tol": 1e-3, "admm_max_iter": 60},
    "outputs": {"baselines": [], "ambiguity_points": 11},
}


@pytest.fixture(scope="session")
def tiny_config() -> ScenarioConfig:
    """Nₜ = N_r = 3, M = 2, N = 3, two users, CUT plus two neighbours."""
    return parse_config(TINY_DOC)


@pytest.fixture(scope="session")
def tiny_scenario(tiny_config: ScenarioConfig) -> Scenario:
    return build_scenario(tiny_config)


@pytest.fixture(scope="session")
def fast_solver() -> SolverConfig:
    return SolverConfig(mm_max_iter=6, admm_max_iter=60)


@pytest.fixture
def small_array() -> ArrayConfig:
    """Smallest array with distinct dimensions along every axis."""
    return ArrayConfig(n_tx=2, n_rx=3, n_pulses=2, n_samples=3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
