"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from irsma.config import IrsGeometry, Scenario


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_geometry():
    return IrsGeometry(num_y=4, num_z=4, spacing=0.03)


@pytest.fixture
def small_scenario():
    """Desk-scale scenario with a reduced surface for fast optimizer tests."""
    return Scenario(irs_num_y=8, irs_num_z=8, master_seed=11)


def random_unit_modulus(rng, n):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, n))
