import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from integrators.liegroup_vi import RigidBody  # noqa: E402
from systems import (  # noqa: E402
    builtin_free_particle,
    builtin_pendulum,
    builtin_sho,
    builtin_two_particle,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pendulum():
    return builtin_pendulum()


@pytest.fixture
def sho():
    return builtin_sho()


@pytest.fixture
def free_particle():
    return builtin_free_particle(2)


@pytest.fixture
def two_particle():
    return builtin_two_particle()


@pytest.fixture
def body():
    """Free rigid body fixture J = diag(2, 2.5, 3)."""
    return RigidBody(np.diag([2.0, 2.5, 3.0]))


@pytest.fixture
def omega0():
    return np.array([1.0, 1.2, 0.9])


def sho_exact_flow(q0: float, p0: float, t: float) -> np.ndarray:
    """Analytic unit-oscillator flow."""
    return np.array([q0 * np.cos(t) + p0 * np.sin(t), -q0 * np.sin(t) + p0 * np.cos(t)])


def random_rotation_vector(rng, max_angle: float) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return axis * rng.uniform(0.0, max_angle)
