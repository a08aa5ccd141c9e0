"""
Tests for the builtin mechanical systems and Legendre transforms.
"""

import numpy as np
import pytest

from errors import InvalidSpec
from systems import (
    BUILTIN_SYSTEMS,
    LagrangianSystem,
    PhaseState,
    TangentState,
    builtin_free_particle,
    free_particle_exact_discrete_lagrangian,
    get_system,
    inverse_legendre,
    legendre,
    rigid_body_reduced,
    sho_exact_discrete_lagrangian,
)


@pytest.mark.parametrize("name", sorted(BUILTIN_SYSTEMS))
def test_builtin_derivatives_match_lagrangian(name, rng):
    system = get_system(name)
    eps = 1e-6
    for _ in range(5):
        q, v = rng.normal(size=system.dim), rng.normal(size=system.dim)
        for j in range(system.dim):
            e = np.zeros(system.dim)
            e[j] = eps
            dq = (system.L(q + e, v) - system.L(q - e, v)) / (2 * eps)
            dv = (system.L(q, v + e) - system.L(q, v - e)) / (2 * eps)
            assert system.dLdq(q, v)[j] == pytest.approx(dq, abs=1e-8)
            assert system.dLdv(q, v)[j] == pytest.approx(dv, abs=1e-8)


@pytest.mark.parametrize("name", sorted(BUILTIN_SYSTEMS))
def test_hamiltonian_agrees_with_energy(name, rng):
    system = get_system(name)
    assert system.has_hamiltonian
    q, v = rng.normal(size=system.dim), rng.normal(size=system.dim)
    z = legendre(system, q, v)
    assert system.H(z.q, z.p) == pytest.approx(system.energy(q, v), abs=1e-14)
    assert system.phase_energy(z.q, z.p) == pytest.approx(system.energy(q, v), abs=1e-14)


def test_lagrangian_rate_along_the_flow(pendulum, rng):
    q, v = rng.normal(size=1), rng.normal(size=1)
    # d/dt (v^2/2 + cos q) with v dot = -sin q
    assert pendulum.dLdt(q, v) == pytest.approx(float(-2.0 * np.sin(q) @ v), abs=1e-15)
    z = legendre(pendulum, q, v)
    assert pendulum.phase_energy(z.q, z.p) == pytest.approx(pendulum.energy(q, v), abs=1e-15)


def test_legendre_round_trip_without_mass_matrix(rng):
    # no mass matrix, so the inverse goes through Newton
    base = builtin_free_particle(1)
    system = LagrangianSystem(
        name="stiff",
        dim=1,
        L=lambda q, v: float(np.sum(np.cosh(v))),
        dLdq=lambda q, v: np.zeros(1),
        dLdv=lambda q, v: np.sinh(v),
        accel=lambda q, v: np.zeros(1),
        energy=base.energy,
    )
    v = np.array([0.8])
    state = legendre(system, [0.0], v)
    assert np.allclose(inverse_legendre(system, state.q, state.p).v, v, atol=1e-12)


def test_free_particle_symmetries():
    system = builtin_free_particle(3)
    assert len(system.symmetries) == 3
    assert np.array_equal(system.symmetries[1](np.zeros(3)), [0.0, 1.0, 0.0])
    with pytest.raises(InvalidSpec):
        builtin_free_particle(0)


def test_two_particle_is_translation_invariant(two_particle, rng):
    q, v = rng.normal(size=2), rng.normal(size=2)
    shift = np.array([0.37, 0.37])
    assert two_particle.L(q + shift, v) == pytest.approx(two_particle.L(q, v), abs=1e-14)
    assert float(two_particle.dLdq(q, v) @ two_particle.symmetries[0](q)) == pytest.approx(0.0, abs=1e-15)


def test_get_system_unknown():
    with pytest.raises(InvalidSpec):
        get_system("double-pendulum")


def test_state_validation():
    with pytest.raises(ValueError):
        PhaseState([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        TangentState([np.nan], [1.0])
    assert np.array_equal(PhaseState(1.0, 2.0).as_array(), [1.0, 2.0])


def test_rigid_body_reduced_lagrangian():
    reduced = rigid_body_reduced(np.diag([2.0, 2.5, 3.0]))
    eta = np.array([1.0, 1.2, 0.9])
    assert reduced.l(eta) == pytest.approx(0.5 * (2.0 + 2.5 * 1.44 + 3.0 * 0.81))
    assert np.allclose(reduced.dldeta(eta), [2.0, 3.0, 2.7])


def test_exact_discrete_lagrangians():
    assert free_particle_exact_discrete_lagrangian([0.0], [1.0], 0.5) == pytest.approx(1.0)
    h = 0.3
    q0, q1 = 0.2, 0.5
    expected = ((q0 ** 2 + q1 ** 2) * np.cos(h) - 2 * q0 * q1) / (2 * np.sin(h))
    assert sho_exact_discrete_lagrangian(q0, q1, h) == pytest.approx(expected, rel=1e-15)
