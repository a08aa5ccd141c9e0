"""
Tests for Galerkin discrete Lagrangians.
"""

import numpy as np
import pytest

from errors import MissingDerivatives
from integrators.galerkin_vi import (
    GalerkinConfig,
    GalerkinIntegrator,
    galerkin_d1,
    galerkin_d2,
    galerkin_ld,
    galerkin_step,
    interpolant,
    stationarity_residual,
)
from numerics import make_rule
from reference import estimate_order, reference_solution
from systems import PhaseState, free_particle_exact_discrete_lagrangian


def _cfg(s: int, rule: str, **kwargs) -> GalerkinConfig:
    return GalerkinConfig(s=s, rule=make_rule(rule), **kwargs)


@pytest.mark.parametrize("s,rule", [(1, "trapezoid"), (2, "simpson"), (3, "lobatto4")])
def test_free_particle_is_exact(s, rule, free_particle):
    q0, q1, h = np.array([0.2, -1.0]), np.array([0.9, 0.4]), 0.3
    value, inner = galerkin_ld(_cfg(s, rule), free_particle, q0, q1, h)
    assert value == pytest.approx(free_particle_exact_discrete_lagrangian(q0, q1, h), abs=1e-12)
    assert inner.shape == (s - 1, 2)
    d = np.linspace(0.0, 1.0, s + 1)[1:-1]
    assert np.allclose(inner, q0 + d[:, None] * (q1 - q0), atol=1e-10)


def test_interior_points_are_stationary(pendulum):
    cfg = _cfg(3, "lobatto4")
    q0, q1, h = np.array([0.4]), np.array([0.55]), 0.2
    _, inner = galerkin_ld(cfg, pendulum, q0, q1, h)
    points = np.vstack([q0, inner, q1])
    assert np.max(np.abs(stationarity_residual(cfg, pendulum, points, h))) < 1e-11


def test_interpolant_passes_through_control_points(rng):
    cfg = _cfg(2, "simpson")
    points = rng.normal(size=(3, 2))
    for tau, expected in zip((0.0, 0.5, 1.0), points):
        assert np.allclose(interpolant(cfg, points, tau, 0.1).q, expected, atol=1e-14)
    line = np.array([[0.0], [0.5], [1.0]])
    assert np.allclose(interpolant(cfg, line, 0.3, 0.25).v, [4.0], atol=1e-12)


def test_linear_trapezoid_is_velocity_verlet(pendulum):
    # linear interpolation with the trapezoid rule gives kick-drift-kick
    cfg = _cfg(1, "trapezoid")
    h = 0.1
    z = PhaseState([0.8], [0.3])
    force = lambda q: pendulum.dLdq(q, np.zeros(1))  # noqa: E731
    p_half = z.p + 0.5 * h * force(z.q)
    q1 = z.q + h * p_half
    p1 = p_half + 0.5 * h * force(q1)
    out = galerkin_step(cfg, pendulum, z, h)
    assert np.allclose(out.q, q1, atol=1e-9)
    assert np.allclose(out.p, p1, atol=1e-8)


def test_discrete_momenta_of_free_particle(free_particle):
    cfg = _cfg(2, "simpson")
    q0, q1, h = np.array([0.0, 1.0]), np.array([0.5, 0.0]), 0.5
    v = (q1 - q0) / h
    assert np.allclose(galerkin_d1(cfg, free_particle, q0, q1, h), -v, atol=1e-8)
    assert np.allclose(galerkin_d2(cfg, free_particle, q0, q1, h), v, atol=1e-8)


@pytest.mark.parametrize("s,rule,order", [(1, "trapezoid", 2.0), (2, "simpson", 4.0)])
def test_global_order_on_oscillator(s, rule, order, sho):
    z0 = PhaseState([1.0], [0.0])
    T = 2.0
    integrator = GalerkinIntegrator(_cfg(s, rule), sho)
    points = []
    for h in (0.2, 0.1, 0.05):
        states = integrator.integrate(z0, h, int(round(T / h)))
        exact = reference_solution(sho, z0, T)
        points.append((h, float(np.linalg.norm(states[-1].as_array() - exact.as_array()))))
    assert order - 0.2 <= estimate_order(points) <= order + 0.3


def test_pendulum_energy_stays_bounded(pendulum):
    integrator = GalerkinIntegrator(_cfg(1, "trapezoid"), pendulum)
    states = integrator.integrate(PhaseState([1.0], [0.0]), 0.2, 200)
    energy = np.array([pendulum.phase_energy(s.q, s.p) for s in states])
    assert np.max(np.abs(energy - energy[0])) < 2e-2
    assert len(integrator.iteration_log) == 200


def test_configuration_validation():
    with pytest.raises(ValueError):
        _cfg(0, "trapezoid")
    with pytest.raises(ValueError):
        _cfg(2, "simpson", control_times=[0.0, 1.0])
    with pytest.raises(ValueError):
        _cfg(2, "simpson", control_times=[0.0, 0.6, 0.5])
    with pytest.raises(MissingDerivatives):
        _cfg(1, "euler_maclaurin2")
    cfg = _cfg(2, "simpson", control_times=[0.0, 0.3, 1.0])
    assert np.array_equal(cfg.control_times, [0.0, 0.3, 1.0])
    assert cfg.basis_values.shape == (3, 3)


def test_step_map_is_symplectic(pendulum, rng):
    cfg = _cfg(2, "simpson")
    h, delta = 0.1, 1e-3
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    for _ in range(10):
        z = rng.uniform(-1.0, 1.0, size=2)

        def flow(x: np.ndarray) -> np.ndarray:
            return galerkin_step(cfg, pendulum, PhaseState(x[:1], x[1:]), h).as_array()

        columns = []
        for j in range(2):
            e = np.zeros(2)
            e[j] = delta
            columns.append((flow(z + e) - flow(z - e)) / (2 * delta))
        D = np.column_stack(columns)
        assert np.linalg.norm(D.T @ omega @ D - omega) < 1e-6


def test_translation_momentum_is_conserved(two_particle):
    integrator = GalerkinIntegrator(_cfg(1, "trapezoid"), two_particle)
    states = integrator.integrate(PhaseState([0.0, 0.5], [0.3, -0.1]), 0.1, 100)
    total = [float(np.sum(s.p)) for s in states]
    assert max(abs(t - total[0]) for t in total) < 1e-8


@pytest.mark.parametrize("system_name", ["pendulum", "two_particle"])
def test_linear_trapezoid_matches_closed_form(system_name, rng, request):
    # L_d = h/2 [L(q0, v) + L(q1, v)] with v = (q1 - q0)/h
    system = request.getfixturevalue(system_name)
    cfg = _cfg(1, "trapezoid")
    for _ in range(20):
        q0 = rng.uniform(-1.0, 1.0, size=system.dim)
        q1 = rng.uniform(-1.0, 1.0, size=system.dim)
        h = rng.uniform(0.05, 0.5)
        v = (q1 - q0) / h
        expected = 0.5 * h * (system.L(q0, v) + system.L(q1, v))
        assert galerkin_ld(cfg, system, q0, q1, h)[0] == pytest.approx(expected, abs=1e-12)
