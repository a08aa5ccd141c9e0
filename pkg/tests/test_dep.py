"""
Tests for discrete Euler-Poincare stepping of the free rigid body.
"""

import numpy as np
import pytest

from geometry import exp_so3, log_so3, orthogonality_error
from integrators.liegroup_vi import (
    DepConfig,
    DepIntegrator,
    dep_init,
    dep_momentum,
    dep_reduced_ld,
    dep_stationarity_gap,
    dep_step,
)
from numerics import make_rule
from reference import estimate_order, rigid_body_reference
from systems import rigid_body_reduced

H = 0.2


def _cfg(body, s: int = 1, rule: str = "trapezoid", **kwargs) -> DepConfig:
    return DepConfig(s=s, rule=make_rule(rule), **kwargs).with_body(body)


def test_trapezoid_degree_one_is_midpoint_kinetic_energy(body, rng):
    cfg = _cfg(body)
    for _ in range(3):
        xi = 0.3 * rng.normal(size=3)
        value, inner = dep_reduced_ld(cfg, exp_so3(xi), H)
        # dexp_{ad xi} xi = xi, so both trapezoid samples equal l(xi / h)
        expected = H * 0.5 * (xi / H) @ body.J @ (xi / H)
        assert value == pytest.approx(expected, rel=1e-12)
        assert inner.shape == (0, 3)


def test_degree_two_is_stationary_in_interior_points(body, omega0):
    cfg = _cfg(body, s=2, rule="simpson")
    f = exp_so3(H * omega0)
    assert dep_stationarity_gap(cfg, f, H) < 1e-7
    value, inner = dep_reduced_ld(cfg, f, H)
    assert inner.shape == (1, 3)
    # the interior point sits near the middle of the algebra segment
    assert np.allclose(inner[0], 0.5 * log_so3(f), atol=1e-2)
    printed = _cfg(body, s=2, rule="simpson", stationarity="printed")
    printed_value, _ = dep_reduced_ld(printed, f, H)
    assert printed_value == pytest.approx(value, abs=1e-3)


def test_rest_is_a_fixed_point(body):
    cfg = _cfg(body)
    assert np.array_equal(dep_momentum(cfg, np.eye(3), H), np.zeros(3))
    assert np.array_equal(dep_step(cfg, body, np.eye(3), H), np.eye(3))
    integrator = DepIntegrator(DepConfig(s=1, rule=make_rule("trapezoid")), body)
    R = exp_so3([0.2, -0.1, 0.4])
    state = integrator.initial_state(R, np.zeros(3), H)
    out = integrator.step(state, H)
    assert np.array_equal(out.R, R)


def test_initial_momentum_matches_body_momentum(body, omega0):
    cfg = _cfg(body)
    f0 = dep_init(cfg, body, omega0, H)
    assert np.allclose(dep_momentum(cfg, f0, H), body.J @ omega0, atol=1e-8)


def test_spatial_momentum_is_conserved(body, omega0):
    integrator = DepIntegrator(DepConfig(s=1, rule=make_rule("trapezoid")), body)
    states = integrator.integrate(integrator.initial_state(np.eye(3), omega0, H), H, 40)
    pi0 = integrator.momentum(states[0])
    assert max(np.linalg.norm(integrator.momentum(s) - pi0) for s in states) < 1e-8
    assert max(orthogonality_error(s.R) for s in states) < 1e-12


def test_degree_one_attitude_converges(body, omega0):
    T = 3.0
    exact = rigid_body_reference(body, np.eye(3), omega0, T)
    points = []
    for h in (0.2, 0.1, 0.05):
        integrator = DepIntegrator(DepConfig(s=1, rule=make_rule("trapezoid")), body)
        states = integrator.integrate(integrator.initial_state(np.eye(3), omega0, h), h, int(round(T / h)))
        points.append((h, float(np.linalg.norm(states[-1].R - exact.R))))
    assert estimate_order(points) >= 1.0


def test_degree_two_steps_preserve_structure(body, omega0):
    integrator = DepIntegrator(DepConfig(s=2, rule=make_rule("simpson")), body)
    states = integrator.integrate(integrator.initial_state(np.eye(3), omega0, H), H, 3)
    pi0 = integrator.momentum(states[0])
    for state in states:
        assert orthogonality_error(state.R) < 1e-12
        assert np.linalg.norm(integrator.momentum(state) - pi0) < 1e-8
    diagnostics = integrator.diagnostics(states[-1])
    assert set(diagnostics) == {"R", "body_momentum", "energy", "momentum", "ortho_error"}


def test_configuration_validation(body):
    with pytest.raises(ValueError):
        DepConfig(s=4, rule=make_rule("simpson"))
    with pytest.raises(ValueError):
        DepConfig(s=2, rule=make_rule("simpson"), control_times=np.array([0.0, 0.7, 0.6]))
    with pytest.raises(ValueError):
        DepConfig(s=1, rule=make_rule("euler_maclaurin2"))
    with pytest.raises(ValueError):
        DepConfig(s=1, rule=make_rule("trapezoid")).with_body(None)
    with pytest.raises(ValueError):
        dep_reduced_ld(DepConfig(s=1, rule=make_rule("trapezoid")), np.eye(3), H)
    explicit = DepConfig(s=1, rule=make_rule("trapezoid"), reduced=rigid_body_reduced(body.J))
    assert explicit.with_body(None) is explicit
