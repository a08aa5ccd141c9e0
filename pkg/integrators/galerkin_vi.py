"""
Galerkin discrete Lagrangians on vector spaces.

The trajectory over one step is the Lagrange polynomial through s + 1
control points at times d_nu h; the endpoints are fixed and the interior
points make the quadrature approximation of the action stationary.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from errors import MissingDerivatives
from numerics import (
    FD_BASE_STEP,
    NewtonConfig,
    QuadratureRule,
    fd_grad,
    integrate,
    lagrange_basis,
    lagrange_basis_deriv,
    lagrange_tables,
    newton_iterate,
)
from systems import LagrangianSystem, PhaseState, TangentState, inverse_legendre

from .base_integrator import BaseIntegrator


@dataclass(frozen=True)
class GalerkinConfig:
    """
    Polynomial degree s, control times d (uniform by default), quadrature rule
    and the Newton controls for the interior stationarity system. step_cfg
    controls the implicit discrete Euler-Lagrange solve in galerkin_step.
    """

    s: int
    rule: QuadratureRule
    control_times: Optional[Sequence[float]] = None
    newton: NewtonConfig = field(default_factory=lambda: NewtonConfig(tol=1e-12, polish=1))
    step_cfg: NewtonConfig = field(default_factory=lambda: NewtonConfig(tol=1e-10))
    fd_step: Optional[float] = None

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"polynomial degree must be >= 1, got {self.s}")
        d = np.linspace(0.0, 1.0, self.s + 1) if self.control_times is None else np.asarray(self.control_times, dtype=float)
        if d.size != self.s + 1 or d[0] != 0.0 or d[-1] != 1.0 or np.any(np.diff(d) <= 0.0):
            raise ValueError("control times must ascend strictly from 0 to 1 with s + 1 entries")
        if self.rule.needs_derivatives:
            raise MissingDerivatives(f"rule {self.rule.name} is not supported by the Galerkin construction")
        object.__setattr__(self, "control_times", d)
        values, derivs = lagrange_tables(d, self.rule.nodes)
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_derivs", derivs)

    @property
    def basis_values(self) -> np.ndarray:
        """l_nu(c_i), shape (nodes, s + 1)."""
        return self._values

    @property
    def basis_derivs(self) -> np.ndarray:
        """l_nu'(c_i), shape (nodes, s + 1)."""
        return self._derivs

    def step_for(self, x: np.ndarray) -> float:
        if self.fd_step is not None:
            return self.fd_step
        return FD_BASE_STEP * max(1.0, float(np.linalg.norm(x)))


def interpolant(cfg: GalerkinConfig, points, tau: float, h: float) -> TangentState:
    """
    Evaluate the control-point polynomial and its velocity at time tau h.

    Args:
        cfg: Galerkin configuration
        points: Control points, shape (s + 1, m)
        tau: Normalised time in [0, 1]
        h: Step size

    Returns:
        TangentState (q(tau h), dq/dt(tau h))
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] != cfg.s + 1:
        points = points.reshape(cfg.s + 1, -1)
    d = cfg.control_times
    weights = np.array([lagrange_basis(d, nu, tau) for nu in range(cfg.s + 1)])
    slopes = np.array([lagrange_basis_deriv(d, nu, tau) for nu in range(cfg.s + 1)])
    return TangentState(weights @ points, (slopes @ points) / h)


def _trajectory(cfg: GalerkinConfig, points: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    return cfg.basis_values @ points, (cfg.basis_derivs @ points) / h


def _action(cfg: GalerkinConfig, sys: LagrangianSystem, points: np.ndarray, h: float) -> float:
    Q, V = _trajectory(cfg, points, h)
    return integrate(cfg.rule, h, [sys.L(q, v) for q, v in zip(Q, V)])


def stationarity_residual(cfg: GalerkinConfig, sys: LagrangianSystem, points: np.ndarray, h: float) -> np.ndarray:
    """
    First variation of the action sum with respect to the interior points.

    Row nu - 1 is h sum_i b_i [dL/dq(c_i) l_nu(c_i) + (1/h) dL/dv(c_i) l_nu'(c_i)].
    """
    Q, V = _trajectory(cfg, points, h)
    Lq = np.array([sys.dLdq(q, v) for q, v in zip(Q, V)])
    Lv = np.array([sys.dLdv(q, v) for q, v in zip(Q, V)])
    b = cfg.rule.weights
    inner = slice(1, cfg.s)
    lq = (b[:, None] * cfg.basis_values[:, inner]).T @ Lq
    lv = (b[:, None] * cfg.basis_derivs[:, inner]).T @ Lv
    return h * lq + lv


def galerkin_ld(
    cfg: GalerkinConfig,
    sys: LagrangianSystem,
    q0,
    q1,
    h: float,
    guess: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """
    Galerkin discrete Lagrangian.

    Args:
        cfg: Galerkin configuration
        sys: Lagrangian system
        q0: Left endpoint
        q1: Right endpoint
        h: Step size
        guess: Interior points to start Newton from, shape (s - 1, m);
            linear interpolation of the endpoints by default

    Returns:
        (value, interior points of shape (s - 1, m))

    Raises:
        NoConvergence: If the stationarity system is not solved
    """
    q0, q1 = np.atleast_1d(np.asarray(q0, dtype=float)), np.atleast_1d(np.asarray(q1, dtype=float))
    m = q0.size
    d = cfg.control_times
    if guess is None:
        guess = q0[None, :] + d[1:-1, None] * (q1 - q0)[None, :]
    guess = np.asarray(guess, dtype=float).reshape(cfg.s - 1, m)

    def assemble(inner: np.ndarray) -> np.ndarray:
        return np.vstack([q0, inner.reshape(cfg.s - 1, m), q1])

    if cfg.s == 1:
        return _action(cfg, sys, assemble(guess), h), guess

    result = newton_iterate(
        lambda x: stationarity_residual(cfg, sys, assemble(x), h).ravel(), guess.ravel(), cfg.newton
    )
    inner = result.x.reshape(cfg.s - 1, m)
    return _action(cfg, sys, assemble(inner), h), inner


def _partials(cfg: GalerkinConfig, sys: LagrangianSystem, q0, q1, h: float, inner, slot: int) -> np.ndarray:
    if slot == 0:
        return fd_grad(lambda x: galerkin_ld(cfg, sys, x, q1, h, inner)[0], q0, cfg.step_for(q0))
    return fd_grad(lambda x: galerkin_ld(cfg, sys, q0, x, h, inner)[0], q1, cfg.step_for(q1))


def galerkin_d1(cfg: GalerkinConfig, sys: LagrangianSystem, q0, q1, h: float, inner=None) -> np.ndarray:
    """D1 L_d by central differences, interior points re-solved warm-started."""
    q0, q1 = np.atleast_1d(np.asarray(q0, dtype=float)), np.atleast_1d(np.asarray(q1, dtype=float))
    if inner is None:
        inner = galerkin_ld(cfg, sys, q0, q1, h)[1]
    return _partials(cfg, sys, q0, q1, h, inner, 0)


def galerkin_d2(cfg: GalerkinConfig, sys: LagrangianSystem, q0, q1, h: float, inner=None) -> np.ndarray:
    """D2 L_d by central differences, interior points re-solved warm-started."""
    q0, q1 = np.atleast_1d(np.asarray(q0, dtype=float)), np.atleast_1d(np.asarray(q1, dtype=float))
    if inner is None:
        inner = galerkin_ld(cfg, sys, q0, q1, h)[1]
    return _partials(cfg, sys, q0, q1, h, inner, 1)


def _galerkin_step(cfg: GalerkinConfig, sys: LagrangianSystem, z: PhaseState, h: float, q1_guess):
    q0, p0 = z.q, z.p
    cache = {}

    def residual(q1: np.ndarray) -> np.ndarray:
        _, inner = galerkin_ld(cfg, sys, q0, q1, h, cache.get("inner"))
        cache["inner"] = inner
        return p0 + galerkin_d1(cfg, sys, q0, q1, h, inner)

    result = newton_iterate(residual, q1_guess, cfg.step_cfg)
    q1 = result.x
    _, inner = galerkin_ld(cfg, sys, q0, q1, h, cache.get("inner"))
    p1 = galerkin_d2(cfg, sys, q0, q1, h, inner)
    return PhaseState(q1, p1), result.iterations


def galerkin_step(cfg: GalerkinConfig, sys: LagrangianSystem, z: PhaseState, h: float, q1_guess=None) -> PhaseState:
    """
    Discrete Hamiltonian map of the Galerkin L_d.

    Solves p0 = -D1 L_d(q0, q1) for q1 and returns (q1, D2 L_d(q0, q1)).
    """
    if q1_guess is None:
        q1_guess = z.q + h * inverse_legendre(sys, z.q, z.p).v
    return _galerkin_step(cfg, sys, z, h, q1_guess)[0]


class GalerkinIntegrator(BaseIntegrator):
    """Time stepper over a Galerkin discrete Lagrangian."""

    def __init__(self, cfg: GalerkinConfig, system: LagrangianSystem, name: Optional[str] = None):
        super().__init__(name or f"Galerkin[s={cfg.s}+{cfg.rule.name}]")
        self.cfg = cfg
        self.system = system

    def step(self, state: PhaseState, h: float) -> PhaseState:
        guess = state.q + h * inverse_legendre(self.system, state.q, state.p).v
        new_state, iterations = _galerkin_step(self.cfg, self.system, state, h, guess)
        self.last_newton_iterations = iterations
        return new_state
