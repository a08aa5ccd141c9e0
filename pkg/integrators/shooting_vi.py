"""
Shooting-based discrete Lagrangians.

A one-step method carries the state node to node over [0, h]; the initial
velocity (or momentum) is solved so the last node lands on the prescribed
endpoint, and the quadrature rule sums the Lagrangian over the nodes. The
Lagrangian, Hamiltonian and Type-II integrators below are built on it.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from errors import MissingDerivatives
from numerics import FD_BASE_STEP, NewtonConfig, QuadratureRule, fd_grad, integrate, newton_iterate
from onestep import OneStepMethod, propagate_array, vector_field
from systems import LagrangianSystem, PhaseState, inverse_legendre

from .base_integrator import BaseIntegrator


@dataclass(frozen=True)
class ShootingConfig:
    """
    Configuration of a shooting-based discrete Lagrangian.

    inner_cfg controls the boundary-value solve for the initial velocity,
    outer_cfg the implicit discrete Euler-Lagrange solve. fd_step None means
    eps^(1/3) * max(1, |x|) for the D1/D2 differences.
    """

    method: OneStepMethod
    rule: QuadratureRule
    inner_cfg: NewtonConfig = field(default_factory=lambda: NewtonConfig(tol=1e-12, polish=1))
    outer_cfg: NewtonConfig = field(default_factory=lambda: NewtonConfig(tol=1e-10))
    fd_step: Optional[float] = None

    def __post_init__(self):
        nodes = self.rule.nodes
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValueError(f"rule {self.rule.name} must contain both endpoints")

    def step_for(self, x: np.ndarray) -> float:
        if self.fd_step is not None:
            return self.fd_step
        return FD_BASE_STEP * max(1.0, float(np.linalg.norm(x)))


@dataclass
class LdEvaluation:
    """
    One discrete Lagrangian evaluation.

    For the phase-space variants v0 and vn hold the momenta p^0 and p^n.
    """

    value: float
    q0: np.ndarray
    v0: np.ndarray
    qn: np.ndarray
    vn: np.ndarray
    nodes: np.ndarray
    iterations: int


def _tangent_action(cfg: ShootingConfig, sys: LagrangianSystem, nodes: np.ndarray, h: float) -> float:
    m = sys.dim
    samples = [sys.L(row[:m], row[m:]) for row in nodes]
    deriv = None
    if cfg.rule.needs_derivatives:
        deriv = (sys.dLdt(nodes[0, :m], nodes[0, m:]), sys.dLdt(nodes[-1, :m], nodes[-1, m:]))
    return integrate(cfg.rule, h, samples, deriv)


def _phase_action(cfg: ShootingConfig, sys: LagrangianSystem, nodes: np.ndarray, h: float) -> float:
    """h sum b_i [p^i . v^i - H(q^i, p^i)] with v^i = dH/dp."""
    if cfg.rule.needs_derivatives:
        raise MissingDerivatives(
            f"rule {cfg.rule.name} needs derivative samples, unavailable for the Hamiltonian variants"
        )
    m = sys.dim
    samples = [row[m:] @ sys.dHdp(row[:m], row[m:]) - sys.H(row[:m], row[m:]) for row in nodes]
    return integrate(cfg.rule, h, samples)


def _shoot(
    cfg: ShootingConfig,
    sys: LagrangianSystem,
    q0: np.ndarray,
    target: np.ndarray,
    h: float,
    guess: np.ndarray,
    match: slice,
):
    """Solve for the initial velocity/momentum so that nodes[-1][match] == target."""
    f = vector_field(sys, cfg.method.space)
    c = cfg.rule.nodes

    def residual(u0: np.ndarray) -> np.ndarray:
        return propagate_array(cfg.method, f, np.concatenate([q0, u0]), h, c)[-1][match] - target

    result = newton_iterate(residual, guess, cfg.inner_cfg)
    nodes = propagate_array(cfg.method, f, np.concatenate([q0, result.x]), h, c)
    return nodes, result.iterations


def _check_space(cfg: ShootingConfig, space: str) -> None:
    if cfg.method.space != space:
        raise ValueError(f"method {cfg.method.name} runs on {cfg.method.space} space, {space} required")


def discrete_lagrangian(
    cfg: ShootingConfig,
    sys: LagrangianSystem,
    q0,
    q1,
    h: float,
    v_guess: Optional[np.ndarray] = None,
) -> LdEvaluation:
    """
    Shooting-based discrete Lagrangian L_d(q0, q1; h).

    Args:
        cfg: Shooting configuration (tangent-space method)
        sys: Lagrangian system
        q0: Left endpoint
        q1: Right endpoint
        h: Step size, nonzero
        v_guess: Initial velocity guess, (q1 - q0)/h by default

    Returns:
        LdEvaluation with the value and the converged node trajectory

    Raises:
        NoConvergence: If the boundary-value solve fails
    """
    _check_space(cfg, "tangent")
    q0, q1 = np.atleast_1d(np.asarray(q0, dtype=float)), np.atleast_1d(np.asarray(q1, dtype=float))
    if h == 0.0:
        raise ValueError("step size must be nonzero")
    guess = (q1 - q0) / h if v_guess is None else np.asarray(v_guess, dtype=float)
    m = sys.dim
    nodes, iterations = _shoot(cfg, sys, q0, q1, h, guess, slice(0, m))
    return LdEvaluation(
        value=_tangent_action(cfg, sys, nodes, h),
        q0=nodes[0, :m], v0=nodes[0, m:], qn=nodes[-1, :m], vn=nodes[-1, m:],
        nodes=nodes, iterations=iterations,
    )


def hamiltonian_discrete_lagrangian(
    cfg: ShootingConfig,
    sys: LagrangianSystem,
    q0,
    q1,
    h: float,
    p_guess: Optional[np.ndarray] = None,
) -> LdEvaluation:
    """
    Phase-space shooting discrete Lagrangian h sum b_i [p^i v^i - H(q^i, p^i)].

    The shooting unknown is the initial momentum p^0.
    """
    _check_space(cfg, "phase")
    q0, q1 = np.atleast_1d(np.asarray(q0, dtype=float)), np.atleast_1d(np.asarray(q1, dtype=float))
    if h == 0.0:
        raise ValueError("step size must be nonzero")
    if p_guess is None:
        p_guess = sys.dLdv(q0, (q1 - q0) / h)
    m = sys.dim
    nodes, iterations = _shoot(cfg, sys, q0, q1, h, np.asarray(p_guess, dtype=float), slice(0, m))
    return LdEvaluation(
        value=_phase_action(cfg, sys, nodes, h),
        q0=nodes[0, :m], v0=nodes[0, m:], qn=nodes[-1, :m], vn=nodes[-1, m:],
        nodes=nodes, iterations=iterations,
    )


Evaluator = Callable[..., LdEvaluation]


def _partial(evaluator: Evaluator, cfg, sys, q0, q1, h, guess, slot: int) -> np.ndarray:
    """Central difference of the evaluator's value in q0 (slot 0) or q1 (slot 1)."""
    q0, q1 = np.atleast_1d(np.asarray(q0, dtype=float)), np.atleast_1d(np.asarray(q1, dtype=float))
    if guess is None:
        guess = evaluator(cfg, sys, q0, q1, h).v0
    if slot == 0:
        return fd_grad(lambda x: evaluator(cfg, sys, x, q1, h, guess).value, q0, cfg.step_for(q0))
    return fd_grad(lambda x: evaluator(cfg, sys, q0, x, h, guess).value, q1, cfg.step_for(q1))


def d1_ld(cfg: ShootingConfig, sys: LagrangianSystem, q0, q1, h: float, v_guess=None) -> np.ndarray:
    """D1 L_d by central differences, re-solving the boundary problem warm-started."""
    evaluator = hamiltonian_discrete_lagrangian if cfg.method.space == "phase" else discrete_lagrangian
    return _partial(evaluator, cfg, sys, q0, q1, h, v_guess, 0)


def d2_ld(cfg: ShootingConfig, sys: LagrangianSystem, q0, q1, h: float, v_guess=None) -> np.ndarray:
    """D2 L_d by central differences, re-solving the boundary problem warm-started."""
    evaluator = hamiltonian_discrete_lagrangian if cfg.method.space == "phase" else discrete_lagrangian
    return _partial(evaluator, cfg, sys, q0, q1, h, v_guess, 1)


@dataclass
class StepResult:
    state: PhaseState
    u0: np.ndarray
    un: np.ndarray
    iterations: int


def _idel_step(cfg: ShootingConfig, sys: LagrangianSystem, z: PhaseState, h: float, guess) -> StepResult:
    """Solve p0 = -D1 L_d(q0, q^n(u0)) for the shooting unknown u0, return (q1, D2 L_d)."""
    m = sys.dim
    f = vector_field(sys, cfg.method.space)
    c = cfg.rule.nodes
    q0, p0 = z.q, z.p

    def endpoint(u0: np.ndarray) -> np.ndarray:
        return propagate_array(cfg.method, f, np.concatenate([q0, u0]), h, c)[-1]

    def residual(u0: np.ndarray) -> np.ndarray:
        q1 = endpoint(u0)[:m]
        return p0 + d1_ld(cfg, sys, q0, q1, h, u0)

    result = newton_iterate(residual, guess, cfg.outer_cfg)
    end = endpoint(result.x)
    q1 = end[:m]
    p1 = d2_ld(cfg, sys, q0, q1, h, result.x)
    return StepResult(PhaseState(q1, p1), result.x, end[m:], result.iterations)


def step_lagrangian(
    cfg: ShootingConfig, sys: LagrangianSystem, z: PhaseState, h: float, v_guess=None
) -> PhaseState:
    """
    Discrete Hamiltonian map (q0, p0) -> (q1, p1) of the shooting L_d.

    The initial velocity guess is the inverse Legendre transform of p0.
    """
    _check_space(cfg, "tangent")
    if v_guess is None:
        v_guess = inverse_legendre(sys, z.q, z.p).v
    return _idel_step(cfg, sys, z, h, v_guess).state


def step_hamiltonian(
    cfg: ShootingConfig, sys: LagrangianSystem, z: PhaseState, h: float, p_guess=None
) -> PhaseState:
    """Same map built on the phase-space discrete Lagrangian; the unknown is p^0."""
    _check_space(cfg, "phase")
    if not sys.has_hamiltonian:
        raise ValueError(f"system {sys.name} has no Hamiltonian callables")
    return _idel_step(cfg, sys, z, h, z.p if p_guess is None else p_guess).state


def discrete_hamiltonian_plus_evaluation(
    cfg: ShootingConfig, sys: LagrangianSystem, q0, p1, h: float, p_guess=None
) -> LdEvaluation:
    """Type-II generating function with boundary conditions q^0 = q0, p^n = p1."""
    _check_space(cfg, "phase")
    q0, p1 = np.atleast_1d(np.asarray(q0, dtype=float)), np.atleast_1d(np.asarray(p1, dtype=float))
    m = sys.dim
    guess = p1 if p_guess is None else np.asarray(p_guess, dtype=float)
    nodes, iterations = _shoot(cfg, sys, q0, p1, h, guess, slice(m, 2 * m))
    qn, pn = nodes[-1, :m], nodes[-1, m:]
    value = float(pn @ qn) - _phase_action(cfg, sys, nodes, h)
    return LdEvaluation(
        value=value, q0=nodes[0, :m], v0=nodes[0, m:], qn=qn, vn=pn, nodes=nodes, iterations=iterations,
    )


def discrete_hamiltonian_plus(cfg: ShootingConfig, sys: LagrangianSystem, q0, p1, h: float) -> float:
    """
    H_d+(q0, p1) = p^n q^n - h sum b_i [p^i v^i - H(q^i, p^i)].

    Args:
        cfg: Shooting configuration with a phase-space method
        sys: System with Hamiltonian callables
        q0: Initial position
        p1: Final momentum
        h: Step size

    Returns:
        Value of the discrete Hamiltonian
    """
    return discrete_hamiltonian_plus_evaluation(cfg, sys, q0, p1, h).value


def step_type2(
    cfg: ShootingConfig, sys: LagrangianSystem, z: PhaseState, h: float, p_guess=None
) -> PhaseState:
    """
    Type-II update: solve p0 = D1 H_d+(q0, p^n(p^0)) for p^0, then q1 = D2 H_d+.
    """
    _check_space(cfg, "phase")
    if not sys.has_hamiltonian:
        raise ValueError(f"system {sys.name} has no Hamiltonian callables")
    return _type2_step(cfg, sys, z, h, z.p if p_guess is None else p_guess).state


def _type2_step(cfg: ShootingConfig, sys: LagrangianSystem, z: PhaseState, h: float, guess) -> StepResult:
    m = sys.dim
    f = vector_field(sys, "phase")
    c = cfg.rule.nodes
    q0, p0 = z.q, z.p

    def endpoint(u0: np.ndarray) -> np.ndarray:
        return propagate_array(cfg.method, f, np.concatenate([q0, u0]), h, c)[-1]

    def plus(x0, x1, warm):
        return discrete_hamiltonian_plus_evaluation(cfg, sys, x0, x1, h, warm).value

    def residual(u0: np.ndarray) -> np.ndarray:
        p1 = endpoint(u0)[m:]
        return p0 - fd_grad(lambda x: plus(x, p1, u0), q0, cfg.step_for(q0))

    result = newton_iterate(residual, guess, cfg.outer_cfg)
    end = endpoint(result.x)
    p1 = end[m:]
    q1 = fd_grad(lambda x: plus(q0, x, result.x), p1, cfg.step_for(p1))
    return StepResult(PhaseState(q1, p1), result.x, end[m:], result.iterations)


def self_adjointness_residual(cfg: ShootingConfig, sys: LagrangianSystem, q0, q1, h: float) -> float:
    """|L_d(q0, q1; h) + L_d(q1, q0; -h)|, zero for a self-adjoint discrete Lagrangian."""
    forward = discrete_lagrangian(cfg, sys, q0, q1, h).value
    backward = discrete_lagrangian(cfg, sys, q1, q0, -h).value
    return abs(forward + backward)


def discrete_momentum(
    cfg: ShootingConfig, sys: LagrangianSystem, q0, q1, h: float, generator: Callable[[np.ndarray], np.ndarray]
) -> float:
    """Discrete momentum map <-D1 L_d(q0, q1), xi_Q(q0)>."""
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    return float(-d1_ld(cfg, sys, q0, q1, h) @ np.asarray(generator(q0), dtype=float))


class ShootingIntegrator(BaseIntegrator):
    """
    Time stepper over a shooting-based discrete Lagrangian.

    variant is "lagrangian", "hamiltonian" or "type2". The converged shooting
    trajectory's terminal velocity (or momentum) warm-starts the next step.
    """

    VARIANTS = ("lagrangian", "hamiltonian", "type2")

    def __init__(self, cfg: ShootingConfig, system: LagrangianSystem, variant: str = "lagrangian", name: Optional[str] = None):
        if variant not in self.VARIANTS:
            raise ValueError(f"unknown shooting variant '{variant}'")
        super().__init__(name or f"Shooting[{cfg.method.name}+{cfg.rule.name}:{variant}]")
        self.cfg = cfg
        self.system = system
        self.variant = variant
        _check_space(cfg, "tangent" if variant == "lagrangian" else "phase")
        self._warm: Optional[np.ndarray] = None

    def reset(self) -> None:
        super().reset()
        self._warm = None

    def step(self, state: PhaseState, h: float) -> PhaseState:
        guess = self._warm
        if self.variant == "lagrangian":
            if guess is None:
                guess = inverse_legendre(self.system, state.q, state.p).v
            result = _idel_step(self.cfg, self.system, state, h, guess)
        elif self.variant == "hamiltonian":
            result = _idel_step(self.cfg, self.system, state, h, state.p if guess is None else guess)
        else:
            result = _type2_step(self.cfg, self.system, state, h, state.p if guess is None else guess)
        self._warm = result.un
        self.last_newton_iterations = result.iterations
        self.logger.debug(f"step h={h}: {result.iterations} outer iterations")
        return result.state
