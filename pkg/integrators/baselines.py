"""
Non-variational reference integrators.

Rigid-body baselines act on the 12-dimensional embedding (R row-major,
Omega) without reprojection, except the Crouch-Grossman method which
updates R by exponentials. Lagrangian-system baselines run a one-step
method on tangent space and map (q, p) through the Legendre transform.
"""

from dataclasses import dataclass, replace
from typing import Any, Dict, Literal, Optional

import numpy as np

from geometry import exp_so3, hat, orthogonality_error
from numerics import NewtonConfig, newton_iterate
from onestep import STAGE_NEWTON, OneStepMethod, explicit_midpoint
from systems import LagrangianSystem, PhaseState, inverse_legendre, legendre

from .base_integrator import BaseIntegrator
from .liegroup_vi import RigidBody

RigidBaseline = Literal["rk", "srk", "lgm"]


@dataclass(frozen=True)
class RigidBodyState:
    """Attitude and body angular velocity; R is not required to stay orthogonal."""

    R: np.ndarray
    Omega: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        Omega = np.asarray(self.Omega, dtype=float)
        if R.shape != (3, 3) or Omega.shape != (3,):
            raise ValueError("rigid-body state needs a 3x3 attitude and a 3-vector velocity")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "Omega", Omega)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.R.ravel(), self.Omega])

    @classmethod
    def from_array(cls, y: np.ndarray) -> "RigidBodyState":
        return cls(np.asarray(y[:9]).reshape(3, 3), np.asarray(y[9:12]))


def rigid_body_field(body: RigidBody):
    """Embedded vector field R' = R hat(Omega), Omega' = J^-1 (J Omega x Omega)."""

    def f(y: np.ndarray) -> np.ndarray:
        R = y[:9].reshape(3, 3)
        Omega = y[9:12]
        return np.concatenate([(R @ hat(Omega)).ravel(), body.euler_rhs(Omega)])

    return f


def baseline_crouch_grossman(body: RigidBody, R, Omega, h: float):
    """
    Two-stage Crouch-Grossman step with stages at 0 and 1 and equal weights.

    Omega follows Heun's method, R is advanced by a product of exponentials
    so it stays on SO(3) up to round-off.

    Returns:
        (R_next, Omega_next)
    """
    R = np.asarray(R, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    k1 = body.euler_rhs(Omega)
    Omega2 = Omega + h * k1
    k2 = body.euler_rhs(Omega2)
    R_next = R @ exp_so3(0.5 * h * Omega) @ exp_so3(0.5 * h * Omega2)
    return R_next, Omega + 0.5 * h * (k1 + k2)


def baseline_explicit_midpoint(body: RigidBody, R, Omega, h: float):
    y = RigidBodyState(R, Omega).as_array()
    out = RigidBodyState.from_array(explicit_midpoint().advance(rigid_body_field(body), y, h))
    return out.R, out.Omega


def _implicit_midpoint(body: RigidBody, y: np.ndarray, h: float, cfg: NewtonConfig):
    f = rigid_body_field(body)
    guess = f(y + 0.5 * h * f(y))
    result = newton_iterate(lambda K: K - f(y + 0.5 * h * K), guess, cfg)
    return y + h * result.x, result.iterations


def baseline_implicit_midpoint(body: RigidBody, R, Omega, h: float, cfg: NewtonConfig = STAGE_NEWTON):
    """Implicit midpoint on the embedding; quadratic invariants are kept exactly."""
    y, _ = _implicit_midpoint(body, RigidBodyState(R, Omega).as_array(), h, cfg)
    out = RigidBodyState.from_array(y)
    return out.R, out.Omega


class RigidBodyBaselineIntegrator(BaseIntegrator):
    """Rigid-body baseline selected by kind: "rk", "srk" or "lgm"."""

    NAMES = {"rk": "explicit midpoint", "srk": "implicit midpoint", "lgm": "Crouch-Grossman"}

    def __init__(self, body: RigidBody, kind: RigidBaseline, name: Optional[str] = None):
        if kind not in self.NAMES:
            raise ValueError(f"unknown rigid-body baseline '{kind}'")
        super().__init__(name or f"Baseline[{self.NAMES[kind]}]")
        self.body = body
        self.kind = kind

    def initial_state(self, R0, Omega0, h: float) -> RigidBodyState:
        self.reset()
        return RigidBodyState(R0, Omega0)

    def step(self, state: RigidBodyState, h: float) -> RigidBodyState:
        if self.kind == "lgm":
            R, Omega = baseline_crouch_grossman(self.body, state.R, state.Omega, h)
        elif self.kind == "rk":
            R, Omega = baseline_explicit_midpoint(self.body, state.R, state.Omega, h)
        else:
            y, iterations = _implicit_midpoint(self.body, state.as_array(), h, STAGE_NEWTON)
            self.last_newton_iterations = iterations
            return RigidBodyState.from_array(y)
        return replace(state, R=R, Omega=Omega)

    def diagnostics(self, state: RigidBodyState) -> Dict[str, Any]:
        body_momentum = self.body.J @ state.Omega
        return {
            "R": state.R,
            "body_momentum": body_momentum,
            "energy": self.body.energy(state.Omega),
            "momentum_energy": self.body.momentum_energy(body_momentum),
            "momentum": state.R @ body_momentum,
            "ortho_error": orthogonality_error(state.R),
        }


class OdeBaselineIntegrator(BaseIntegrator):
    """One-step method on (q, v) presented as a map on (q, p)."""

    def __init__(self, method: OneStepMethod, system: LagrangianSystem, name: Optional[str] = None):
        if method.space != "tangent":
            raise ValueError("baseline methods run on tangent space")
        super().__init__(name or f"Baseline[{method.name}]")
        self.method = method
        self.system = system

    def step(self, state: PhaseState, h: float) -> PhaseState:
        tangent = inverse_legendre(self.system, state.q, state.p)
        advanced = self.method.stepper(self.system, tangent, h)
        return legendre(self.system, advanced.q, advanced.v)
