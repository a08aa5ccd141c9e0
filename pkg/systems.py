"""
Mechanical systems: the Lagrangian contract every integrator consumes and
the builtin example models.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from errors import InvalidSpec
from numerics import NewtonConfig, newton_solve

Vector = np.ndarray
ScalarFn = Callable[[Vector, Vector], float]
VectorFn = Callable[[Vector, Vector], Vector]


def _as_vector(x) -> Vector:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class TangentState:
    """Position and velocity (q, v)."""

    q: Vector
    v: Vector

    def __post_init__(self):
        q, v = _as_vector(self.q), _as_vector(self.v)
        if q.shape != v.shape:
            raise ValueError(f"q and v differ in shape: {q.shape} vs {v.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise ValueError("tangent state must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class PhaseState:
    """Position and conjugate momentum (q, p)."""

    q: Vector
    p: Vector

    def __post_init__(self):
        q, p = _as_vector(self.q), _as_vector(self.p)
        if q.shape != p.shape:
            raise ValueError(f"q and p differ in shape: {q.shape} vs {p.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("phase state must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    def as_array(self) -> Vector:
        return np.concatenate([self.q, self.p])


@dataclass(frozen=True)
class LagrangianSystem:
    """
    Callable bundle describing a mechanical system on R^m.

    accel is the Euler-Lagrange vector field in second-order form. The
    Hamiltonian callables are optional and only required by the Hamiltonian
    and Type-II shooting integrators. mass, when given, returns M(q) with
    dLdv(q, v) = M(q) v, which makes the Legendre transform linear.
    """

    name: str
    dim: int
    L: ScalarFn
    dLdq: VectorFn
    dLdv: VectorFn
    accel: VectorFn
    energy: ScalarFn
    H: Optional[ScalarFn] = None
    dHdq: Optional[VectorFn] = None
    dHdp: Optional[VectorFn] = None
    mass: Optional[Callable[[Vector], np.ndarray]] = None
    symmetries: Tuple[Callable[[Vector], Vector], ...] = field(default_factory=tuple)

    @property
    def has_hamiltonian(self) -> bool:
        return self.H is not None and self.dHdq is not None and self.dHdp is not None

    def dLdt(self, q: Vector, v: Vector) -> float:
        """Time derivative of L along the Euler-Lagrange flow through (q, v)."""
        return float(self.dLdq(q, v) @ v + self.dLdv(q, v) @ self.accel(q, v))

    def phase_energy(self, q: Vector, p: Vector) -> float:
        """Energy of a phase-space point, via H when available."""
        if self.H is not None:
            return float(self.H(q, p))
        state = inverse_legendre(self, q, p)
        return float(self.energy(state.q, state.v))


@dataclass(frozen=True)
class ReducedLagrangian:
    """Reduced Lagrangian l(eta) on so(3) with its gradient."""

    l: Callable[[Vector], float]
    dldeta: Callable[[Vector], Vector]
    inertia: Optional[np.ndarray] = None


def builtin_pendulum() -> LagrangianSystem:
    """Planar pendulum of unit mass and length: L = v^2/2 + cos q."""
    return LagrangianSystem(
        name="pendulum",
        dim=1,
        L=lambda q, v: float(0.5 * v @ v + np.sum(np.cos(q))),
        dLdq=lambda q, v: -np.sin(q),
        dLdv=lambda q, v: np.array(v, dtype=float),
        accel=lambda q, v: -np.sin(q),
        energy=lambda q, v: float(0.5 * v @ v - np.sum(np.cos(q))),
        H=lambda q, p: float(0.5 * p @ p - np.sum(np.cos(q))),
        dHdq=lambda q, p: np.sin(q),
        dHdp=lambda q, p: np.array(p, dtype=float),
        mass=lambda q: np.eye(1),
    )


def builtin_sho() -> LagrangianSystem:
    """Unit harmonic oscillator: L = v^2/2 - q^2/2."""
    return LagrangianSystem(
        name="sho",
        dim=1,
        L=lambda q, v: float(0.5 * v @ v - 0.5 * q @ q),
        dLdq=lambda q, v: -np.array(q, dtype=float),
        dLdv=lambda q, v: np.array(v, dtype=float),
        accel=lambda q, v: -np.array(q, dtype=float),
        energy=lambda q, v: float(0.5 * v @ v + 0.5 * q @ q),
        H=lambda q, p: float(0.5 * p @ p + 0.5 * q @ q),
        dHdq=lambda q, p: np.array(q, dtype=float),
        dHdp=lambda q, p: np.array(p, dtype=float),
        mass=lambda q: np.eye(1),
    )


def _axis_generator(j: int, m: int) -> Callable[[Vector], Vector]:
    def generator(q: Vector) -> Vector:
        e = np.zeros(m)
        e[j] = 1.0
        return e

    return generator


def builtin_free_particle(m: int = 1) -> LagrangianSystem:
    """
    Free particle in R^m: L = |v|^2/2, with one translation generator per axis.

    Args:
        m: Dimension, at least 1
    """
    if m < 1:
        raise InvalidSpec(f"free particle dimension must be >= 1, got {m}")
    return LagrangianSystem(
        name="free-particle",
        dim=m,
        L=lambda q, v: float(0.5 * v @ v),
        dLdq=lambda q, v: np.zeros(m),
        dLdv=lambda q, v: np.array(v, dtype=float),
        accel=lambda q, v: np.zeros(m),
        energy=lambda q, v: float(0.5 * v @ v),
        H=lambda q, p: float(0.5 * p @ p),
        dHdq=lambda q, p: np.zeros(m),
        dHdp=lambda q, p: np.array(p, dtype=float),
        mass=lambda q: np.eye(m),
        symmetries=tuple(_axis_generator(j, m) for j in range(m)),
    )


def builtin_two_particle() -> LagrangianSystem:
    """
    Two unit masses on a line coupled by the potential 1 - cos(q1 - q2).

    Invariant under common translation, generator (1, 1).
    """

    def force(q: Vector) -> Vector:
        s = np.sin(q[0] - q[1])
        return np.array([-s, s])

    return LagrangianSystem(
        name="two-particle",
        dim=2,
        L=lambda q, v: float(0.5 * v @ v - (1.0 - np.cos(q[0] - q[1]))),
        dLdq=lambda q, v: force(q),
        dLdv=lambda q, v: np.array(v, dtype=float),
        accel=lambda q, v: force(q),
        energy=lambda q, v: float(0.5 * v @ v + (1.0 - np.cos(q[0] - q[1]))),
        H=lambda q, p: float(0.5 * p @ p + (1.0 - np.cos(q[0] - q[1]))),
        dHdq=lambda q, p: -force(q),
        dHdp=lambda q, p: np.array(p, dtype=float),
        mass=lambda q: np.eye(2),
        symmetries=(lambda q: np.ones(2),),
    )


def rigid_body_reduced(J) -> ReducedLagrangian:
    """Free rigid body reduced Lagrangian l(eta) = eta . J eta / 2."""
    J = np.asarray(J, dtype=float)
    return ReducedLagrangian(
        l=lambda eta: float(0.5 * eta @ J @ eta),
        dldeta=lambda eta: J @ eta,
        inertia=J,
    )


BUILTIN_SYSTEMS: Dict[str, Callable[[], LagrangianSystem]] = {
    "pendulum": builtin_pendulum,
    "sho": builtin_sho,
    "free-particle": builtin_free_particle,
    "two-particle": builtin_two_particle,
}


def get_system(name: str) -> LagrangianSystem:
    """Look up a builtin Lagrangian system by name."""
    try:
        return BUILTIN_SYSTEMS[name]()
    except KeyError:
        raise InvalidSpec(f"unknown system '{name}' (known: {', '.join(sorted(BUILTIN_SYSTEMS))})")


def legendre(sys: LagrangianSystem, q, v) -> PhaseState:
    """Fibre derivative (q, v) -> (q, dL/dv)."""
    q, v = _as_vector(q), _as_vector(v)
    return PhaseState(q, sys.dLdv(q, v))


def inverse_legendre(sys: LagrangianSystem, q, p, cfg: Optional[NewtonConfig] = None) -> TangentState:
    """
    Invert p = dL/dv(q, v) for v.

    Uses the mass matrix when the system provides one, Newton's method
    otherwise.

    Args:
        sys: Lagrangian system
        q: Position
        p: Momentum
        cfg: Newton controls for the nonlinear case

    Returns:
        The tangent state (q, v)
    """
    q, p = _as_vector(q), _as_vector(p)
    if sys.mass is not None:
        return TangentState(q, np.linalg.solve(np.atleast_2d(sys.mass(q)), p))
    v = newton_solve(lambda v: sys.dLdv(q, v) - p, p.copy(), cfg or NewtonConfig(polish=1))
    return TangentState(q, v)


def sho_exact_discrete_lagrangian(q0: float, q1: float, h: float) -> float:
    """Action of the unit oscillator along the solution from q0 to q1 in time h."""
    return float(((q0 * q0 + q1 * q1) * np.cos(h) - 2.0 * q0 * q1) / (2.0 * np.sin(h)))


def free_particle_exact_discrete_lagrangian(q0, q1, h: float) -> float:
    """|q1 - q0|^2 / (2h)."""
    dq = _as_vector(q1) - _as_vector(q0)
    return float(dq @ dq / (2.0 * h))
