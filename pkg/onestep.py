"""
Catalogue of one-step methods on tangent space (q, v) or phase space (q, p).

A method advances a flat state vector z = (q, v) or z = (q, p) through a
vector field f(z). The tangent field is (v, accel(q, v)); the phase field is
(dH/dp, -dH/dq).
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Literal, Sequence, Union

import numpy as np

from numerics import NewtonConfig, newton_iterate
from systems import LagrangianSystem, PhaseState, TangentState

logger = logging.getLogger("OneStep")

Space = Literal["tangent", "phase"]
State = Union[TangentState, PhaseState]
VectorField = Callable[[np.ndarray], np.ndarray]
FlowMap = Callable[[VectorField, np.ndarray, float], np.ndarray]

# stage equations feed finite-difference derivatives downstream, so they are
# solved to round-off
STAGE_NEWTON = NewtonConfig(tol=1e-13, max_iter=50, polish=1)


@dataclass(frozen=True)
class OneStepMethod:
    """
    One-step method descriptor.

    Attributes:
        name: Catalogue name
        order: Classical order p
        self_adjoint: Whether the method equals its own adjoint
        space: State space the method is applied on
        flow_map: (f, z, h) -> z advanced by one step of size h
        equivariant: Commutes with affine point transformations
    """

    name: str
    order: int
    self_adjoint: bool
    space: Space
    flow_map: FlowMap
    equivariant: bool = True

    def field(self, system: LagrangianSystem) -> VectorField:
        return vector_field(system, self.space)

    def advance(self, f: VectorField, z: np.ndarray, h: float) -> np.ndarray:
        if h == 0.0:
            return np.array(z, dtype=float)
        return self.flow_map(f, z, h)

    def stepper(self, system: LagrangianSystem, state: State, h: float) -> State:
        """Advance a TangentState or PhaseState by one step."""
        z = _state_to_array(state, self.space)
        z1 = self.advance(self.field(system), z, h)
        return _array_to_state(z1, system.dim, self.space)


def vector_field(system: LagrangianSystem, space: Space) -> VectorField:
    """First-order vector field of a system on the requested space."""
    m = system.dim
    if space == "tangent":
        def f(z: np.ndarray) -> np.ndarray:
            q, v = z[:m], z[m:]
            return np.concatenate([v, system.accel(q, v)])
    elif space == "phase":
        if not system.has_hamiltonian:
            raise ValueError(f"system {system.name} has no Hamiltonian callables")

        def f(z: np.ndarray) -> np.ndarray:
            q, p = z[:m], z[m:]
            return np.concatenate([system.dHdp(q, p), -system.dHdq(q, p)])
    else:
        raise ValueError(f"unknown state space '{space}'")
    return f


def _state_to_array(state: State, space: Space) -> np.ndarray:
    if space == "tangent":
        if not isinstance(state, TangentState):
            raise TypeError("tangent-space method needs a TangentState")
        return np.concatenate([state.q, state.v])
    if not isinstance(state, PhaseState):
        raise TypeError("phase-space method needs a PhaseState")
    return np.concatenate([state.q, state.p])


def _array_to_state(z: np.ndarray, m: int, space: Space) -> State:
    if space == "tangent":
        return TangentState(z[:m], z[m:])
    return PhaseState(z[:m], z[m:])


def _euler_map(f: VectorField, z: np.ndarray, h: float) -> np.ndarray:
    return z + h * f(z)


def _explicit_midpoint_map(f: VectorField, z: np.ndarray, h: float) -> np.ndarray:
    return z + h * f(z + 0.5 * h * f(z))


def _rk4_map(f: VectorField, z: np.ndarray, h: float) -> np.ndarray:
    k1 = f(z)
    k2 = f(z + 0.5 * h * k1)
    k3 = f(z + 0.5 * h * k2)
    k4 = f(z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _implicit_midpoint_map(f: VectorField, z: np.ndarray, h: float) -> np.ndarray:
    # unknown is the stage slope K = f(z + h K / 2); explicit midpoint predictor
    guess = f(z + 0.5 * h * f(z))
    result = newton_iterate(lambda K: K - f(z + 0.5 * h * K), guess, STAGE_NEWTON)
    return z + h * result.x


_GAUSS2_C = np.sqrt(3.0) / 6.0
_GAUSS2_A = np.array([[0.25, 0.25 - _GAUSS2_C], [0.25 + _GAUSS2_C, 0.25]])


def _gauss2_map(f: VectorField, z: np.ndarray, h: float) -> np.ndarray:
    n = z.size

    def residual(K: np.ndarray) -> np.ndarray:
        k1, k2 = K[:n], K[n:]
        y1 = z + h * (_GAUSS2_A[0, 0] * k1 + _GAUSS2_A[0, 1] * k2)
        y2 = z + h * (_GAUSS2_A[1, 0] * k1 + _GAUSS2_A[1, 1] * k2)
        return np.concatenate([k1 - f(y1), k2 - f(y2)])

    f0 = f(z)
    K = newton_iterate(residual, np.concatenate([f0, f0]), STAGE_NEWTON).x
    return z + 0.5 * h * (K[:n] + K[n:])


def explicit_euler(space: Space = "tangent") -> OneStepMethod:
    return OneStepMethod("explicit_euler", 1, False, space, _euler_map)


def explicit_midpoint(space: Space = "tangent") -> OneStepMethod:
    return OneStepMethod("explicit_midpoint", 2, False, space, _explicit_midpoint_map)


def rk4(space: Space = "tangent") -> OneStepMethod:
    """Classical four-stage Runge-Kutta method."""
    return OneStepMethod("rk4", 4, False, space, _rk4_map)


def implicit_midpoint(space: Space = "tangent") -> OneStepMethod:
    """Implicit midpoint rule; stage equation solved by Newton."""
    return OneStepMethod("implicit_midpoint", 2, True, space, _implicit_midpoint_map)


def gauss2(space: Space = "tangent") -> OneStepMethod:
    """Two-stage Gauss-Legendre collocation, symplectic and of order 4."""
    return OneStepMethod("gauss2", 4, True, space, _gauss2_map)


METHODS = {
    "explicit_euler": explicit_euler,
    "explicit_midpoint": explicit_midpoint,
    "rk4": rk4,
    "implicit_midpoint": implicit_midpoint,
    "gauss2": gauss2,
}


def get_method(name: str, space: Space = "tangent") -> OneStepMethod:
    try:
        method = METHODS[name](space)
    except KeyError:
        raise ValueError(f"unknown one-step method '{name}' (known: {', '.join(METHODS)})")
    logger.debug(f"Selected {method.name} (order {method.order}) on {space} space")
    return method


def propagate_array(
    method: OneStepMethod, f: VectorField, z0: np.ndarray, h: float, c: Sequence[float]
) -> np.ndarray:
    """
    Node states as rows: row i is the state at c_i h.

    Substeps have size (c_{i+1} - c_i) h; zero-length substeps are identity.
    """
    c = np.asarray(c, dtype=float)
    nodes = np.empty((c.size, np.size(z0)))
    nodes[0] = z0
    for i in range(c.size - 1):
        nodes[i + 1] = method.advance(f, nodes[i], (c[i + 1] - c[i]) * h)
    return nodes


def propagate_nodes(
    method: OneStepMethod, system: LagrangianSystem, state0: State, h: float, c: Sequence[float]
) -> List[State]:
    """
    Apply the method node to node over [0, h].

    Args:
        method: One-step method
        system: System supplying the vector field
        state0: State at node 0
        h: Step size
        c: Nodes, ascending from 0 to 1

    Returns:
        States at every node
    """
    c = np.asarray(c, dtype=float)
    if c[0] != 0.0 or c[-1] != 1.0 or np.any(np.diff(c) < 0.0):
        raise ValueError("nodes must ascend from 0 to 1")
    z0 = _state_to_array(state0, method.space)
    rows = propagate_array(method, method.field(system), z0, h, c)
    return [_array_to_state(row, system.dim, method.space) for row in rows]
