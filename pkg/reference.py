"""
Ground truth for global errors and order estimation.

Reference trajectories come from classical RK4 whose step count is doubled
until two successive results agree to REFERENCE_TOL.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from errors import DegenerateData
from integrators.baselines import RigidBodyState, rigid_body_field
from integrators.liegroup_vi import RigidBody
from onestep import rk4, vector_field
from systems import LagrangianSystem, PhaseState, inverse_legendre, legendre

logger = logging.getLogger("Reference")

REFERENCE_TOL = 1e-12
MIN_STEPS = 2 ** 10
MAX_STEPS = 2 ** 20
ERROR_FLOOR = 1e-13


def rk4_fixed(f: Callable[[np.ndarray], np.ndarray], y0: np.ndarray, T: float, n_steps: int) -> np.ndarray:
    """n_steps classical RK4 steps of size T / n_steps."""
    method = rk4()
    h = T / n_steps
    y = np.array(y0, dtype=float)
    for _ in range(n_steps):
        y = method.advance(f, y, h)
    return y


def reference_ode(
    f: Callable[[np.ndarray], np.ndarray],
    y0,
    T: float,
    tol: float = REFERENCE_TOL,
    min_steps: int = MIN_STEPS,
    max_steps: int = MAX_STEPS,
) -> np.ndarray:
    """
    Integrate y' = f(y) to time T, halving the step until the result settles.

    Args:
        f: Vector field
        y0: Initial value
        T: Final time, non-negative
        tol: Required change between successive step halvings
        min_steps: Starting step count
        max_steps: Largest step count tried

    Returns:
        y(T)
    """
    if T < 0.0:
        raise ValueError(f"final time must be non-negative, got {T}")
    y0 = np.array(y0, dtype=float)
    if T == 0.0:
        return y0
    n = min_steps
    coarse = rk4_fixed(f, y0, T, n)
    while n < max_steps:
        n *= 2
        fine = rk4_fixed(f, y0, T, n)
        change = float(np.max(np.abs(fine - coarse)))
        if change < tol:
            logger.debug(f"Reference settled at {n} steps (change {change:.2e})")
            return fine
        coarse = fine
    logger.warning(f"Reference did not settle below {tol:g} within {max_steps} steps")
    return coarse


def reference_solution(system: LagrangianSystem, z0: PhaseState, T: float) -> PhaseState:
    """
    Phase-space state at time T along the exact flow, to about 1e-12.

    Args:
        system: Lagrangian system
        z0: Initial phase-space state
        T: Final time

    Returns:
        PhaseState at T
    """
    if T == 0.0:
        return z0
    m = system.dim
    tangent = inverse_legendre(system, z0.q, z0.p)
    y = reference_ode(vector_field(system, "tangent"), np.concatenate([tangent.q, tangent.v]), T)
    return legendre(system, y[:m], y[m:])


def rigid_body_reference(body: RigidBody, R0, Omega0, T: float) -> RigidBodyState:
    """Attitude and body velocity at time T from the embedded Euler equations."""
    y0 = RigidBodyState(R0, Omega0).as_array()
    return RigidBodyState.from_array(reference_ode(rigid_body_field(body), y0, T))


def fit_order(points: Sequence[Tuple[float, float]], floor: float = ERROR_FLOOR) -> Tuple[float, float]:
    """
    Least-squares fit log(error) = slope log(h) + intercept.

    Points whose error is at or below the floor are discarded first.

    Args:
        points: (h, error) pairs
        floor: Errors at or below this are round-off dominated

    Returns:
        (slope, intercept)

    Raises:
        DegenerateData: If fewer than 3 usable points with distinct h remain
    """
    usable = [(float(h), float(e)) for h, e in points if h > 0.0 and np.isfinite(e) and e > floor]
    if len(usable) < 3:
        raise DegenerateData(f"need at least 3 points above the {floor:g} floor, got {len(usable)}")
    hs = np.array([p[0] for p in usable])
    errors = np.array([p[1] for p in usable])
    if np.unique(hs).size < 2:
        raise DegenerateData("step sizes must not all be equal")
    slope, intercept = np.polyfit(np.log(hs), np.log(errors), 1)
    return float(slope), float(intercept)


def estimate_order(points: Sequence[Tuple[float, float]], floor: float = ERROR_FLOOR) -> float:
    """Order of convergence: the fitted slope of log(error) against log(h)."""
    return fit_order(points, floor)[0]


@dataclass
class ConvergenceReport:
    """
    Global errors of one method over a step-size sweep.

    slope and intercept are None until fit() succeeds.
    """

    method: str
    system: str
    T: float
    points: List[Tuple[float, float]] = field(default_factory=list)
    slope: Optional[float] = None
    intercept: Optional[float] = None
    reference: str = f"classical RK4, step halved until successive results differ by < {REFERENCE_TOL:g}"

    def add(self, h: float, error: float) -> None:
        if not error >= 0.0:
            raise ValueError(f"global error must be non-negative, got {error}")
        self.points.append((float(h), float(error)))

    def fit(self) -> float:
        """Fit the order line; returns the slope."""
        self.slope, self.intercept = fit_order(self.points)
        return self.slope

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "system": self.system,
            "T": self.T,
            "h": [h for h, _ in self.points],
            "global_error": [e for _, e in self.points],
            "slope": self.slope,
            "intercept": self.intercept,
            "reference": self.reference,
        }
