"""
Numerical building blocks: quadrature rules on [0, h], Lagrange bases on
control times, Newton's method and central finite differences.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from errors import MissingDerivatives, NoConvergence, SingularJacobian, UnknownRule

logger = logging.getLogger("Numerics")

EPS = float(np.finfo(float).eps)
FD_BASE_STEP = EPS ** (1.0 / 3.0)

RULE_NAMES = ("trapezoid", "simpson", "lobatto4", "gauss2_padded", "gauss3_padded", "euler_maclaurin2")
_GAUSS_PADDED = re.compile(r"^gauss(\d+)_padded$")


def is_symmetric_rule(nodes: np.ndarray, weights: np.ndarray, tol: float = 1e-14) -> bool:
    """True when c_i + c_{n-i} = 1 and b_i = b_{n-i} for every i."""
    return bool(
        np.allclose(nodes + nodes[::-1], 1.0, rtol=0.0, atol=tol)
        and np.allclose(weights, weights[::-1], rtol=0.0, atol=tol)
    )


@dataclass(frozen=True)
class QuadratureRule:
    """
    Quadrature rule on [0, 1] scaled to [0, h] at use.

    Nodes include both endpoints; rules without endpoint nodes carry them
    with zero weight. deriv_weights, when present, multiply h^2 * f'(0) and
    h^2 * f'(h).
    """

    name: str
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    symmetric: bool
    deriv_weights: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 2:
            raise ValueError("nodes and weights must be 1-D arrays of equal length >= 2")
        if nodes[0] != 0.0 or nodes[-1] != 1.0 or np.any(np.diff(nodes) < 0.0):
            raise ValueError(f"rule {self.name}: nodes must ascend from 0 to 1")
        if abs(weights.sum() - 1.0) > 1e-13:
            raise ValueError(f"rule {self.name}: weights sum to {weights.sum()!r}, expected 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def needs_derivatives(self) -> bool:
        return self.deriv_weights is not None


def _gauss_padded(k: int) -> QuadratureRule:
    x, w = leggauss(k)
    nodes = np.concatenate(([0.0], 0.5 * (x + 1.0), [1.0]))
    weights = np.concatenate(([0.0], 0.5 * w, [0.0]))
    return QuadratureRule(
        name=f"gauss{k}_padded",
        nodes=nodes,
        weights=weights,
        order=2 * k,
        symmetric=is_symmetric_rule(nodes, weights),
    )


def make_rule(name: str) -> QuadratureRule:
    """
    Build a quadrature rule from the catalogue.

    Args:
        name: One of trapezoid, simpson, lobatto4, gaussK_padded (K >= 1),
            euler_maclaurin2

    Returns:
        The QuadratureRule

    Raises:
        UnknownRule: For any other name
    """
    if name == "trapezoid":
        nodes, weights, order, deriv = [0.0, 1.0], [0.5, 0.5], 2, None
    elif name == "simpson":
        nodes, weights, order, deriv = [0.0, 0.5, 1.0], [1 / 6, 2 / 3, 1 / 6], 4, None
    elif name == "lobatto4":
        r = 0.5 / np.sqrt(5.0)
        nodes, weights, order, deriv = [0.0, 0.5 - r, 0.5 + r, 1.0], [1 / 12, 5 / 12, 5 / 12, 1 / 12], 6, None
    elif name == "euler_maclaurin2":
        nodes, weights, order, deriv = [0.0, 1.0], [0.5, 0.5], 4, (1 / 12, -1 / 12)
    else:
        match = _GAUSS_PADDED.match(name)
        if match and int(match.group(1)) >= 1:
            return _gauss_padded(int(match.group(1)))
        raise UnknownRule(f"unknown quadrature rule '{name}' (known: {', '.join(RULE_NAMES)})")
    nodes, weights = np.asarray(nodes, dtype=float), np.asarray(weights, dtype=float)
    return QuadratureRule(
        name=name,
        nodes=nodes,
        weights=weights,
        order=order,
        symmetric=is_symmetric_rule(nodes, weights),
        deriv_weights=deriv,
    )


def integrate(
    rule: QuadratureRule,
    h: float,
    samples: Sequence[float],
    deriv_samples: Optional[Tuple[float, float]] = None,
) -> float:
    """
    Apply a rule to samples of f at t = c_i * h.

    Args:
        rule: Quadrature rule
        h: Interval length (may be negative)
        samples: f(c_i h) for every node
        deriv_samples: (f'(0), f'(h)) for derivative-augmented rules

    Returns:
        h * sum(b_i f_i) + h^2 * (w_start f'(0) + w_end f'(h))

    Raises:
        MissingDerivatives: If the rule needs endpoint derivatives and none were given
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] != rule.size:
        raise ValueError(f"rule {rule.name} has {rule.size} nodes, got {samples.shape[0]} samples")
    value = h * (rule.weights @ samples)
    if rule.deriv_weights is not None:
        if deriv_samples is None:
            raise MissingDerivatives(f"rule {rule.name} needs endpoint derivative samples")
        w_start, w_end = rule.deriv_weights
        value = value + h * h * (w_start * deriv_samples[0] + w_end * deriv_samples[1])
    return value


def _check_control_times(d: np.ndarray, nu: int) -> None:
    if not 0 <= nu < d.size:
        raise ValueError(f"basis index {nu} outside 0..{d.size - 1}")


def lagrange_basis(d: Sequence[float], nu: int, tau: float) -> float:
    """
    Cardinal Lagrange polynomial l_nu on the control times d, evaluated at tau.

    Args:
        d: Control times, strictly ascending from 0 to 1
        nu: Basis index
        tau: Evaluation point

    Returns:
        prod_{mu != nu} (tau - d_mu) / (d_nu - d_mu)
    """
    d = np.asarray(d, dtype=float)
    _check_control_times(d, nu)
    others = np.delete(d, nu)
    return float(np.prod((tau - others) / (d[nu] - others)))


def lagrange_basis_deriv(d: Sequence[float], nu: int, tau: float) -> float:
    """Exact derivative of lagrange_basis(d, nu, .) at tau."""
    d = np.asarray(d, dtype=float)
    _check_control_times(d, nu)
    others = np.delete(d, nu)
    denom = d[nu] - others
    total = 0.0
    for j in range(others.size):
        rest = np.delete(others, j)
        total += np.prod((tau - rest) / np.delete(denom, j)) / denom[j]
    return float(total)


def lagrange_tables(d: Sequence[float], taus: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Basis values and derivatives for every control time and evaluation point.

    Returns:
        (values, derivs), each of shape (len(taus), len(d))
    """
    d = np.asarray(d, dtype=float)
    values = np.array([[lagrange_basis(d, nu, t) for nu in range(d.size)] for t in taus])
    derivs = np.array([[lagrange_basis_deriv(d, nu, t) for nu in range(d.size)] for t in taus])
    return values, derivs


@dataclass(frozen=True)
class NewtonConfig:
    """
    Newton iteration controls.

    fd_step None means eps^(1/3) * max(1, |x|). step_tol, when positive, also
    accepts an iterate whose update norm fell below it. polish extra
    iterations run after the residual test passes.
    """

    tol: float = 1e-12
    max_iter: int = 50
    fd_step: Optional[float] = None
    step_tol: float = 0.0
    polish: int = 0

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.fd_step is not None and not self.fd_step > 0.0:
            raise ValueError(f"fd_step must be positive, got {self.fd_step}")
        if self.polish < 0:
            raise ValueError("polish must be non-negative")

    def step_for(self, x: np.ndarray) -> float:
        """Finite-difference step used around x."""
        if self.fd_step is not None:
            return self.fd_step
        return FD_BASE_STEP * max(1.0, float(np.linalg.norm(x)))


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual_norm: float
    history: list = field(default_factory=list)


def fd_jacobian(residual: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float) -> np.ndarray:
    """Central-difference Jacobian of a vector residual."""
    x = np.asarray(x, dtype=float)
    columns = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        columns.append((np.atleast_1d(residual(x + e)) - np.atleast_1d(residual(x - e))) / (2.0 * step))
    return np.column_stack(columns)


def newton_iterate(
    residual: Callable[[np.ndarray], np.ndarray],
    x0,
    cfg: Optional[NewtonConfig] = None,
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> NewtonResult:
    """
    Newton's method with iteration bookkeeping.

    Args:
        residual: Map R^n -> R^n
        x0: Initial guess (scalar or vector)
        cfg: Iteration controls, defaults to NewtonConfig()
        jac: Optional analytic Jacobian; central differences otherwise

    Returns:
        NewtonResult with the root, the iteration count and residual history

    Raises:
        NoConvergence: If max_iter updates do not reach the tolerance
        SingularJacobian: If the linear system cannot be solved
    """
    cfg = cfg or NewtonConfig()
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    r = np.atleast_1d(np.asarray(residual(x), dtype=float))
    if r.shape != x.shape:
        raise ValueError(f"residual dimension {r.shape} differs from unknown dimension {x.shape}")
    norm = float(np.linalg.norm(r))
    history = [norm]
    iterations = 0
    polish_left = cfg.polish
    converged = norm < cfg.tol

    while True:
        if converged:
            if polish_left == 0 or norm == 0.0:
                return NewtonResult(x=x, iterations=iterations, residual_norm=norm, history=history)
            polish_left -= 1
        if not np.isfinite(norm):
            raise NoConvergence(iterations, norm, f"residual became non-finite after {iterations} iterations")
        if iterations >= cfg.max_iter:
            logger.debug(f"Newton stopped at {iterations} iterations, residual {norm:.3e}")
            raise NoConvergence(iterations, norm)

        J = jac(x) if jac is not None else fd_jacobian(residual, x, cfg.step_for(x))
        J = np.atleast_2d(np.asarray(J, dtype=float))
        try:
            dx = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as e:
            raise SingularJacobian(f"singular Jacobian at iteration {iterations}: {e}")
        if not np.all(np.isfinite(dx)):
            raise SingularJacobian(f"non-finite Newton update at iteration {iterations}")

        x = x - dx
        iterations += 1
        r = np.atleast_1d(np.asarray(residual(x), dtype=float))
        norm = float(np.linalg.norm(r))
        history.append(norm)
        step_small = cfg.step_tol > 0.0 and float(np.linalg.norm(dx)) < cfg.step_tol
        converged = converged or norm < cfg.tol or step_small
        if step_small and np.isfinite(norm):
            # no further progress is possible once the update is below step_tol
            return NewtonResult(x=x, iterations=iterations, residual_norm=norm, history=history)


def newton_solve(
    residual: Callable[[np.ndarray], np.ndarray],
    x0,
    cfg: Optional[NewtonConfig] = None,
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """
    Solve residual(x) = 0 by Newton's method.

    Args:
        residual: Map R^n -> R^n
        x0: Initial guess
        cfg: Iteration controls
        jac: Optional analytic Jacobian

    Returns:
        x with |residual(x)| < cfg.tol
    """
    return newton_iterate(residual, x0, cfg, jac).x


def fd_grad(f: Callable[[np.ndarray], float], x, step: float) -> np.ndarray:
    """
    Central-difference gradient of a scalar function.

    Args:
        f: Scalar function of a vector
        x: Evaluation point
        step: Difference step, positive

    Returns:
        Vector of (f(x + step e_j) - f(x - step e_j)) / (2 step)
    """
    if not step > 0.0:
        raise ValueError(f"step must be positive, got {step}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grad = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        grad[j] = (f(x + e) - f(x - e)) / (2.0 * step)
    return grad
