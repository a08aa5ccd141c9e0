"""
Exception hierarchy shared by the integrators, the solvers and the CLI.

Every error carries the process exit code the harness should return when it
escapes an experiment.
"""

from typing import Optional


class VarbenchError(Exception):
    """Base class for all varbench errors."""

    exit_code: int = 1


class NotSkew(VarbenchError, ValueError):
    """Raised when a matrix handed to vee() has a non-negligible symmetric part."""


class NearPiAngle(VarbenchError, ValueError):
    """Raised when log_so3 is asked for a rotation too close to a half turn."""


class NotRotation(VarbenchError, ValueError):
    """Raised when a matrix fails the orthogonality or orientation check."""


class UnknownRule(VarbenchError, KeyError):
    """Raised for a quadrature rule name outside the catalogue."""

    exit_code = 3

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


class MissingDerivatives(VarbenchError, ValueError):
    """Raised when a derivative-augmented rule is used without endpoint derivatives."""


class NoConvergence(VarbenchError):
    """Raised when Newton's method exhausts its iteration budget."""

    exit_code = 2

    def __init__(self, iterations: int, last_residual_norm: float, message: Optional[str] = None):
        self.iterations = iterations
        self.last_residual_norm = last_residual_norm
        if message is None:
            message = (
                f"Newton did not converge after {iterations} iterations "
                f"(last residual norm {last_residual_norm:.3e})"
            )
        super().__init__(message)


class SingularJacobian(VarbenchError):
    """Raised when the Newton linear system cannot be solved."""

    exit_code = 2


class DegenerateData(VarbenchError, ValueError):
    """Raised when an order estimate is requested from too few usable points."""


class InvalidSpec(VarbenchError, ValueError):
    """Raised for an experiment specification that cannot be run."""

    exit_code = 3
