"""
Fixed-size linear algebra on SO(3) and its Lie algebra so(3).

Vectors are numpy arrays of shape (3,), matrices numpy arrays of shape (3, 3).
All functions are pure and return fresh arrays.
"""

import numpy as np

from errors import NearPiAngle, NotRotation, NotSkew

Vec3 = np.ndarray
Mat3 = np.ndarray
Rotation = np.ndarray

SMALL_ANGLE = 1e-4
SKEW_TOL = 1e-10
ROTATION_TOL = 1e-12
PI_MARGIN = 1e-6
SERIES_RTOL = 1e-16
SERIES_MAX_TERMS = 30

_I3 = np.eye(3)


def hat(v: Vec3) -> Mat3:
    """
    Map a 3-vector to the skew-symmetric matrix with hat(v) @ w == cross(v, w).

    Args:
        v: Vector in R^3

    Returns:
        3x3 skew-symmetric matrix
    """
    x, y, z = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def vee(M: Mat3, tol: float = SKEW_TOL) -> Vec3:
    """
    Inverse of hat().

    Args:
        M: Skew-symmetric 3x3 matrix
        tol: Largest allowed Frobenius norm of the symmetric part

    Returns:
        The vector v with hat(v) == M

    Raises:
        NotSkew: If M is not skew-symmetric to tol
    """
    M = np.asarray(M, dtype=float)
    sym = 0.5 * (M + M.T)
    if np.linalg.norm(sym) > tol:
        raise NotSkew(f"matrix is not skew-symmetric (symmetric part {np.linalg.norm(sym):.3e})")
    return np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]]) / 2.0


def _rodrigues_coefficients(theta: float):
    """sin(t)/t and (1 - cos t)/t^2, with Taylor branches near zero."""
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    else:
        a = np.sin(theta) / theta
        half = np.sin(0.5 * theta) / theta
        b = 2.0 * half * half
    return a, b


def exp_so3(f: Vec3) -> Rotation:
    """
    Exponential map so(3) -> SO(3) by Rodrigues' formula.

    Args:
        f: Rotation vector (axis times angle, radians)

    Returns:
        Rotation matrix I + a*S + b*S^2 with S = hat(f)
    """
    f = np.asarray(f, dtype=float)
    S = hat(f)
    a, b = _rodrigues_coefficients(float(np.linalg.norm(f)))
    return _I3 + a * S + b * (S @ S)


def rotation_angle(F: Rotation) -> float:
    """Rotation angle in [0, pi] of a rotation matrix."""
    F = np.asarray(F, dtype=float)
    w = 0.5 * np.array([F[2, 1] - F[1, 2], F[0, 2] - F[2, 0], F[1, 0] - F[0, 1]])
    # atan2 form of acos((tr F - 1)/2), accurate at both ends of the range
    return float(np.arctan2(np.linalg.norm(w), 0.5 * (np.trace(F) - 1.0)))


def log_so3(F: Rotation) -> Vec3:
    """
    Logarithm SO(3) -> so(3), the inverse of exp_so3 away from half turns.

    Args:
        F: Rotation matrix with rotation angle below pi - 1e-6

    Returns:
        Rotation vector f with exp_so3(f) == F

    Raises:
        NearPiAngle: If the rotation angle is within 1e-6 of pi
    """
    F = np.asarray(F, dtype=float)
    w = 0.5 * np.array([F[2, 1] - F[1, 2], F[0, 2] - F[2, 0], F[1, 0] - F[0, 1]])
    sin_theta = float(np.linalg.norm(w))
    theta = float(np.arctan2(sin_theta, 0.5 * (np.trace(F) - 1.0)))
    if theta >= np.pi - PI_MARGIN:
        raise NearPiAngle(f"rotation angle {theta:.9f} is too close to pi for a unique logarithm")
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        scale = 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0
    else:
        scale = theta / sin_theta
    return scale * w


def cayley(f: Vec3) -> Rotation:
    """
    Cayley map (I + S)(I - S)^-1 with S = hat(f).

    The result is the rotation about f/|f| by 2*arctan(|f|).
    """
    S = hat(f)
    # I - S is invertible for every skew S and commutes with I + S
    return np.linalg.solve(_I3 - S, _I3 + S)


def cayley_inverse(F: Rotation) -> Vec3:
    """Inverse Cayley map: vee((F + I)^-1 (F - I)) for rotations away from half turns."""
    F = np.asarray(F, dtype=float)
    S = np.linalg.solve(F + _I3, F - _I3)
    return vee(0.5 * (S - S.T), tol=np.inf)


def _apply_series(xi: Vec3, v: Vec3, offset: int, max_terms: int) -> Vec3:
    """Sum_{n>=0} ad_xi^n v / (n + offset)!, truncated at round-off or max_terms."""
    w = hat(xi)
    term = np.asarray(v, dtype=float) / float(np.prod(np.arange(1, offset + 1)))
    result = term.copy()
    for n in range(1, max_terms):
        term = (w @ term) / (n + offset)
        result = result + term
        if np.linalg.norm(term) <= SERIES_RTOL * np.linalg.norm(result):
            break
    return result


def dexp_ad(xi: Vec3, v: Vec3, max_terms: int = SERIES_MAX_TERMS) -> Vec3:
    """
    Apply dexp_{ad xi} = sum_n ad_xi^n / (n+1)! to v.

    Args:
        xi: Algebra element defining ad_xi = hat(xi)
        v: Vector the operator acts on
        max_terms: Series cap

    Returns:
        dexp_{ad xi}(v)
    """
    return _apply_series(xi, v, 1, max_terms)


def ddexp_ad(xi: Vec3, v: Vec3, max_terms: int = SERIES_MAX_TERMS) -> Vec3:
    """Apply ddexp_{ad xi} = sum_n ad_xi^n / (n+2)! to v."""
    return _apply_series(xi, v, 2, max_terms)


def dexp_so3_matrix(xi: Vec3) -> Mat3:
    """
    Closed form of dexp_{ad xi} on so(3) as a matrix.

    I + ((1 - cos t)/t^2) W + ((t - sin t)/t^3) W^2 with W = hat(xi), t = |xi|.
    """
    W = hat(xi)
    t = float(np.linalg.norm(xi))
    if t < SMALL_ANGLE:
        t2 = t * t
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0
        c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    else:
        b = 2.0 * (np.sin(0.5 * t) / t) ** 2
        c = (t - np.sin(t)) / t ** 3
    return _I3 + b * W + c * (W @ W)


def orthogonality_error(R: Mat3) -> float:
    """Frobenius norm of I - R^T R."""
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(_I3 - R.T @ R))


def check_rotation(R: Mat3, tol: float = ROTATION_TOL) -> Rotation:
    """
    Validate a rotation matrix.

    Args:
        R: Candidate matrix
        tol: Orthogonality tolerance

    Returns:
        R as a float array

    Raises:
        NotRotation: If R is not orthogonal to tol or has non-positive determinant
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise NotRotation("rotation must be a finite 3x3 matrix")
    err = orthogonality_error(R)
    if err > tol:
        raise NotRotation(f"orthogonality error {err:.3e} exceeds {tol:.1e}")
    if np.linalg.det(R) <= 0.0:
        raise NotRotation("rotation has non-positive determinant")
    return R
