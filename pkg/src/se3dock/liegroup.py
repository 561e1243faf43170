"""SO(3) / SE(3) primitives.

Twists are plain ``(6,)`` arrays ordered ``[angular; linear]``. Poses are
:class:`Pose` values holding a rotation matrix and a position vector; the
homogeneous form is ``[[R, p], [0, 1]]``.

Numerical policy: the closed forms of sin/θ style coefficients are replaced by
truncated Taylor series below a small-angle threshold. ``sin t / t`` and the
logarithm switch at ``SMALL_ANGLE``; every coefficient whose closed form suffers
cancellation (``1 - cos t``, ``t - sin t``, ...) switches at ``SERIES_ANGLE``,
where the series through ``t**6`` is exact to double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SMALL_ANGLE = 1e-6
SERIES_ANGLE = 2e-2
PI_MARGIN = 1e-6
SKEW_TOL = 1e-9

_I3 = np.eye(3)


class AngleNearPi(ValueError):
    """Rotation angle too close to pi for the principal logarithm."""


@dataclass(frozen=True, slots=True)
class Pose:
    """Rigid transform ``x -> R x + p``."""

    rotation: np.ndarray
    position: np.ndarray

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_matrix(T: np.ndarray) -> "Pose":
        T = np.asarray(T, dtype=float)
        return Pose(T[:3, :3].copy(), T[:3, 3].copy())

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.position
        return T

    def __matmul__(self, other: "Pose") -> "Pose":
        R = self.rotation
        return Pose(R @ other.rotation, R @ other.position + self.position)

    def inverse(self) -> "Pose":
        Rt = self.rotation.T
        return Pose(Rt, -(Rt @ self.position))

    def act(self, x: np.ndarray) -> np.ndarray:
        return self.rotation @ x + self.position

    def orthonormality_error(self) -> float:
        R = self.rotation
        return float(np.max(np.abs(R.T @ R - _I3)))


def cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # np.cross carries ~20 us of axis handling per call; this is the hot path
    a0, a1, a2 = a
    b0, b1, b2 = b
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def hat3(w: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )


def vee3(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if np.linalg.norm(M + M.T) > SKEW_TOL:
        raise ValueError("vee3: matrix is not skew-symmetric")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def hat6(x: np.ndarray) -> np.ndarray:
    X = np.zeros((4, 4))
    X[:3, :3] = hat3(x[:3])
    X[:3, 3] = x[3:]
    return X


def vee6(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if np.any(X[3, :] != 0.0):
        raise ValueError("vee6: bottom row of an se(3) matrix must be zero")
    return np.concatenate([vee3(X[:3, :3]), X[:3, 3]])


# --- scalar coefficients -----------------------------------------------------


def _sinc(t: float) -> float:
    # sin t / t
    if t < SMALL_ANGLE:
        t2 = t * t
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0
    return math.sin(t) / t


def _cosc(t: float) -> float:
    # (1 - cos t) / t^2
    if t < SERIES_ANGLE:
        t2 = t * t
        return 0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0
    return (1.0 - math.cos(t)) / (t * t)


def _sinc3(t: float) -> float:
    # (t - sin t) / t^3
    if t < SERIES_ANGLE:
        t2 = t * t
        return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362880.0
    return (t - math.sin(t)) / (t * t * t)


def _jinv_coeff(t: float) -> float:
    # (1 - (t sin t) / (2 (1 - cos t))) / t^2
    if t < SERIES_ANGLE:
        t2 = t * t
        return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 + t2 * t2 * t2 / 1209600.0
    return (1.0 - t * math.sin(t) / (2.0 * (1.0 - math.cos(t)))) / (t * t)


def _q_coeffs(t: float) -> tuple[float, float, float]:
    if t < SERIES_ANGLE:
        t2 = t * t
        t4 = t2 * t2
        t6 = t4 * t2
        return (
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0 - t6 / 362880.0,
            1.0 / 24.0 - t2 / 720.0 + t4 / 40320.0 - t6 / 3628800.0,
            1.0 / 120.0 - t2 / 2520.0 + t4 / 120960.0 - t6 / 9979200.0,
        )
    s, c = math.sin(t), math.cos(t)
    return (
        (t - s) / t**3,
        (t * t + 2.0 * c - 2.0) / (2.0 * t**4),
        (2.0 * t - 3.0 * s + t * c) / (2.0 * t**5),
    )


# --- SO(3) ---------------------------------------------------------------------


def exp_so3(w: np.ndarray) -> np.ndarray:
    t = math.sqrt(float(w @ w))
    W = hat3(w)
    return _I3 + _sinc(t) * W + _cosc(t) * (W @ W)


def _angle(R: np.ndarray) -> tuple[float, np.ndarray]:
    a = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = 0.5 * math.sqrt(float(a @ a))
    c = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    return math.atan2(s, c), a


def log_so3(R: np.ndarray) -> np.ndarray:
    t, a = _angle(R)
    if t > math.pi - PI_MARGIN:
        raise AngleNearPi(f"rotation angle {t:.9f} rad is within {PI_MARGIN:g} of pi")
    if t < SMALL_ANGLE:
        return 0.5 * (1.0 + t * t / 6.0) * a
    return (t / (2.0 * math.sin(t))) * a


def left_jacobian_so3(w: np.ndarray) -> np.ndarray:
    t = math.sqrt(float(w @ w))
    W = hat3(w)
    return _I3 + _cosc(t) * W + _sinc3(t) * (W @ W)


def left_jacobian_inv_so3(w: np.ndarray) -> np.ndarray:
    t = math.sqrt(float(w @ w))
    W = hat3(w)
    return _I3 - 0.5 * W + _jinv_coeff(t) * (W @ W)


# --- SE(3) ---------------------------------------------------------------------


def exp_se3(x: np.ndarray) -> Pose:
    w, v = x[:3], x[3:]
    return Pose(exp_so3(w), left_jacobian_so3(w) @ v)


def log_se3(P: Pose) -> np.ndarray:
    w = log_so3(P.rotation)
    return np.concatenate([w, left_jacobian_inv_so3(w) @ P.position])


def adjoint(P: Pose) -> np.ndarray:
    R = P.rotation
    A = np.zeros((6, 6))
    A[:3, :3] = R
    A[3:, 3:] = R
    A[3:, :3] = hat3(P.position) @ R
    return A


def ad(x: np.ndarray) -> np.ndarray:
    W = hat3(x[:3])
    A = np.zeros((6, 6))
    A[:3, :3] = W
    A[3:, 3:] = W
    A[3:, :3] = hat3(x[3:])
    return A


def co_ad(x: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Coadjoint action ``ad(x)^T mu``.

    With ``mu = I xi`` this yields the gyroscopic terms
    ``[(J w) x w; (m v) x w]`` of rigid-body dynamics in body coordinates.
    """
    w, v = x[:3], x[3:]
    mw, mv = mu[:3], mu[3:]
    return np.concatenate([cross3(mw, w) + cross3(mv, v), cross3(mv, w)])


def _q_block(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    t = math.sqrt(float(w @ w))
    c1, c2, c3 = _q_coeffs(t)
    W = hat3(w)
    V = hat3(v)
    WV = W @ V
    VW = V @ W
    WVW = WV @ W
    WW = W @ W
    return (
        0.5 * V
        + c1 * (WV + VW + WVW)
        + c2 * (WW @ V + VW @ W - 3.0 * WVW)
        + c3 * (WVW @ W + WW @ V @ W)
    )


def left_jacobian_se3(x: np.ndarray) -> np.ndarray:
    w, v = x[:3], x[3:]
    J = left_jacobian_so3(w)
    out = np.zeros((6, 6))
    out[:3, :3] = J
    out[3:, 3:] = J
    out[3:, :3] = _q_block(w, v)
    return out


def left_jacobian_inv_se3(x: np.ndarray) -> np.ndarray:
    w, v = x[:3], x[3:]
    Ji = left_jacobian_inv_so3(w)
    out = np.zeros((6, 6))
    out[:3, :3] = Ji
    out[3:, 3:] = Ji
    out[3:, :3] = -Ji @ _q_block(w, v) @ Ji
    return out


def error_kinematics_matrix(rho: np.ndarray) -> np.ndarray:
    """Matrix ``G`` with ``d/dt log(h) = G(log h) sigma`` whenever ``h' = h hat6(sigma)``.

    This is the inverse right Jacobian of the SE(3) exponential,
    ``J_r(rho)^-1 = J_l(-rho)^-1``.
    """
    t = math.sqrt(float(rho[:3] @ rho[:3]))
    if t > math.pi - PI_MARGIN:
        raise AngleNearPi(f"error angle {t:.9f} rad is within {PI_MARGIN:g} of pi")
    return left_jacobian_inv_se3(-np.asarray(rho, dtype=float))


def orthonormalize(R: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(R)
    Q = u @ vt
    if np.linalg.det(Q) < 0:
        u[:, -1] = -u[:, -1]
        Q = u @ vt
    return Q
