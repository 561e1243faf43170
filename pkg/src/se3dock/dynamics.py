"""Rigid-body dynamics of target and chaser in body coordinates.

Wrenches are ``(6,)`` arrays ``[torque; force]`` expressed in the body frame,
twists are ``[angular; linear]`` body velocities. The equations of motion are
the Euler-Poincare form ``I xi' = ad*(xi) I xi + wrench``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .liegroup import (
    Pose,
    ad,
    adjoint,
    co_ad,
    cross3,
    error_kinematics_matrix,
    exp_se3,
    log_se3,
    orthonormalize,
)

MU_EARTH = 3.986004418e14
J2_EARTH = 1.08263e-3
R_EARTH = 6378137.0

ORTHO_TOL = 1e-9


class BelowSurface(ValueError):
    pass


class NonPhysicalInertia(UserWarning):
    """Principal moments violate the triangle inequality."""


class StepRejected(FloatingPointError):
    pass


@dataclass(frozen=True)
class BodyModel:
    mass: float
    inertia: np.ndarray
    unified_inertia: np.ndarray = field(init=False, repr=False)
    unified_inertia_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        J = np.asarray(self.inertia, dtype=float)
        if J.shape != (3, 3):
            raise ValueError("inertia must be 3x3")
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if np.max(np.abs(J - J.T)) > 1e-12:
            raise ValueError("inertia must be symmetric")
        ev = np.sort(np.linalg.eigvalsh(J))
        if ev[0] <= 0:
            raise ValueError("inertia must be positive definite")
        if ev[0] + ev[1] < ev[2] * (1 - 1e-12):
            warnings.warn(
                f"principal moments {ev.tolist()} violate the triangle inequality",
                NonPhysicalInertia,
                stacklevel=3,
            )
        I6 = np.zeros((6, 6))
        I6[:3, :3] = J
        I6[3:, 3:] = self.mass * np.eye(3)
        object.__setattr__(self, "inertia", J)
        object.__setattr__(self, "unified_inertia", I6)
        object.__setattr__(self, "unified_inertia_inv", np.linalg.inv(I6))


@dataclass(frozen=True)
class GravityModel:
    mu: float = MU_EARTH
    j2: float = J2_EARTH
    earth_radius: float = R_EARTH
    j2_enabled: bool = True

    def __post_init__(self):
        if self.mu <= 0 or self.earth_radius <= 0:
            raise ValueError("mu and earth_radius must be positive")


@dataclass(frozen=True)
class BodyState:
    pose: Pose
    twist: np.ndarray


def j2_acceleration(model: GravityModel, p: np.ndarray) -> np.ndarray:
    """Inertial J2 acceleration at inertial position ``p``."""
    x, y, z = p
    r2 = float(p @ p)
    r = np.sqrt(r2)
    k = -1.5 * model.j2 * model.mu * model.earth_radius**2 / r**5
    zz = 5.0 * z * z / r2
    return k * np.array([x * (1.0 - zz), y * (1.0 - zz), z * (3.0 - zz)])


def point_mass_acceleration(model: GravityModel, p: np.ndarray) -> np.ndarray:
    r = np.sqrt(float(p @ p))
    return -model.mu / r**3 * p


def gravity_wrench(model: GravityModel, body: BodyModel, state: BodyState) -> np.ndarray:
    R = state.pose.rotation
    p = state.pose.position
    r = np.sqrt(float(p @ p))
    if r <= model.earth_radius:
        raise BelowSurface(f"|p| = {r:.3f} m is not above the surface")
    pb = R.T @ p
    force = -(model.mu * body.mass / r**3) * pb
    if model.j2_enabled:
        force = force + body.mass * (R.T @ j2_acceleration(model, p))
    torque = (3.0 * model.mu / r**5) * cross3(pb, body.inertia @ pb)
    return np.concatenate([torque, force])


def body_dynamics(body: BodyModel, twist: np.ndarray, applied: np.ndarray) -> np.ndarray:
    """Body-frame acceleration ``xi'`` under the total applied wrench."""
    mom = body.unified_inertia @ twist
    return body.unified_inertia_inv @ (co_ad(twist, mom) + applied)


# --- relative motion -----------------------------------------------------------


def relative_pose(target: BodyState, chaser: BodyState) -> Pose:
    """Chaser configuration seen from the target body frame, ``C_t^-1 C_c``."""
    return target.pose.inverse() @ chaser.pose


def relative_error(target: BodyState, chaser: BodyState, desired: Pose) -> np.ndarray:
    H = target.pose @ desired
    return log_se3(H.inverse() @ chaser.pose)


def transport(target: BodyState, chaser: BodyState) -> np.ndarray:
    """Adjoint map carrying target-body twists into the chaser body frame."""
    return adjoint(chaser.pose.inverse() @ target.pose)


def relative_velocity(target: BodyState, chaser: BodyState, desired: Pose | None = None) -> np.ndarray:
    # desired is a constant offset and drops out of the velocity
    return chaser.twist - transport(target, chaser) @ target.twist


def relative_acceleration(
    chaser_accel: np.ndarray,
    sigma: np.ndarray,
    transported_target_twist: np.ndarray,
    transported_target_accel: np.ndarray,
) -> np.ndarray:
    return chaser_accel + ad(sigma) @ transported_target_twist - transported_target_accel


def relative_dynamics(
    body: BodyModel,
    target: BodyState,
    chaser: BodyState,
    applied: np.ndarray,
    target_accel: np.ndarray,
) -> np.ndarray:
    """``sigma'`` for the chaser under the total applied wrench (gravity + disturbance + control)."""
    A = transport(target, chaser)
    sigma = chaser.twist - A @ target.twist
    xi_c_dot = body_dynamics(body, chaser.twist, applied)
    return relative_acceleration(xi_c_dot, sigma, A @ target.twist, A @ target_accel)


def error_rate(rho: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    return error_kinematics_matrix(rho) @ sigma


# --- integration -----------------------------------------------------------------

RateFn = Callable[[float, Sequence[Pose], Sequence[np.ndarray]], Sequence[np.ndarray]]


def _advance(poses, thetas):
    out = []
    for C, th in zip(poses, thetas):
        P = C @ exp_se3(th)
        if P.orthonormality_error() > ORTHO_TOL:
            P = Pose(orthonormalize(P.rotation), P.position)
        out.append(P)
    return out


def integrate_step(
    t: float,
    poses: Sequence[Pose],
    twists: Sequence[np.ndarray],
    rates: RateFn,
    dt: float,
) -> tuple[list[Pose], list[np.ndarray]]:
    """One RK4 Munthe-Kaas step for bodies with ``C' = C hat(xi)``, ``xi' = rates(...)``.

    The configuration is advanced as ``C exp(theta)``; stage increments are
    pulled back through the inverse right Jacobian so the scheme keeps fourth
    order on the group.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    h2 = 0.5 * dt
    a1 = rates(t, poses, twists)
    k1 = list(twists)

    th = [h2 * k for k in k1]
    x2 = [x + h2 * a for x, a in zip(twists, a1)]
    k2 = [error_kinematics_matrix(q) @ x for q, x in zip(th, x2)]
    a2 = rates(t + h2, _advance(poses, th), x2)

    th = [h2 * k for k in k2]
    x3 = [x + h2 * a for x, a in zip(twists, a2)]
    k3 = [error_kinematics_matrix(q) @ x for q, x in zip(th, x3)]
    a3 = rates(t + h2, _advance(poses, th), x3)

    th = [dt * k for k in k3]
    x4 = [x + dt * a for x, a in zip(twists, a3)]
    k4 = [error_kinematics_matrix(q) @ x for q, x in zip(th, x4)]
    a4 = rates(t + dt, _advance(poses, th), x4)

    s6 = dt / 6.0
    theta = [s6 * (p + 2.0 * q + 2.0 * r + s) for p, q, r, s in zip(k1, k2, k3, k4)]
    new_twists = [x + s6 * (p + 2.0 * q + 2.0 * r + s) for x, p, q, r, s in zip(twists, a1, a2, a3, a4)]
    new_poses = _advance(poses, theta)

    for P, x in zip(new_poses, new_twists):
        if not (np.all(np.isfinite(P.rotation)) and np.all(np.isfinite(P.position)) and np.all(np.isfinite(x))):
            raise StepRejected(f"non-finite state after step at t = {t:.6f} s")
    return new_poses, new_twists


def free_body_rates(model: GravityModel | None, body: BodyModel, disturbance: Callable | None = None) -> RateFn:
    """Rate function for a single uncontrolled body (gravity optional)."""

    def rates(t, poses, twists):
        state = BodyState(poses[0], twists[0])
        w = gravity_wrench(model, body, state) if model is not None else np.zeros(6)
        if disturbance is not None:
            w = w + disturbance(t)
        return [body_dynamics(body, twists[0], w)]

    return rates


def step_body(t: float, state: BodyState, rates: RateFn, dt: float) -> BodyState:
    poses, twists = integrate_step(t, [state.pose], [state.twist], rates, dt)
    return BodyState(poses[0], twists[0])
