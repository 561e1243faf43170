"""Fixed-time sliding-mode control on SE(3).

The surface is ``s = sigma + k1 sig^l1(rho) + k2 sig^l2(rho)`` and the reaching
law is ``s' = -ks1 sig^l1(s) - ks2 sig^l2(s)``. :func:`control_wrench` cancels
the known relative dynamics and imposes the reaching law as an acceleration,
so the closed loop obeys it exactly outside the singularity-guard band.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .liegroup import ad, co_ad, error_kinematics_matrix


class NonFiniteOutput(FloatingPointError):
    pass


@dataclass(frozen=True)
class SlidingGains:
    k1: float = 0.5
    k2: float = 0.5
    l1: float = 0.5
    l2: float = 1.5

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError("k1 and k2 must be positive")
        if not (0 < self.l1 <= 1):
            raise ValueError("l1 must lie in (0, 1]")
        if not self.l2 > 1:
            raise ValueError("l2 must exceed 1")


@dataclass
class ReachingGains:
    """Reaching-law gains split into a static base and an adaptive delta.

    Gains may be scalars (applied on all six axes) or length-6 vectors.
    The effective gain is clamped to ``ks_min_fraction * base`` from below.
    """

    ks1: float | np.ndarray = 2.0
    ks2: float | np.ndarray = 2.0
    delta1: float | np.ndarray = 0.0
    delta2: float | np.ndarray = 0.0
    ks_min_fraction: float = 0.1

    def __post_init__(self):
        if np.any(np.asarray(self.ks1) <= 0) or np.any(np.asarray(self.ks2) <= 0):
            raise ValueError("base reaching gains must be positive")
        if not (0 < self.ks_min_fraction <= 1):
            raise ValueError("ks_min_fraction must lie in (0, 1]")

    @property
    def ks1_min(self):
        return self.ks_min_fraction * self.ks1

    @property
    def ks2_min(self):
        return self.ks_min_fraction * self.ks2

    @property
    def effective1(self):
        return np.maximum(self.ks1 + self.delta1, self.ks1_min)

    @property
    def effective2(self):
        return np.maximum(self.ks2 + self.delta2, self.ks2_min)

    def apply(self, d1, d2) -> None:
        """Add increments to the deltas, clamping so effective gains stay >= the minimum."""
        self.delta1 = np.maximum(self.delta1 + d1, self.ks1_min - self.ks1)
        self.delta2 = np.maximum(self.delta2 + d2, self.ks2_min - self.ks2)

    def snapshot(self) -> "ReachingGains":
        return ReachingGains(self.ks1, self.ks2, self.delta1, self.delta2, self.ks_min_fraction)


@dataclass(frozen=True)
class SingularityGuard:
    epsilon_rho: float = 1e-4

    def __post_init__(self):
        if self.epsilon_rho <= 0:
            raise ValueError("epsilon_rho must be positive")


def sig_pow(x: np.ndarray, l: float) -> np.ndarray:
    if l <= 0:
        raise ValueError("exponent must be positive")
    return np.sign(x) * np.abs(x) ** l


def sliding_surface(rho: np.ndarray, sigma: np.ndarray, g: SlidingGains) -> np.ndarray:
    return sigma + g.k1 * sig_pow(rho, g.l1) + g.k2 * sig_pow(rho, g.l2)


def reaching_control(s: np.ndarray, rg: ReachingGains, g: SlidingGains) -> np.ndarray:
    return -rg.effective1 * sig_pow(s, g.l1) - rg.effective2 * sig_pow(s, g.l2)


def surface_gain_diagonal(rho: np.ndarray, g: SlidingGains, guard: SingularityGuard) -> np.ndarray:
    """Diagonal of ``Q1 + Q2``, the derivative of the surface terms w.r.t. rho."""
    a = np.maximum(np.abs(rho), guard.epsilon_rho)
    q1 = g.k1 * g.l1 * a ** (g.l1 - 1.0)
    q2 = g.k2 * g.l2 * np.abs(rho) ** (g.l2 - 1.0)
    return q1 + q2


def guard_active(rho: np.ndarray, guard: SingularityGuard) -> bool:
    return bool(np.any(np.abs(rho) < guard.epsilon_rho))


@dataclass
class ControlOutput:
    wrench: np.ndarray
    s: np.ndarray
    phi_s: np.ndarray
    feedforward: np.ndarray = field(repr=False)


def control_wrench(
    body,
    rho: np.ndarray,
    sigma: np.ndarray,
    xi_c: np.ndarray,
    target_twist_c: np.ndarray,
    target_accel_c: np.ndarray,
    gravity: np.ndarray,
    disturbance: np.ndarray | None,
    gains: SlidingGains,
    reaching: ReachingGains,
    guard: SingularityGuard = SingularityGuard(),
) -> ControlOutput:
    """Unified control wrench for the chaser, body frame ``[torque; force]``.

    ``target_twist_c`` / ``target_accel_c`` are the target twist and its rate
    already transported into the chaser frame. ``disturbance`` is the
    disturbance the controller is assumed to know (``None`` for none).
    """
    I = body.unified_inertia
    G = error_kinematics_matrix(rho)
    s = sliding_surface(rho, sigma, gains)
    phi_s = reaching_control(s, reaching, gains)
    q = surface_gain_diagonal(rho, gains, guard)
    kinematic = ad(sigma) @ target_twist_c - target_accel_c + q * (G @ sigma)
    ff = -gravity - co_ad(xi_c, I @ xi_c) - I @ kinematic
    if disturbance is not None:
        ff = ff - disturbance
    wrench = ff + I @ phi_s
    if not np.all(np.isfinite(wrench)):
        raise NonFiniteOutput("control wrench is not finite")
    return ControlOutput(wrench, s, phi_s, ff)


def fixed_time_bound(kt1: float, kt2: float, l1: float, l2: float) -> float:
    if l1 >= 1.0:
        raise ValueError("settling-time bound is undefined for l1 = 1")
    return 2.0 / (kt1 * (1.0 - l1)) + 2.0 / (kt2 * (l2 - 1.0))


def rate_constants(gains: SlidingGains, reaching: ReachingGains, dims: int = 6, rigorous: bool = False) -> tuple[float, float]:
    """``(kt1, kt2)`` in ``V' <= -kt1 V**((l1+1)/2) - kt2 V**((l2+1)/2)`` for ``V = s.s / 2``.

    The default is the literal form ``kt2 = 2**((l1+1)/2) 6**((l2-1)/2) min(ks2)``.
    With ``rigorous=True`` the power-mean constant ``2**((l2+1)/2) 6**((1-l2)/2) min(ks2)``
    is used instead; it is smaller, so the literal bound is the optimistic one.
    """
    lam1 = float(np.min(reaching.ks1))
    lam2 = float(np.min(reaching.ks2))
    kt1 = 2.0 ** ((gains.l1 + 1.0) / 2.0) * lam1
    if rigorous:
        kt2 = 2.0 ** ((gains.l2 + 1.0) / 2.0) * dims ** ((1.0 - gains.l2) / 2.0) * lam2
    else:
        kt2 = 2.0 ** ((gains.l1 + 1.0) / 2.0) * dims ** ((gains.l2 - 1.0) / 2.0) * lam2
    return kt1, kt2


def settling_time_bound(gains: SlidingGains, reaching: ReachingGains, dims: int = 6, rigorous: bool = False) -> float:
    """Upper bound ``T_max`` on the reaching time of ``s`` (see :func:`rate_constants`)."""
    kt1, kt2 = rate_constants(gains, reaching, dims, rigorous)
    return fixed_time_bound(kt1, kt2, gains.l1, gains.l2)
