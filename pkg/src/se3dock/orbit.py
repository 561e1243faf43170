"""Classical orbital elements <-> inertial position/velocity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import MU_EARTH


class InvalidElements(ValueError):
    pass


@dataclass(frozen=True)
class OrbitalElements:
    semi_major_axis: float  # m
    eccentricity: float
    inclination: float  # rad
    raan: float  # rad
    arg_perigee: float  # rad
    true_anomaly: float  # rad

    def period(self, mu: float = MU_EARTH) -> float:
        return 2.0 * math.pi * math.sqrt(self.semi_major_axis**3 / mu)

    def perigee_radius(self) -> float:
        return self.semi_major_axis * (1.0 - self.eccentricity)


def _rot3(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot1(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def perifocal_to_inertial(el: OrbitalElements) -> np.ndarray:
    return _rot3(el.raan) @ _rot1(el.inclination) @ _rot3(el.arg_perigee)


def elements_to_state(el: OrbitalElements, mu: float = MU_EARTH, min_radius: float = 0.0):
    if not (0.0 <= el.eccentricity < 1.0):
        raise InvalidElements(f"eccentricity {el.eccentricity} outside [0, 1)")
    if el.semi_major_axis <= 0:
        raise InvalidElements("semi-major axis must be positive")
    if el.perigee_radius() <= min_radius:
        raise InvalidElements(
            f"perigee radius {el.perigee_radius():.0f} m is below {min_radius:.0f} m"
        )
    e = el.eccentricity
    p = el.semi_major_axis * (1.0 - e * e)
    nu = el.true_anomaly
    r = p / (1.0 + e * math.cos(nu))
    r_pf = np.array([r * math.cos(nu), r * math.sin(nu), 0.0])
    v_pf = math.sqrt(mu / p) * np.array([-math.sin(nu), e + math.cos(nu), 0.0])
    Q = perifocal_to_inertial(el)
    return Q @ r_pf, Q @ v_pf


def state_to_elements(r: np.ndarray, v: np.ndarray, mu: float = MU_EARTH) -> OrbitalElements:
    """Inverse of :func:`elements_to_state` for non-circular, inclined orbits.

    Circular orbits report ``arg_perigee = 0`` and the argument of latitude as
    true anomaly; equatorial orbits report ``raan = 0``.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    rn = np.linalg.norm(r)
    h = np.cross(r, v)
    hn = np.linalg.norm(h)
    n = np.cross([0.0, 0.0, 1.0], h)
    nn = np.linalg.norm(n)
    ev = ((v @ v - mu / rn) * r - (r @ v) * v) / mu
    e = np.linalg.norm(ev)
    a = 1.0 / (2.0 / rn - (v @ v) / mu)
    inc = math.acos(max(-1.0, min(1.0, h[2] / hn)))

    eps = 1e-11
    if nn > eps:
        raan = math.atan2(n[1], n[0]) % (2 * math.pi)
        node = n / nn
    else:
        raan = 0.0
        node = np.array([1.0, 0.0, 0.0])
    if e > eps:
        argp = math.atan2(np.cross(node, ev) @ h / hn, node @ ev) % (2 * math.pi)
        nu = math.atan2(np.cross(ev, r) @ h / hn, ev @ r) % (2 * math.pi)
    else:
        argp = 0.0
        nu = math.atan2(np.cross(node, r) @ h / hn, node @ r) % (2 * math.pi)
    return OrbitalElements(a, e, inc, raan, argp, nu)
