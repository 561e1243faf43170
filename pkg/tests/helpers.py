import math

import numpy as np

from se3dock.dynamics import BodyModel, BodyState, GravityModel, body_dynamics, gravity_wrench, integrate_step, relative_dynamics, relative_velocity
from se3dock.liegroup import Pose, adjoint, exp_se3, exp_so3, log_se3


def random_twist(rng, max_angle=math.pi - 0.01, scale=5.0):
    w = rng.normal(size=3)
    w *= rng.uniform(0.0, max_angle) / np.linalg.norm(w)
    return np.concatenate([w, rng.uniform(-scale, scale, 3)])


# acceptance results, printed by the terminal-summary hook in conftest
ACCEPTANCE: dict = {}


def pair_rates(target, chaser, gravity, force):
    def rates(t, P, X):
        T, C = BodyState(P[0], X[0]), BodyState(P[1], X[1])
        wt = gravity_wrench(gravity, target, T)
        wc = gravity_wrench(gravity, chaser, C) + force(t)
        return [body_dynamics(target, X[0], wt), body_dynamics(chaser, X[1], wc)]

    return rates


def relative_rates(target, chaser, gravity, force):
    # poses [C_t, h = C_t^-1 C_c], twists [xi_t, sigma]
    def rates(t, P, X):
        T = BodyState(P[0], X[0])
        Cc = P[0] @ P[1]
        xc = X[1] + adjoint(P[1].inverse()) @ X[0]
        C = BodyState(Cc, xc)
        at = body_dynamics(target, X[0], gravity_wrench(gravity, target, T))
        applied = gravity_wrench(gravity, chaser, C) + force(t)
        return [at, relative_dynamics(chaser, T, C, applied, at)]

    return rates


def two_path_oracle(duration, dt=0.01):
    """Max deviation between integrating both bodies and integrating the relative state directly."""
    g = GravityModel()
    target = BodyModel(110.0, np.diag([150.0, 90.0, 80.0]))
    chaser = BodyModel(100.0, np.diag([50.0, 100.0, 60.0]))
    force = lambda t: np.array([0.5 * math.sin(t), 0.2, -0.3 * math.cos(0.5 * t), 1.0, -2.0 * math.sin(0.7 * t), 0.5])
    Ct = Pose(exp_so3(np.array([0.1, 0.2, -0.1])), np.array([7.0e6, 0.0, 0.0]))
    xt = np.array([0.01, -0.02, 0.005, 0.0, 7.546e3, 0.0])
    h0 = exp_se3(np.array([0.2, -0.1, 0.3, 10.0, -4.0, 2.0]))
    s0 = np.array([0.02, 0.01, -0.03, 0.5, -0.2, 0.1])
    xc = s0 + adjoint(h0.inverse()) @ xt

    pa, xa = [Ct, Ct @ h0], [xt, xc]
    pb, xb = [Ct, h0], [xt, s0]
    ra = pair_rates(target, chaser, g, force)
    rb = relative_rates(target, chaser, g, force)
    worst = 0.0
    for k in range(int(round(duration / dt))):
        pa, xa = integrate_step(k * dt, pa, xa, ra, dt)
        pb, xb = integrate_step(k * dt, pb, xb, rb, dt)
        A, B = BodyState(pa[0], xa[0]), BodyState(pa[1], xa[1])
        path_a = np.concatenate([log_se3(A.pose.inverse() @ B.pose), relative_velocity(A, B)])
        path_b = np.concatenate([log_se3(pb[1]), xb[1]])
        worst = max(worst, float(np.max(np.abs(path_a - path_b))))
    return worst
