import math
import warnings

import numpy as np
import pytest

from se3dock.dynamics import (
    BodyModel,
    BodyState,
    GravityModel,
    NonPhysicalInertia,
    StepRejected,
    body_dynamics,
    error_rate,
    free_body_rates,
    gravity_wrench,
    relative_dynamics,
    relative_error,
    relative_velocity,
    step_body,
    transport,
)
from se3dock.liegroup import Pose, adjoint, exp_se3, exp_so3, log_se3

from helpers import random_twist, two_path_oracle

CHASER = BodyModel(100.0, np.diag([50.0, 100.0, 60.0]))
NO_J2 = GravityModel(j2_enabled=False)


def test_body_model_validation():
    with pytest.raises(ValueError):
        BodyModel(-1.0, np.eye(3))
    with pytest.raises(ValueError):
        BodyModel(1.0, np.array([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    with pytest.raises(ValueError):
        BodyModel(1.0, np.diag([1.0, 1.0, -1.0]))
    with pytest.warns(NonPhysicalInertia):
        BodyModel(110.0, np.diag([150.0, 50.0, 50.0]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        b = BodyModel(2.0, np.diag([1.0, 2.0, 3.0]))
    assert np.array_equal(b.unified_inertia, np.diag([1.0, 2.0, 3.0, 2.0, 2.0, 2.0]))


def test_spherical_body_has_no_gravity_gradient_torque(rng):
    body = BodyModel(10.0, 4.0 * np.eye(3))
    pose = Pose(exp_so3(rng.normal(size=3)), np.array([7.0e6, 1.0e5, -2.0e5]))
    w = gravity_wrench(NO_J2, body, BodyState(pose, np.zeros(6)))
    assert np.max(np.abs(w[:3])) <= 1e-12 * np.max(np.abs(w[3:]))


def test_point_mass_specific_force():
    body = BodyModel(1.0, np.eye(3))
    w = gravity_wrench(NO_J2, body, BodyState(Pose(np.eye(3), np.array([7.0e6, 0.0, 0.0])), np.zeros(6)))
    assert w[3] == pytest.approx(-8.1347, abs=1e-4)
    assert np.max(np.abs(w[4:])) == 0.0


def test_gravity_gradient_torque_is_orthogonal_to_position(rng):
    for _ in range(50):
        J = np.diag(rng.uniform(20.0, 80.0, 3))
        body = BodyModel(50.0, J)
        p = rng.normal(size=3)
        p *= rng.uniform(7e6, 4e7) / np.linalg.norm(p)
        R = exp_so3(rng.normal(size=3))
        w = gravity_wrench(GravityModel(), body, BodyState(Pose(R, p), np.zeros(6)))
        pb = R.T @ p
        assert abs(w[:3] @ pb) <= 1e-12 * np.linalg.norm(w[:3]) * np.linalg.norm(pb)


def test_equilibrium_rate():
    assert np.array_equal(body_dynamics(CHASER, np.zeros(6), np.zeros(6)), np.zeros(6))


def test_compact_form_matches_euler_equations(rng):
    J = CHASER.inertia
    m = CHASER.mass
    for _ in range(20):
        xi = rng.normal(size=6)
        f = rng.normal(size=6)
        om, v = xi[:3], xi[3:]
        om_dot = np.linalg.solve(J, np.cross(J @ om, om) + f[:3])
        v_dot = (np.cross(m * v, om) + f[3:]) / m
        assert np.allclose(body_dynamics(CHASER, xi, f), np.concatenate([om_dot, v_dot]), atol=1e-13)


def test_relative_error_examples(rng):
    Ct = Pose(exp_so3(rng.normal(size=3)), rng.normal(size=3) * 1e6)
    D = exp_se3(rng.normal(size=6))
    target = BodyState(Ct, rng.normal(size=6))
    assert np.max(np.abs(relative_error(target, BodyState(Ct @ D, np.zeros(6)), D))) <= 1e-9
    d = np.array([1.0, -2.0, 0.5])
    chaser = BodyState(Ct @ D @ Pose(np.eye(3), d), np.zeros(6))
    assert np.allclose(relative_error(target, chaser, D), np.concatenate([np.zeros(3), d]), atol=1e-8)


def test_relative_velocity_examples(rng):
    P = Pose(exp_so3(rng.normal(size=3)), rng.normal(size=3))
    xi = rng.normal(size=6)
    assert np.max(np.abs(relative_velocity(BodyState(P, xi), BodyState(P, xi)))) <= 1e-15
    xc = rng.normal(size=6)
    assert np.array_equal(relative_velocity(BodyState(P, np.zeros(6)), BodyState(exp_se3(xc), xc)), xc)


def test_coincident_identical_bodies_have_zero_relative_acceleration(rng):
    P = Pose(exp_so3(rng.normal(size=3)), np.array([7.2e6, 1e5, 3e5]))
    xi = rng.normal(size=6) * 0.1
    st = BodyState(P, xi)
    g = GravityModel()
    w = gravity_wrench(g, CHASER, st)
    at = body_dynamics(CHASER, xi, w)
    assert np.max(np.abs(relative_dynamics(CHASER, st, st, w, at))) <= 1e-14 * np.max(np.abs(at))


def test_pure_translation_advances_linearly():
    body = BodyModel(3.0, np.eye(3))
    st = BodyState(Pose.identity(), np.array([0.0, 0.0, 0.0, 1.5, -2.0, 0.25]))
    rates = free_body_rates(None, body)
    for k in range(100):
        st = step_body(0.1 * k, st, rates, 0.1)
    assert np.allclose(st.pose.position, [15.0, -20.0, 2.5], atol=1e-12, rtol=0)
    assert np.array_equal(st.pose.rotation, np.eye(3))


def test_torque_free_body_conserves_momentum_and_energy():
    body = BodyModel(5.0, np.diag([2.0, 3.0, 4.0]))
    st = BodyState(Pose.identity(), np.array([0.4, -0.3, 0.5, 0.0, 0.0, 0.0]))
    J = body.inertia

    def invariants(s):
        om = s.twist[:3]
        return np.linalg.norm(J @ om), 0.5 * om @ J @ om

    h0, e0 = invariants(st)
    rates = free_body_rates(None, body)
    for k in range(10_000):
        st = step_body(0.01 * k, st, rates, 0.01)
    h1, e1 = invariants(st)
    assert abs(h1 - h0) <= 1e-9 * h0
    assert abs(e1 - e0) <= 1e-9 * e0


def test_circular_orbit_radius_is_constant():
    r0 = 7.0e6
    v0 = math.sqrt(NO_J2.mu / r0)
    body = BodyModel(10.0, 2.0 * np.eye(3))
    st = BodyState(Pose(np.eye(3), np.array([r0, 0.0, 0.0])), np.array([0.0, 0.0, 0.0, 0.0, v0, 0.0]))
    rates = free_body_rates(NO_J2, body)
    period = 2.0 * math.pi * math.sqrt(r0**3 / NO_J2.mu)
    worst = 0.0
    for k in range(int(period)):
        st = step_body(float(k), st, rates, 1.0)
        worst = max(worst, abs(np.linalg.norm(st.pose.position) - r0) / r0)
    assert worst <= 1e-8


def test_fourth_order_convergence():
    body = BodyModel(5.0, np.diag([2.0, 3.0, 4.0]))
    x0 = np.array([0.3, -0.2, 0.25, 0.1, 0.0, -0.1])
    dist = lambda t: np.array([0.2 * math.sin(0.3 * t), 0.1 * math.cos(0.2 * t), 0.0, 0.05, 0.0, 0.0])
    rates = free_body_rates(None, body, dist)

    def solve(dt):
        st = BodyState(Pose.identity(), x0)
        for k in range(int(round(100.0 / dt))):
            st = step_body(k * dt, st, rates, dt)
        return np.concatenate([log_se3(st.pose), st.twist])

    ref = solve(0.0125)
    e1 = np.linalg.norm(solve(0.1) - ref)
    e2 = np.linalg.norm(solve(0.05) - ref)
    assert 12.0 <= e1 / e2 <= 20.0


def test_integrate_step_errors():
    body = BodyModel(1.0, np.eye(3))
    st = BodyState(Pose.identity(), np.zeros(6))
    with pytest.raises(ValueError):
        step_body(0.0, st, free_body_rates(None, body), 0.0)
    with pytest.raises(StepRejected), np.errstate(invalid="ignore"):
        step_body(0.0, st, lambda t, P, X: [np.full(6, np.inf)], 0.1)


def test_two_path_relative_dynamics_oracle():
    assert two_path_oracle(10.0) <= 1e-6


def test_error_rate_along_trajectory(rng):
    # rho' = G(rho) sigma with h = exp(rho0) exp(t sigma_body) under constant sigma
    for _ in range(20):
        rho0 = random_twist(rng, max_angle=1.5, scale=3.0)
        sigma = rng.normal(size=6)
        h = 1e-5
        f = lambda t: log_se3(exp_se3(rho0) @ exp_se3(t * sigma))
        fd = (f(h) - f(-h)) / (2 * h)
        assert np.max(np.abs(fd - error_rate(rho0, sigma))) <= 1e-4 * max(1.0, np.max(np.abs(fd)))


def test_transport_is_relative_adjoint(rng):
    A = BodyState(exp_se3(rng.normal(size=6)), rng.normal(size=6))
    B = BodyState(exp_se3(rng.normal(size=6)), rng.normal(size=6))
    assert np.allclose(transport(A, B), adjoint(B.pose.inverse() @ A.pose), atol=1e-14)
