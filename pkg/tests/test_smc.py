import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from se3dock.dynamics import BodyModel, body_dynamics
from se3dock.liegroup import co_ad
from se3dock.smc import (
    NonFiniteOutput,
    ReachingGains,
    SingularityGuard,
    SlidingGains,
    control_wrench,
    fixed_time_bound,
    rate_constants,
    reaching_control,
    settling_time_bound,
    sig_pow,
    sliding_surface,
    surface_gain_diagonal,
)

G = SlidingGains()
BODY = BodyModel(100.0, np.diag([50.0, 100.0, 60.0]))
vec6 = arrays(float, 6, elements=st.floats(-50, 50, allow_nan=False))


def test_sig_pow_examples(rng):
    assert np.array_equal(sig_pow(np.zeros(6), 0.7), np.zeros(6))
    x = np.array([-4.0, 9.0, 0.0, 1.0, -1.0, 0.25])
    assert np.array_equal(sig_pow(x, 0.5), np.array([-2.0, 3.0, 0.0, 1.0, -1.0, 0.5]))
    y = rng.normal(size=6)
    assert np.array_equal(sig_pow(y, 1.0), y)
    with pytest.raises(ValueError):
        sig_pow(y, 0.0)


def test_sliding_surface_examples(rng):
    assert np.array_equal(sliding_surface(np.zeros(6), np.zeros(6), G), np.zeros(6))
    rho = rng.normal(size=6)
    sigma = -G.k1 * sig_pow(rho, G.l1) - G.k2 * sig_pow(rho, G.l2)
    assert np.max(np.abs(sliding_surface(rho, sigma, G))) <= 1e-15
    g = SlidingGains(1.0, 1.0, 0.5, 2.0)
    assert np.array_equal(sliding_surface(np.ones(6), np.zeros(6), g), np.full(6, 2.0))


def test_gain_validation():
    for bad in ((0.0, 1.0, 0.5, 1.5), (1.0, 1.0, 1.2, 1.5), (1.0, 1.0, 0.5, 1.0)):
        with pytest.raises(ValueError):
            SlidingGains(*bad)
    with pytest.raises(ValueError):
        ReachingGains(ks1=0.0)
    with pytest.raises(ValueError):
        SingularityGuard(0.0)


def test_reaching_control_zero_and_gain_linearity(rng):
    rg = ReachingGains()
    assert np.array_equal(reaching_control(np.zeros(6), rg, G), np.zeros(6))
    s = rng.normal(size=6)
    raised = ReachingGains(delta1=1.0, delta2=1.0)
    diff = reaching_control(s, raised, G) - reaching_control(s, rg, G)
    assert np.allclose(diff, -sig_pow(s, G.l1) - sig_pow(s, G.l2), atol=1e-14)


@given(vec6)
def test_reaching_dissipativity(s):
    phi = reaching_control(s, ReachingGains(), G)
    assert np.all(s * phi <= 0.0)
    assert s @ phi <= 0.0


def test_gain_clamp():
    rg = ReachingGains(2.0, 3.0)
    rg.apply(-100.0, -100.0)
    assert rg.effective1 == pytest.approx(0.2) and rg.effective2 == pytest.approx(0.3)
    rg.apply(0.5, 0.0)
    assert rg.effective1 == pytest.approx(0.7)
    snap = rg.snapshot()
    rg.apply(1.0, 1.0)
    assert snap.effective1 == pytest.approx(0.7)


def test_guard_clamps_q1():
    guard = SingularityGuard(1e-4)
    q = surface_gain_diagonal(np.zeros(6), G, guard)
    assert np.all(np.isfinite(q))
    assert q[0] == pytest.approx(G.k1 * G.l1 * 1e-4 ** (G.l1 - 1.0))


def _equilibrium_inputs(rng):
    xi_c = rng.normal(size=6) * 0.1
    accel = rng.normal(size=6) * 0.01
    grav = rng.normal(size=6)
    return xi_c, accel, grav


def test_equilibrium_wrench_is_feedforward_only(rng):
    xi_c, accel, grav = _equilibrium_inputs(rng)
    out = control_wrench(BODY, np.zeros(6), np.zeros(6), xi_c, xi_c, accel, grav, None, G, ReachingGains())
    assert np.array_equal(out.s, np.zeros(6))
    I = BODY.unified_inertia
    assert np.allclose(out.wrench, -grav - co_ad(xi_c, I @ xi_c) + I @ accel, atol=1e-14)
    # the chaser then accelerates exactly like the transported target
    assert np.allclose(body_dynamics(BODY, xi_c, grav + out.wrench), accel, atol=1e-14)


def test_known_disturbance_is_cancelled(rng):
    xi_c, accel, grav = _equilibrium_inputs(rng)
    rho, sigma = rng.normal(size=6) * 0.1, rng.normal(size=6) * 0.1
    d = rng.normal(size=6)
    a = control_wrench(BODY, rho, sigma, xi_c, xi_c - sigma, accel, grav, None, G, ReachingGains())
    b = control_wrench(BODY, rho, sigma, xi_c, xi_c - sigma, accel, grav, d, G, ReachingGains())
    assert np.allclose(b.wrench - a.wrench, -d, atol=1e-13)


def test_non_finite_wrench_rejected(rng):
    xi_c, accel, grav = _equilibrium_inputs(rng)
    with pytest.raises(NonFiniteOutput):
        control_wrench(BODY, np.zeros(6), np.zeros(6), xi_c, xi_c, accel, grav * np.inf, None, G, ReachingGains())


def test_fixed_time_bound_example():
    assert fixed_time_bound(1.0, 1.0, 0.5, 2.0) == 6.0
    with pytest.raises(ValueError):
        fixed_time_bound(1.0, 1.0, 1.0, 2.0)


def test_bound_is_monotone_in_gains():
    ks = [0.5, 1.0, 2.0, 4.0]
    b1 = [settling_time_bound(G, ReachingGains(k, 2.0)) for k in ks]
    b2 = [settling_time_bound(G, ReachingGains(2.0, k)) for k in ks]
    assert all(x > y for x, y in zip(b1, b1[1:]))
    assert all(x > y for x, y in zip(b2, b2[1:]))


def test_default_bound_value():
    # 2 / (2**0.75 * 2 * 0.5) + 2 / (2**0.75 * 6**0.25 * 2 * 0.5)
    assert settling_time_bound(G, ReachingGains()) == pytest.approx(1.9490428006543135, rel=1e-15)
    assert settling_time_bound(G, ReachingGains(), rigorous=True) > settling_time_bound(G, ReachingGains())


def test_lyapunov_rate_inequality(rng):
    # V = s.s/2 under s' = phi_s satisfies the fixed-time inequality with the rigorous constants
    rg = ReachingGains(np.array([2.0, 3.0, 2.0, 2.5, 2.0, 4.0]), np.array([2.0, 2.0, 3.0, 2.0, 5.0, 2.0]))
    kt1, kt2 = rate_constants(G, rg, rigorous=True)
    for _ in range(5000):
        s = rng.normal(size=6) * 10 ** rng.uniform(-4, 1)
        s[rng.integers(0, 6, rng.integers(0, 6))] = 0.0
        V = 0.5 * s @ s
        if V == 0.0:
            continue
        vdot = s @ reaching_control(s, rg, G)
        assert vdot <= (1 - 1e-12) * (-kt1 * V ** ((G.l1 + 1) / 2) - kt2 * V ** ((G.l2 + 1) / 2))
