import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from se3dock.dynamics import MU_EARTH, R_EARTH
from se3dock.orbit import InvalidElements, OrbitalElements, elements_to_state, state_to_elements

MOLNIYA = OrbitalElements(26_562_000.0, 0.72, math.radians(63.4), 0.0, math.radians(270.0), 0.0)


def test_molniya_period_is_about_twelve_hours():
    assert MOLNIYA.period() / 3600.0 == pytest.approx(11.97, abs=0.01)


def test_perigee_state():
    r, v = elements_to_state(MOLNIYA)
    assert np.linalg.norm(r) == pytest.approx(MOLNIYA.perigee_radius(), rel=1e-12)
    assert abs(r @ v) <= 1e-6 * np.linalg.norm(r) * np.linalg.norm(v)
    vis_viva = math.sqrt(MU_EARTH * (2.0 / np.linalg.norm(r) - 1.0 / MOLNIYA.semi_major_axis))
    assert np.linalg.norm(v) == pytest.approx(vis_viva, rel=1e-12)


def test_invalid_elements():
    with pytest.raises(InvalidElements):
        elements_to_state(OrbitalElements(7e6, 1.0, 0.0, 0.0, 0.0, 0.0))
    with pytest.raises(InvalidElements):
        elements_to_state(OrbitalElements(7e6, 0.5, 0.0, 0.0, 0.0, 0.0), min_radius=R_EARTH)


@given(
    a=st.floats(7.0e6, 4.0e7),
    e=st.floats(0.01, 0.8),
    i=st.floats(0.05, 3.0),
    raan=st.floats(0.0, 6.2),
    argp=st.floats(0.0, 6.2),
    nu=st.floats(0.0, 6.2),
)
def test_element_round_trip(a, e, i, raan, argp, nu):
    r, v = elements_to_state(OrbitalElements(a, e, i, raan, argp, nu))
    r2, v2 = elements_to_state(state_to_elements(r, v))
    assert np.linalg.norm(r2 - r) <= 1e-6 * np.linalg.norm(r)
    assert np.linalg.norm(v2 - v) <= 1e-6 * np.linalg.norm(v)
