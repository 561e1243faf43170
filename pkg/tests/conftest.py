import numpy as np
import pytest
from hypothesis import settings

from se3dock import sim

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def short_scenario():
    return sim.Scenario(duration=0.5)


@pytest.fixture(scope="session")
def small_models():
    """Networks trained briefly on two short conventional runs."""
    from se3dock import adapt

    scs = [
        sim.Scenario(duration=2.0, initial_offset=np.array([0.2, -0.1, 0.25, 4.0, -2.0, 3.0])),
        sim.Scenario(duration=2.0, initial_offset=np.array([-0.3, 0.2, 0.1, -3.0, 5.0, -1.0])),
    ]
    ds = sim.generate_training_dataset(scs)
    cfg = adapt.TrainingConfig(epochs=5)
    return adapt.offline_train(ds, sim.ControllerConfig().sliding, cfg)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
