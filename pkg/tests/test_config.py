import math
from pathlib import Path

import numpy as np
import pytest

from se3dock import config, sim

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_empty_document_gives_defaults():
    cfg = config.parse({})
    sc, ref = cfg.scenario, sim.Scenario()
    assert sc.duration == ref.duration and sc.dt == ref.dt and sc.variant == "conventional"
    assert np.allclose(sc.initial_offset, ref.initial_offset, atol=1e-15)
    assert sc.elements.eccentricity == 0.72
    assert sc.elements.inclination == pytest.approx(math.radians(63.4))
    assert sc.noise is None
    assert sc.controller == ref.controller
    assert cfg.weights is None and cfg.training_scenarios == []


@pytest.mark.parametrize(
    "doc",
    [
        {"nonsense": {}},
        {"scenario": {"durration": 1.0}},
        {"scenario": {"duration": "long"}},
        {"scenario": {"duration": -1.0}},
        {"scenario": {"variant": "fancy"}},
        {"noise": {"enabled": "yes"}},
        {"noise": {"enabled": True, "covariance_diag": [1.0, 2.0]}},
        {"noise": {"enabled": True, "seed": 1.5}},
        {"controller": {"l1": 1.5}},
        {"adaptation": {"gamma": 1.0}},
        {"adaptation": {"gradient_source": "magic"}},
        {"target": {"inertia": [1.0, 2.0]}},
        {"target": {"inertia": [1.0, -2.0, 3.0]}},
        {"training": {"scenarios": "a.toml"}},
        {"training": {"holdout_fraction": 0.0}},
        {"output": {"csv": 3}},
        {"scenario": 5},
    ],
)
def test_invalid_documents_rejected(doc):
    with pytest.raises(config.ConfigError):
        config.parse(doc)


def test_relative_paths_resolve_against_the_file(tmp_path):
    p = tmp_path / "sub" / "c.toml"
    p.parent.mkdir()
    p.write_text('[adaptation]\nweights = "w.bin"\n[training]\nscenarios = ["a.toml", "/abs/b.toml"]\n[output]\ncsv = "../o.csv"\n')
    cfg = config.load(p)
    assert cfg.weights == p.parent / "w.bin"
    assert cfg.training_scenarios == [p.parent / "a.toml", Path("/abs/b.toml")]
    assert cfg.csv == p.parent / ".." / "o.csv"
    assert cfg.source == p


def test_load_errors(tmp_path):
    with pytest.raises(config.ConfigError):
        config.load(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[scenario\n")
    with pytest.raises(config.ConfigError):
        config.load(bad)


def test_overrides(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[scenario]\nduration = 5.0\n")
    assert config.parse_override("scenario.duration=0") == ("scenario.duration", 0)
    assert config.parse_override("adaptation.gradient_source=tuner") == ("adaptation.gradient_source", "tuner")
    assert config.parse_override("initial.translation=[1, 2, 3]") == ("initial.translation", [1, 2, 3])
    cfg = config.load(p, dict([config.parse_override("scenario.duration=0")]))
    assert cfg.scenario.duration == 0.0 and cfg.scenario.steps == 0
    with pytest.raises(config.ConfigError):
        config.parse_override("nothing")
    with pytest.raises(config.ConfigError):
        config.load(p, {"duration": 1.0})


def test_with_variant_and_seed():
    cfg = config.parse({"noise": {"enabled": True, "seed": 3}})
    out = config.with_variant(cfg, "adaptive", 11)
    assert out.scenario.variant == "adaptive" and out.scenario.noise.seed == 11
    assert cfg.scenario.variant == "conventional" and cfg.scenario.noise.seed == 3


@pytest.mark.parametrize("name", ["default.toml", "train_a.toml", "train_b.toml", "noise_free.toml"])
def test_shipped_configs_load(name):
    cfg = config.load(CONFIGS / name)
    assert cfg.scenario.steps > 0


def test_default_config_matches_documented_scenario():
    cfg = config.load(CONFIGS / "default.toml")
    sc = cfg.scenario
    assert np.allclose(sc.initial_offset, sim.default_offset(), atol=1e-15)
    assert sc.noise is not None and sc.duration == 60.0 and sc.dt == 0.01
    assert len(cfg.training_scenarios) == 2
