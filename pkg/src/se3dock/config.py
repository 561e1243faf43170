"""TOML scenario files.

Every key is optional and falls back to the defaults below; unknown sections
or keys are rejected. Relative paths are resolved against the file's directory.

==============  =====================  ========  ===============================
section         key                    unit      default
==============  =====================  ========  ===============================
scenario        duration               s         60.0
scenario        dt                     s         0.01
scenario        variant                          "conventional"
orbit           semi_major_axis        m         26562000.0
orbit           eccentricity                     0.72
orbit           inclination_deg        deg       63.4
orbit           raan_deg               deg       0.0
orbit           arg_perigee_deg        deg       270.0
orbit           true_anomaly_deg       deg       0.0
target          mass                   kg        110.0
target          inertia                kg m^2    [150.0, 50.0, 50.0] (diagonal or 3x3)
chaser          mass                   kg        100.0
chaser          inertia                kg m^2    [50.0, 100.0, 50.0]
docking         position               m         [10.0, 0.0, 0.0]
docking         rotation               rad       [0.0, 0.0, 0.0] (rotation vector)
initial         rotation               rad       0.3 about (1,1,1)/sqrt(3)
initial         translation            m         [5.0, -3.0, 2.0] (exponential coordinates)
initial         rate                   rad/s,m/s [0.0] * 6
controller      k1, k2, l1, l2                   0.5, 0.5, 0.5, 1.5
controller      ks1, ks2                         2.0, 2.0
controller      ks_min_fraction                  0.1
controller      guard_epsilon          rad, m    1e-4
noise           enabled                          false
noise           covariance_diag        rad^2,m^2 [0.01]*3 + [0.05]*3
noise           seed                             0
noise           stream                           0
gravity         j2                               true
adaptation      alpha, gamma                     0.1, 0.5
adaptation      discount                         0.95
adaptation      r1, r2                           1.0, 0.0
adaptation      gradient_source                  "identifier"
adaptation      max_step_fraction                0.5
adaptation      weights                path      none
training        scenarios              paths     []
training        epochs, batch_size               60, 64
training        learning_rate                    0.01
training        holdout_fraction                 0.2
training        seed                             0
output          csv                    path      "run.csv"
==============  =====================  ========  ===============================
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .adapt import TrainingConfig
from .dynamics import BodyModel, GravityModel
from .liegroup import Pose, exp_so3
from .noise import DEFAULT_COVARIANCE, TangentNoiseModel
from .orbit import OrbitalElements
from .sim import AdaptationConfig, ControllerConfig, Scenario, default_offset
from .smc import SingularityGuard, SlidingGains


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "scenario": {"duration", "dt", "variant"},
    "orbit": {"semi_major_axis", "eccentricity", "inclination_deg", "raan_deg", "arg_perigee_deg", "true_anomaly_deg"},
    "target": {"mass", "inertia"},
    "chaser": {"mass", "inertia"},
    "docking": {"position", "rotation"},
    "initial": {"rotation", "translation", "rate"},
    "controller": {"k1", "k2", "l1", "l2", "ks1", "ks2", "ks_min_fraction", "guard_epsilon"},
    "noise": {"enabled", "covariance_diag", "seed", "stream"},
    "gravity": {"j2"},
    "adaptation": {"alpha", "gamma", "discount", "r1", "r2", "gradient_source", "max_step_fraction", "weights"},
    "training": {"scenarios", "epochs", "batch_size", "learning_rate", "holdout_fraction", "seed"},
    "output": {"csv"},
}


@dataclass
class RunConfig:
    scenario: Scenario
    weights: Path | None = None
    training: TrainingConfig = TrainingConfig()
    training_scenarios: list[Path] = field(default_factory=list)
    csv: Path = Path("run.csv")
    source: Path | None = None


def _num(doc, key, default, where, integer=False):
    v = doc.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"[{where}] {key} must be a number")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"[{where}] {key} must be an integer")
        return int(v)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"[{where}] {key} must be finite")
    return v


def _vec(doc, key, default, n, where):
    v = doc.get(key, default)
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"[{where}] {key} must be a list of numbers") from None
    if a.shape != (n,) or not np.all(np.isfinite(a)):
        raise ConfigError(f"[{where}] {key} must hold {n} finite numbers")
    return a


def _inertia(doc, default, where):
    v = np.asarray(doc.get("inertia", default), dtype=float)
    if v.shape == (3,):
        return np.diag(v)
    if v.shape == (3, 3):
        return v
    raise ConfigError(f"[{where}] inertia must be 3 principal moments or a 3x3 matrix")


def _path(base: Path, v, where, key) -> Path:
    if not isinstance(v, str):
        raise ConfigError(f"[{where}] {key} must be a path string")
    p = Path(v)
    return p if p.is_absolute() else base / p


def parse(doc: dict, base: Path = Path(".")) -> RunConfig:
    for sec, body in doc.items():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{sec}] must be a table")
        extra = set(body) - _SCHEMA[sec]
        if extra:
            raise ConfigError(f"unknown key(s) in [{sec}]: {', '.join(sorted(extra))}")
    g = {s: doc.get(s, {}) for s in _SCHEMA}

    sc = g["scenario"]
    o = g["orbit"]
    elements = OrbitalElements(
        _num(o, "semi_major_axis", 26_562_000.0, "orbit"),
        _num(o, "eccentricity", 0.72, "orbit"),
        math.radians(_num(o, "inclination_deg", 63.4, "orbit")),
        math.radians(_num(o, "raan_deg", 0.0, "orbit")),
        math.radians(_num(o, "arg_perigee_deg", 270.0, "orbit")),
        math.radians(_num(o, "true_anomaly_deg", 0.0, "orbit")),
    )
    c = g["controller"]
    ini = g["initial"]
    off = default_offset()
    offset = np.concatenate([_vec(ini, "rotation", off[:3], 3, "initial"), _vec(ini, "translation", off[3:], 3, "initial")])
    dock = g["docking"]
    desired = Pose(exp_so3(_vec(dock, "rotation", [0.0, 0.0, 0.0], 3, "docking")), _vec(dock, "position", [10.0, 0.0, 0.0], 3, "docking"))

    nz = g["noise"]
    enabled = nz.get("enabled", False)
    if not isinstance(enabled, bool):
        raise ConfigError("[noise] enabled must be true or false")
    noise = None
    if enabled:
        cov = np.diag(_vec(nz, "covariance_diag", np.diag(DEFAULT_COVARIANCE), 6, "noise"))
        noise = TangentNoiseModel(cov, _num(nz, "seed", 0, "noise", integer=True))

    a = g["adaptation"]
    src = a.get("gradient_source", "identifier")
    j2 = g["gravity"].get("j2", True)
    if not isinstance(j2, bool):
        raise ConfigError("[gravity] j2 must be true or false")
    variant = sc.get("variant", "conventional")
    if not isinstance(variant, str):
        raise ConfigError("[scenario] variant must be a string")
    try:
        scenario = Scenario(
            elements=elements,
            target=BodyModel(_num(g["target"], "mass", 110.0, "target"), _inertia(g["target"], [150.0, 50.0, 50.0], "target")),
            chaser=BodyModel(_num(g["chaser"], "mass", 100.0, "chaser"), _inertia(g["chaser"], [50.0, 100.0, 50.0], "chaser")),
            desired=desired,
            initial_offset=offset,
            initial_rate=_vec(ini, "rate", np.zeros(6), 6, "initial"),
            controller=ControllerConfig(
                SlidingGains(_num(c, "k1", 0.5, "controller"), _num(c, "k2", 0.5, "controller"), _num(c, "l1", 0.5, "controller"), _num(c, "l2", 1.5, "controller")),
                _num(c, "ks1", 2.0, "controller"),
                _num(c, "ks2", 2.0, "controller"),
                _num(c, "ks_min_fraction", 0.1, "controller"),
                SingularityGuard(_num(c, "guard_epsilon", 1e-4, "controller")),
            ),
            adaptation=AdaptationConfig(
                alpha=_num(a, "alpha", 0.1, "adaptation"),
                gamma=_num(a, "gamma", 0.5, "adaptation"),
                discount=_num(a, "discount", 0.95, "adaptation"),
                r1=_num(a, "r1", 1.0, "adaptation"),
                r2=_num(a, "r2", 0.0, "adaptation"),
                gradient_source=src,
                max_step_fraction=_num(a, "max_step_fraction", 0.5, "adaptation"),
            ),
            noise=noise,
            noise_stream=_num(nz, "stream", 0, "noise", integer=True),
            gravity=GravityModel(j2_enabled=j2),
            duration=_num(sc, "duration", 60.0, "scenario"),
            dt=_num(sc, "dt", 0.01, "scenario"),
            variant=variant,
        )
        # the adaptation law validates alpha/gamma lazily; check them here
        if scenario.adaptation.alpha < 0 or not (0 <= scenario.adaptation.gamma < 1):
            raise ValueError("[adaptation] needs alpha >= 0 and 0 <= gamma < 1")
        if not (0 < scenario.adaptation.discount <= 1) or scenario.adaptation.r1 < 0 or scenario.adaptation.r2 < 0:
            raise ValueError("[adaptation] needs 0 < discount <= 1 and non-negative reward weights")
        t = g["training"]
        training = TrainingConfig(
            epochs=_num(t, "epochs", 60, "training", integer=True),
            batch_size=_num(t, "batch_size", 64, "training", integer=True),
            learning_rate=_num(t, "learning_rate", 1e-2, "training"),
            holdout_fraction=_num(t, "holdout_fraction", 0.2, "training"),
            seed=_num(t, "seed", 0, "training", integer=True),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    scen = t.get("scenarios", [])
    if not isinstance(scen, list):
        raise ConfigError("[training] scenarios must be a list of paths")
    weights = a.get("weights")
    return RunConfig(
        scenario=scenario,
        weights=_path(base, weights, "adaptation", "weights") if weights is not None else None,
        training=training,
        training_scenarios=[_path(base, p, "training", "scenarios") for p in scen],
        csv=_path(base, g["output"].get("csv", "run.csv"), "output", "csv"),
    )


def load(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for dotted, value in (overrides or {}).items():
        sec, _, key = dotted.partition(".")
        if not key:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        doc.setdefault(sec, {})[key] = value
    cfg = parse(doc, path.parent)
    cfg.source = path
    return cfg


def parse_override(text: str) -> tuple[str, object]:
    """``section.key=value`` with a TOML value, e.g. ``scenario.duration=0``."""
    key, sep, raw = text.partition("=")
    if not sep:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.strip(), value


def with_variant(cfg: RunConfig, variant: str | None = None, seed: int | None = None) -> RunConfig:
    sc = cfg.scenario
    if variant is not None:
        sc = replace(sc, variant=variant)
    if seed is not None and sc.noise is not None:
        sc = replace(sc, noise=TangentNoiseModel(sc.noise.covariance, seed))
    return replace(cfg, scenario=sc)
