"""Closed-loop rendezvous runs, comparison metrics and training-data generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import adapt
from .dynamics import (
    BodyModel,
    BodyState,
    GravityModel,
    body_dynamics,
    gravity_wrench,
    integrate_step,
    relative_error,
    transport,
)
from .liegroup import Pose, exp_se3, log_se3
from .noise import TangentNoiseModel
from .orbit import OrbitalElements, elements_to_state
from .smc import (
    ReachingGains,
    SingularityGuard,
    SlidingGains,
    control_wrench,
    reaching_control,
    settling_time_bound,
    sliding_surface,
)

SETTLING_THRESHOLD = 1e-3

MOLNIYA = OrbitalElements(
    semi_major_axis=26_562_000.0,
    eccentricity=0.72,
    inclination=math.radians(63.4),
    raan=0.0,
    arg_perigee=math.radians(270.0),
    true_anomaly=0.0,
)


def _default_target():
    return BodyModel(110.0, np.diag([150.0, 50.0, 50.0]))


def _default_chaser():
    return BodyModel(100.0, np.diag([50.0, 100.0, 50.0]))


def default_offset() -> np.ndarray:
    return np.concatenate([0.3 * np.ones(3) / math.sqrt(3.0), [5.0, -3.0, 2.0]])


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ControllerConfig:
    sliding: SlidingGains = SlidingGains()
    ks1: float = 2.0
    ks2: float = 2.0
    ks_min_fraction: float = 0.1
    guard: SingularityGuard = SingularityGuard()

    def reaching(self) -> ReachingGains:
        return ReachingGains(self.ks1, self.ks2, 0.0, 0.0, self.ks_min_fraction)


@dataclass(frozen=True)
class AdaptationConfig:
    alpha: float = 0.0
    gamma: float = 0.0
    discount: float = 0.95
    r1: float = 1.0
    r2: float = 0.0
    gradient_source: str = "identifier"  # or "tuner"
    max_step_fraction: float = 0.5  # per-step increment cap, fraction of the base gain

    def __post_init__(self):
        if self.gradient_source not in ("identifier", "tuner"):
            raise ValueError("gradient_source must be 'identifier' or 'tuner'")
        if self.max_step_fraction <= 0:
            raise ValueError("max_step_fraction must be positive")


@dataclass(frozen=True)
class Scenario:
    elements: OrbitalElements = MOLNIYA
    target: BodyModel = field(default_factory=_default_target)
    chaser: BodyModel = field(default_factory=_default_chaser)
    desired: Pose = field(default_factory=lambda: Pose(np.eye(3), np.array([10.0, 0.0, 0.0])))
    initial_offset: np.ndarray = field(default_factory=default_offset)
    initial_rate: np.ndarray = field(default_factory=lambda: np.zeros(6))
    controller: ControllerConfig = ControllerConfig()
    adaptation: AdaptationConfig = AdaptationConfig()
    noise: TangentNoiseModel | None = None
    noise_stream: int = 0
    gravity: GravityModel = GravityModel()
    duration: float = 60.0
    dt: float = 0.01
    variant: str = "conventional"

    def __post_init__(self):
        if self.variant not in ("conventional", "adaptive"):
            raise ValueError("variant must be 'conventional' or 'adaptive'")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if not (0.0 <= self.elements.eccentricity < 1.0):
            raise ValueError("eccentricity must lie in [0, 1)")
        object.__setattr__(self, "initial_offset", np.asarray(self.initial_offset, dtype=float).reshape(6))
        object.__setattr__(self, "initial_rate", np.asarray(self.initial_rate, dtype=float).reshape(6))

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))


def init_scenario(sc: Scenario) -> tuple[BodyState, BodyState]:
    """Target from its orbital elements (inertially aligned), chaser at ``C_t D exp(offset)``."""
    r, v = elements_to_state(sc.elements, sc.gravity.mu, min_radius=sc.gravity.earth_radius)
    target = BodyState(Pose(np.eye(3), r), np.concatenate([np.zeros(3), v]))
    Cc = target.pose @ sc.desired @ exp_se3(sc.initial_offset)
    chaser = BodyState(Cc, np.zeros(6))
    A = transport(target, chaser)
    return target, BodyState(Cc, A @ target.twist + sc.initial_rate)


# --- logs ----------------------------------------------------------------------------------


AXES = ("wx", "wy", "wz", "x", "y", "z")

COLUMNS = (
    [("t", "s")]
    + [(f"rho_{a}", "rad" if i < 3 else "m") for i, a in enumerate(AXES)]
    + [(f"sigma_{a}", "rad/s" if i < 3 else "m/s") for i, a in enumerate(AXES)]
    + [(f"s_{a}", "rad/s" if i < 3 else "m/s") for i, a in enumerate(AXES)]
    + [(f"u_{a}", "N*m" if i < 3 else "N") for i, a in enumerate(("tx", "ty", "tz", "fx", "fy", "fz"))]
    + [("ks1", "1"), ("ks2", "1")]
    + [(f"rho_e_{a}", "rad" if i < 3 else "m") for i, a in enumerate(AXES)]
    + [("reward", "1"), ("td_error", "1"), ("value", "1")]
)


@dataclass
class RunLog:
    t: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    s: np.ndarray
    wrench: np.ndarray
    gains: np.ndarray
    rho_e: np.ndarray
    reward: np.ndarray
    td_error: np.ndarray
    value: np.ndarray
    features: np.ndarray | None = None

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else float("nan")

    def table(self) -> np.ndarray:
        return np.column_stack(
            [self.t, self.rho, self.sigma, self.s, self.wrench, self.gains, self.rho_e, self.reward, self.td_error, self.value]
        ) if len(self.t) else np.zeros((0, len(COLUMNS)))

    @classmethod
    def from_table(cls, M: np.ndarray) -> "RunLog":
        M = np.asarray(M, dtype=float).reshape(-1, len(COLUMNS))
        return cls(M[:, 0], M[:, 1:7], M[:, 7:13], M[:, 13:19], M[:, 19:25], M[:, 25:27], M[:, 27:33], M[:, 33], M[:, 34], M[:, 35])


def _empty_log(n: int) -> RunLog:
    return RunLog(np.zeros(n), *(np.zeros((n, 6)) for _ in range(4)), np.zeros((n, 2)), np.zeros((n, 6)), np.zeros(n), np.zeros(n), np.zeros(n))


# --- the closed loop -------------------------------------------------------------------


def _tag(exc: Exception, k: int, t: float) -> Exception:
    exc.step = k
    exc.args = (f"step {k} (t = {t:.4f} s): {exc.args[0] if exc.args else exc}",) + exc.args[1:]
    return exc


def run(sc: Scenario, models: adapt.TrainedModels | None = None, record_features: bool = False) -> RunLog:
    """Simulate ``sc``; ``models`` is required for the adaptive variant.

    When ``models`` is given the identifier also runs alongside the
    conventional variant (its outputs are logged but not fed back), so both
    variants fill the same columns.
    """
    if sc.variant == "adaptive" and models is None:
        raise ValueError("the adaptive variant needs trained weights")
    n = sc.steps
    log = _empty_log(n)
    if record_features:
        log.features = np.zeros((n, adapt.N_FEATURES))

    target, chaser = init_scenario(sc)
    poses = [target.pose, chaser.pose]
    twists = [target.twist, chaser.twist]
    bt, bc, grav = sc.target, sc.chaser, sc.gravity
    sliding, guard = sc.controller.sliding, sc.controller.guard
    reaching = sc.controller.reaching()
    D_inv = sc.desired.inverse()
    stream = sc.noise.stream(sc.noise_stream) if sc.noise is not None else None

    ac = None
    tuner_state = None
    if models is not None:
        ac = adapt.ActorCritic(models.actor, models.critic, sc.adaptation.discount, sc.adaptation.r1, sc.adaptation.r2)
        cap = sc.adaptation.max_step_fraction * np.array([sc.controller.ks1, sc.controller.ks2])
        tuner_state = adapt.GainTunerState(sc.adaptation.alpha, sc.adaptation.gamma, cap)
    adaptive = sc.variant == "adaptive"

    m = None
    snap = reaching

    def measured(h: Pose) -> np.ndarray:
        if m is None:
            return log_se3(h)
        return log_se3(exp_se3(m) @ h)

    def rates(t, P, X):
        T = BodyState(P[0], X[0])
        C = BodyState(P[1], X[1])
        wt = gravity_wrench(grav, bt, T)
        at = body_dynamics(bt, X[0], wt)
        wc = gravity_wrench(grav, bc, C)
        A = transport(T, C)
        xt_c = A @ X[0]
        rho = measured(D_inv @ (P[0].inverse() @ P[1]))
        out = control_wrench(bc, rho, X[1] - xt_c, X[1], xt_c, A @ at, wc, None, sliding, snap, guard)
        rates.first = rates.first if rates.first is not None else out.wrench
        return [at, body_dynamics(bc, X[1], wc + out.wrench)]

    prev = None
    rho_e = None
    sens = None
    v_prev = 0.0
    for k in range(n):
        t = k * sc.dt
        try:
            T = BodyState(poses[0], twists[0])
            C = BodyState(poses[1], twists[1])
            A = transport(T, C)
            rho = relative_error(T, C, sc.desired)
            sigma = C.twist - A @ T.twist
            m = stream.sample() if stream is not None else None
            rho_m = rho if m is None else measured(D_inv @ (T.pose.inverse() @ C.pose))
            s_m = sliding_surface(rho_m, sigma, sliding)
            phi_m = reaching_control(s_m, reaching, sliding)
            if prev is None:
                prev = (rho_m, s_m, phi_m)
            raw = np.concatenate([rho_m, prev[0], s_m, prev[1], phi_m, prev[2]])
            if record_features:
                log.features[k] = raw

            est = rho_m if rho_e is None else rho_e
            if ac is not None:
                x = adapt.normalize(raw, models.scales)
                if adaptive and sens is not None:
                    if sc.adaptation.gradient_source == "tuner":
                        grad = adapt.forward(models.tuner, x)
                        dk = adapt.momentum_step(tuner_state, grad)
                        reaching.apply(dk[0], dk[1])
                    else:
                        adapt.tune_gains(tuner_state, reaching, sliding, sens, rho_m, est, s_m, prev[1])
                rho_e = adapt.actor_estimate(ac, x)
                sens = adapt.estimate_sensitivity(models.actor, x, models.scales)
                v = adapt.value(ac, x)

            snap = reaching.snapshot()
            rates.first = None
            poses, twists = integrate_step(t, poses, twists, rates, sc.dt)
            u = rates.first
        except (ArithmeticError, ValueError) as exc:
            raise _tag(exc, k, t)

        log.t[k] = t
        log.rho[k] = rho
        log.sigma[k] = sigma
        log.s[k] = sliding_surface(rho, sigma, sliding)
        log.wrench[k] = u
        log.gains[k] = (float(np.min(snap.effective1)), float(np.min(snap.effective2)))
        if ac is not None:
            r = adapt.reward(est, rho_m, u, ac.r1, ac.r2)
            log.rho_e[k] = est
            log.reward[k] = r
            log.td_error[k] = adapt.td_error(ac, r, v, v_prev) if k > 0 else r
            log.value[k] = v
            v_prev = v
        prev = (rho_m, s_m, phi_m)
    return log


# --- metrics ----------------------------------------------------------------------------------


@dataclass(frozen=True)
class RunMetrics:
    settling_time: float
    reaching_time: float
    terminal_rho: float
    control_effort: float
    chattering_index: float
    t_max: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def reaching_time(log: RunLog, threshold: float = SETTLING_THRESHOLD) -> float:
    """First time ``||s|| <= threshold``; ``inf`` if it never happens."""
    idx = np.nonzero(np.linalg.norm(log.s, axis=1) <= threshold)[0]
    return float(log.t[idx[0]]) if len(idx) else math.inf


def settling_time(log: RunLog, threshold: float = SETTLING_THRESHOLD) -> float:
    """Start of the final stretch over which ``||s|| <= threshold``; ``inf`` if the run ends above it."""
    above = np.linalg.norm(log.s, axis=1) > threshold
    if len(above) == 0 or above[-1]:
        return math.inf
    idx = np.nonzero(above)[0]
    return float(log.t[idx[-1] + 1]) if len(idx) else float(log.t[0])


def chattering_index(log: RunLog, start: float) -> float:
    """Total variation of the control wrench from ``start`` onward."""
    if len(log.t) < 2:
        return 0.0
    if not math.isfinite(start):
        start = log.t[len(log.t) // 2]
    w = log.wrench[log.t >= start]
    return float(np.sum(np.linalg.norm(np.diff(w, axis=0), axis=1))) if len(w) > 1 else 0.0


def metrics(log: RunLog, t_max: float = math.nan, threshold: float = SETTLING_THRESHOLD) -> RunMetrics:
    ts = settling_time(log, threshold)
    n = len(log.t)
    dt = log.dt if n > 1 else 0.0
    return RunMetrics(
        settling_time=ts,
        reaching_time=reaching_time(log, threshold),
        terminal_rho=float(np.linalg.norm(log.rho[-1])) if n else 0.0,
        control_effort=float(np.sum(np.linalg.norm(log.wrench, axis=1)) * dt),
        chattering_index=chattering_index(log, ts),
        t_max=t_max,
    )


@dataclass(frozen=True)
class Comparison:
    a: RunMetrics
    b: RunMetrics
    deltas: dict
    faster_convergence: bool
    shorter_reaching_phase: bool
    smoother_control: bool


def _delta(x: float, y: float) -> float:
    if x == y:
        return 0.0
    return x - y


def compare(log_a: RunLog, log_b: RunLog, t_max: float = math.nan, threshold: float = SETTLING_THRESHOLD) -> Comparison:
    """Metrics for ``a`` (candidate) and ``b`` (baseline), deltas ``a - b`` and the three claims."""
    if log_a.t.shape != log_b.t.shape or not np.array_equal(log_a.t, log_b.t):
        raise GridMismatch("logs are not on the same time grid")
    ma = metrics(log_a, t_max, threshold)
    mb = metrics(log_b, t_max, threshold)
    da, db = ma.as_dict(), mb.as_dict()
    deltas = {k: _delta(da[k], db[k]) for k in da if k != "t_max"}
    return Comparison(
        ma,
        mb,
        deltas,
        faster_convergence=ma.settling_time < mb.settling_time,
        shorter_reaching_phase=ma.reaching_time < mb.reaching_time,
        smoother_control=ma.chattering_index < mb.chattering_index,
    )


def bound_for(sc: Scenario) -> float:
    return settling_time_bound(sc.controller.sliding, sc.controller.reaching())


# --- training data ------------------------------------------------------------------------------


@dataclass
class Dataset:
    features: np.ndarray  # raw (unnormalised) tuner inputs at t
    next_rho: np.ndarray  # true rho(t + 1)
    wrench: np.ndarray  # control applied over [t, t + 1]
    cost: np.ndarray  # 0.5 ||rho(t+1) - rho_measured(t)||^2, the hold-last-value identification cost
    run_index: np.ndarray

    def __len__(self) -> int:
        return len(self.features)


def dataset_from_logs(logs: Sequence[RunLog]) -> Dataset:
    parts = []
    for i, lg in enumerate(logs):
        if lg.features is None:
            raise ValueError("logs must be recorded with record_features=True")
        n = len(lg.t)
        if n < 2:
            continue
        f = lg.features[:-1]
        nxt = lg.rho[1:]
        e = nxt - f[:, :6]
        parts.append((f, nxt, lg.wrench[:-1], 0.5 * np.sum(e * e, axis=1), np.full(n - 1, i)))
    if not parts:
        return Dataset(np.zeros((0, adapt.N_FEATURES)), np.zeros((0, 6)), np.zeros((0, 6)), np.zeros(0), np.zeros(0, dtype=int))
    return Dataset(*(np.concatenate(c) for c in zip(*parts)))


def generate_training_dataset(scenarios: Sequence[Scenario]) -> Dataset:
    if len(scenarios) < 2:
        raise ValueError("offline training needs at least two scenarios")
    for sc in scenarios:
        if sc.variant != "conventional":
            raise ValueError("training data comes from conventional runs")
    return dataset_from_logs([run(sc, record_features=True) for sc in scenarios])
