"""Neural gain tuning and the actor-critic identifier.

All three networks share one shape: ``y = f(W_ho sigmoid(W_ih x + b_h) + b_o)``
with ``f`` the sigmoid, or the identity for the critic (its value is a plain
linear readout of the hidden layer, without bias). Sigmoid outputs are mapped
affinely onto a declared range ``[lo, hi]``.

Feature vectors are the 36-component concatenation
``[rho(t), rho(t-1), s(t), s(t-1), phi_s(t), phi_s(t-1)]`` divided by fixed
per-component scales.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from .smc import ReachingGains, SlidingGains

N_FEATURES = 36
PHI_SLOT = slice(24, 30)  # phi_s(t) inside the feature vector


class DimensionMismatch(ValueError):
    pass


class WeightFileError(ValueError):
    pass


class TrainingDiverged(FloatingPointError):
    pass


# --- networks --------------------------------------------------------------------


@dataclass
class MlpNetwork:
    w_ih: np.ndarray
    b_h: np.ndarray
    w_ho: np.ndarray
    b_o: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    linear_out: bool = False

    def __post_init__(self):
        for name in ("w_ih", "b_h", "w_ho", "b_o", "lo", "hi"):
            setattr(self, name, np.array(getattr(self, name), dtype=float))
        H, n = self.w_ih.shape
        m = self.w_ho.shape[0]
        if self.b_h.shape != (H,) or self.w_ho.shape != (m, H) or self.b_o.shape != (m,):
            raise DimensionMismatch("inconsistent layer shapes")
        if self.lo.shape != (m,) or self.hi.shape != (m,):
            raise DimensionMismatch("output range must match the output size")
        if not np.all(self.hi > self.lo):
            raise ValueError("output range must satisfy hi > lo")
        if not all(np.all(np.isfinite(a)) for a in self.params()):
            raise ValueError("non-finite weights")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.w_ih.shape[1], self.w_ih.shape[0], self.w_ho.shape[0]

    @property
    def span(self) -> np.ndarray:
        return 1.0 if self.linear_out else self.hi - self.lo

    def params(self) -> list[np.ndarray]:
        return [self.w_ih, self.b_h, self.w_ho, self.b_o]

    def with_params(self, params) -> "MlpNetwork":
        w_ih, b_h, w_ho, b_o = params
        return replace(self, w_ih=w_ih, b_h=b_h, w_ho=w_ho, b_o=b_o)

    def copy(self) -> "MlpNetwork":
        return self.with_params([p.copy() for p in self.params()])

    @classmethod
    def initialize(cls, n_in, n_hidden, n_out, rng, lo=0.0, hi=1.0, linear_out=False):
        """Uniform Glorot initialisation with zero biases."""
        a = np.sqrt(6.0 / (n_in + n_hidden))
        b = np.sqrt(6.0 / (n_hidden + n_out))
        return cls(
            rng.uniform(-a, a, (n_hidden, n_in)),
            np.zeros(n_hidden),
            rng.uniform(-b, b, (n_out, n_hidden)),
            np.zeros(n_out),
            np.broadcast_to(np.asarray(lo, dtype=float), (n_out,)),
            np.broadcast_to(np.asarray(hi, dtype=float), (n_out,)),
            linear_out,
        )

    @classmethod
    def zeros(cls, n_in, n_hidden, n_out, lo=0.0, hi=1.0, linear_out=False):
        return cls(
            np.zeros((n_hidden, n_in)),
            np.zeros(n_hidden),
            np.zeros((n_out, n_hidden)),
            np.zeros(n_out),
            np.broadcast_to(np.asarray(lo, dtype=float), (n_out,)),
            np.broadcast_to(np.asarray(hi, dtype=float), (n_out,)),
            linear_out,
        )


def sigmoid(x):
    return expit(x)


def _check_input(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.sizes[0]:
        raise DimensionMismatch(f"expected {net.sizes[0]} inputs, got {x.shape[-1]}")
    return x


def activations(net: MlpNetwork, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hidden activations ``Y_h`` and raw outputs ``Y_o`` (before rescaling)."""
    x = _check_input(net, x)
    y_h = sigmoid(x @ net.w_ih.T + net.b_h)
    if net.linear_out:
        return y_h, y_h @ net.w_ho.T
    return y_h, sigmoid(y_h @ net.w_ho.T + net.b_o)


def decode(net: MlpNetwork, y_raw: np.ndarray) -> np.ndarray:
    if net.linear_out:
        return y_raw
    return net.lo + net.span * y_raw


def encode(net: MlpNetwork, y: np.ndarray) -> np.ndarray:
    if net.linear_out:
        return np.asarray(y, dtype=float)
    return (np.asarray(y, dtype=float) - net.lo) / net.span


def forward(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    return decode(net, activations(net, x)[1])


def loss_and_gradient(net: MlpNetwork, x: np.ndarray, target: np.ndarray):
    """Mean of ``0.5 ||target - y_raw||^2`` over a batch and its parameter gradient.

    ``target`` is expressed in raw network units (see :func:`encode`).
    """
    x = np.atleast_2d(_check_input(net, x))
    target = np.atleast_2d(np.asarray(target, dtype=float))
    if target.shape != (x.shape[0], net.sizes[2]):
        raise DimensionMismatch("target shape does not match the batch")
    n = x.shape[0]
    y_h, y_o = activations(net, x)
    e = y_o - target
    loss = 0.5 * float(np.sum(e * e)) / n
    dz = e / n if net.linear_out else e * y_o * (1.0 - y_o) / n
    g_w_ho = dz.T @ y_h
    g_b_o = np.zeros_like(net.b_o) if net.linear_out else dz.sum(axis=0)
    dh = (dz @ net.w_ho) * y_h * (1.0 - y_h)
    g_w_ih = dh.T @ x
    g_b_h = dh.sum(axis=0)
    return loss, [g_w_ih, g_b_h, g_w_ho, g_b_o]


def backprop_update(net: MlpNetwork, x, target, learning_rate: float) -> tuple[MlpNetwork, float]:
    """One gradient step on ``0.5 ||target - y||^2``; returns the pre-step loss."""
    loss, grads = loss_and_gradient(net, x, target)
    if learning_rate == 0.0:
        return net, loss
    return net.with_params([p - learning_rate * g for p, g in zip(net.params(), grads)]), loss


def input_jacobian(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    """``d forward(x) / dx``, shape ``(n_out, n_in)``."""
    y_h, y_o = activations(net, x)
    inner = (net.w_ho * (y_h * (1.0 - y_h))) @ net.w_ih
    if net.linear_out:
        return inner
    return (net.span * y_o * (1.0 - y_o))[:, None] * inner


# --- features ----------------------------------------------------------------------


@dataclass(frozen=True)
class TunerInput:
    rho_t: np.ndarray
    rho_prev: np.ndarray
    s_t: np.ndarray
    s_prev: np.ndarray
    phi_s_t: np.ndarray
    phi_s_prev: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate(
            [self.rho_t, self.rho_prev, self.s_t, self.s_prev, self.phi_s_t, self.phi_s_prev]
        )


def feature_scales(raw: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """Per-component max-abs over a dataset of raw feature vectors."""
    raw = np.atleast_2d(raw)
    if raw.shape[1] != N_FEATURES:
        raise DimensionMismatch(f"features must have {N_FEATURES} components")
    return np.maximum(np.max(np.abs(raw), axis=0), floor)


def normalize(raw: np.ndarray, scales: np.ndarray) -> np.ndarray:
    return np.asarray(raw, dtype=float) / scales


# --- gain-update law ------------------------------------------------------------------


def reaching_sensitivity(s_t, s_prev, sliding: SlidingGains) -> np.ndarray:
    """Columns ``d(delta phi_s)/d ks1`` and ``d(delta phi_s)/d ks2`` of the discretised reaching law.

    ``sign(s)`` is taken at ``s(t)``; shape ``(6, 2)``.
    """
    sg = np.sign(s_t)
    a1 = np.abs(s_t) ** sliding.l1 - np.abs(s_prev) ** sliding.l1
    a2 = np.abs(s_t) ** sliding.l2 - np.abs(s_prev) ** sliding.l2
    return np.stack([-sg * a1, -sg * a2], axis=1)


def reaching_delta(s_t, s_prev, sliding: SlidingGains, reaching: ReachingGains) -> np.ndarray:
    d = reaching_sensitivity(s_t, s_prev, sliding)
    return reaching.effective1 * d[:, 0] + reaching.effective2 * d[:, 1]


def estimate_sensitivity(actor: MlpNetwork, x_norm: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """``d rho_e / d phi_s(t)`` (6x6) of the identifier at the normalised input ``x_norm``.

    For a sigmoid network this is
    ``rho_e (1 - rho_e) * W_ho diag(Y_h (1 - Y_h)) W_ih`` restricted to the
    ``phi_s(t)`` inputs, including the input and output rescalings.
    """
    return input_jacobian(actor, x_norm)[:, PHI_SLOT] / scales[PHI_SLOT]


def gain_gradient(rho, rho_e, sensitivity: np.ndarray, dphi_dk: np.ndarray) -> np.ndarray:
    """Chain rule ``dJ/dk = dJ/drho_e . drho_e/dphi_s . dphi_s/dk`` for ``J = 0.5 ||rho - rho_e||^2``."""
    return -(np.asarray(rho) - np.asarray(rho_e)) @ sensitivity @ dphi_dk


@dataclass
class GainTunerState:
    alpha: float = 0.0
    gamma: float = 0.0
    max_step: float = np.inf
    history: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not (0 <= self.gamma < 1):
            raise ValueError("gamma must lie in [0, 1)")
        self.history = np.array(self.history, dtype=float).reshape(2, 2)

    @property
    def frozen(self) -> bool:
        return self.alpha == 0.0 and self.gamma == 0.0


def momentum_step(state: GainTunerState, gradient: np.ndarray) -> np.ndarray:
    """``dk(t) = -alpha dJ/dk + gamma dk(t-1) + gamma (1 - gamma) dk(t-2)``, history shifted."""
    a, g = state.alpha, state.gamma
    dk = -a * np.asarray(gradient, dtype=float) + g * state.history[0] + g * (1.0 - g) * state.history[1]
    dk = np.clip(dk, -state.max_step, state.max_step)
    state.history = np.stack([dk, state.history[0]])
    return dk


def tune_gains(
    state: GainTunerState,
    reaching: ReachingGains,
    sliding: SlidingGains,
    sensitivity: np.ndarray,
    rho,
    rho_e,
    s_t,
    s_prev,
) -> np.ndarray:
    """Run one step of the gain-update law and apply it to ``reaching`` (clamped)."""
    grad = gain_gradient(rho, rho_e, sensitivity, reaching_sensitivity(s_t, s_prev, sliding))
    dk = momentum_step(state, grad)
    reaching.apply(dk[0], dk[1])
    return dk


# --- actor-critic ------------------------------------------------------------------------


@dataclass
class ActorCritic:
    actor: MlpNetwork
    critic: MlpNetwork
    discount_factor: float = 0.95
    r1: float = 1.0
    r2: float = 0.0

    def __post_init__(self):
        if not (0 < self.discount_factor <= 1):
            raise ValueError("discount factor must lie in (0, 1]")
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("reward weights must be non-negative")
        if self.actor.sizes[2] != 6 or self.critic.sizes[2] != 1 or not self.critic.linear_out:
            raise DimensionMismatch("actor must emit 6 outputs and the critic one linear value")


def actor_estimate(ac: ActorCritic, x_norm: np.ndarray) -> np.ndarray:
    return forward(ac.actor, x_norm)


def reward(rho_e, rho, control, r1: float, r2: float) -> float:
    e = np.asarray(rho_e, dtype=float) - np.asarray(rho, dtype=float)
    u = np.asarray(control, dtype=float)
    return -r1 * float(e @ e) - r2 * float(u @ u)


def value(ac: ActorCritic, x_norm: np.ndarray) -> float:
    return float(forward(ac.critic, x_norm)[0])


def td_error(ac: ActorCritic, r: float, v_t: float, v_prev: float) -> float:
    return r + ac.discount_factor * (v_t - v_prev)


def td_loss_and_gradient(critic: MlpNetwork, x_t, x_prev, r, discount):
    """Mean ``0.5 eps^2`` over a batch of transitions and its exact gradient.

    ``eps = r + discount (V(x_t) - V(x_prev))`` is differentiated through both
    value evaluations.
    """
    x_t = np.atleast_2d(x_t)
    x_prev = np.atleast_2d(x_prev)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    n = x_t.shape[0]
    h_t = sigmoid(x_t @ critic.w_ih.T + critic.b_h)
    h_p = sigmoid(x_prev @ critic.w_ih.T + critic.b_h)
    v_t = h_t @ critic.w_ho[0]
    v_p = h_p @ critic.w_ho[0]
    eps = r + discount * (v_t - v_p)
    loss = 0.5 * float(eps @ eps) / n
    c = discount * eps / n
    g_w_ho = (c @ (h_t - h_p))[None, :]
    d_t = (c[:, None] * critic.w_ho[0]) * h_t * (1.0 - h_t)
    d_p = (c[:, None] * critic.w_ho[0]) * h_p * (1.0 - h_p)
    g_w_ih = d_t.T @ x_t - d_p.T @ x_prev
    g_b_h = d_t.sum(axis=0) - d_p.sum(axis=0)
    return loss, [g_w_ih, g_b_h, g_w_ho, np.zeros(1)]


# --- offline training -------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 60
    batch_size: int = 64
    learning_rate: float = 1e-2
    holdout_fraction: float = 0.2
    seed: int = 0
    hidden_tuner: int = 12
    hidden_actor: int = 16
    hidden_critic: int = 12
    envelope_margin: float = 1.25
    min_envelope: float = 2.0
    gain_margin: float = 1.25

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if not (0 < self.holdout_fraction < 1):
            raise ValueError("holdout_fraction must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


class _Adam:
    def __init__(self, params, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * g * g
            out.append(p - self.lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps))
        return out


def _fit(net, loss_fn, train_idx, hold_idx, cfg: TrainingConfig, rng, label):
    """Epoch-shuffled minibatch training; returns the net and per-epoch holdout losses."""
    opt = _Adam(net.params(), cfg.learning_rate)
    curve = [loss_fn(net, hold_idx)[0]]
    for epoch in range(cfg.epochs):
        order = rng.permutation(train_idx)
        for k in range(0, len(order), cfg.batch_size):
            _, grads = loss_fn(net, order[k : k + cfg.batch_size])
            net = net.with_params(opt.step(net.params(), grads))
        curve.append(loss_fn(net, hold_idx)[0])
        if not np.isfinite(curve[-1]):
            raise TrainingDiverged(f"{label} holdout loss is not finite after epoch {epoch + 1}")
    return net, curve


@dataclass
class TrainedModels:
    tuner: MlpNetwork
    actor: MlpNetwork
    critic: MlpNetwork
    scales: np.ndarray
    curves: dict = field(default_factory=dict)


def tuner_targets(dataset, actor: MlpNetwork, scales: np.ndarray, sliding: SlidingGains) -> np.ndarray:
    """Chain-rule gradients ``dJ/dk`` replayed over the recorded runs with a trained identifier.

    For row ``t`` the estimate of ``rho(t)`` is the identifier output at row
    ``t - 1`` of the same run; the first row of each run has no estimate and
    gets a zero gradient.
    """
    X = normalize(dataset.features, scales)
    out = np.zeros((len(X), 2))
    prev_run = -1
    for i in range(len(X)):
        if dataset.run_index[i] != prev_run:
            prev_run = dataset.run_index[i]
            continue
        sens = estimate_sensitivity(actor, X[i - 1], scales)
        rho_e = forward(actor, X[i - 1])
        f = dataset.features[i]
        out[i] = gain_gradient(f[0:6], rho_e, sens, reaching_sensitivity(f[12:18], f[18:24], sliding))
    return out


def offline_train(dataset, sliding: SlidingGains, cfg: TrainingConfig = TrainingConfig(), discount: float = 0.95, r1: float = 1.0, r2: float = 0.0) -> TrainedModels:
    """Train identifier, critic and tuner on recorded conventional runs.

    The identifier (actor) regresses the next error ``rho(t+1)``. The critic is
    fit to the temporal-difference error of the reward stream generated by the
    trained identifier. The tuner regresses the chain-rule gain gradient of
    the identification cost, replayed along the recorded runs.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n = len(dataset.features)
    if n < 10:
        raise ValueError("dataset is too small to train on")
    scales = feature_scales(dataset.features)
    X = normalize(dataset.features, scales)

    perm = rng.permutation(n)
    n_hold = max(1, int(round(cfg.holdout_fraction * n)))
    hold, train = np.sort(perm[:n_hold]), np.sort(perm[n_hold:])

    env = max(cfg.min_envelope, cfg.envelope_margin * float(np.max(np.abs(dataset.next_rho))))
    actor = MlpNetwork.initialize(N_FEATURES, cfg.hidden_actor, 6, rng, -env, env)
    Y = encode(actor, dataset.next_rho)
    actor, actor_curve = _fit(actor, lambda net, idx: loss_and_gradient(net, X[idx], Y[idx]), train, hold, cfg, rng, "actor")

    # critic: transitions (t-1 -> t) within each run
    rho_e = forward(actor, X)
    est = np.vstack([np.zeros(6), rho_e[:-1]])
    same = np.concatenate([[False], dataset.run_index[1:] == dataset.run_index[:-1]])
    R = np.array([reward(est[i], dataset.features[i, :6], dataset.wrench[i], r1, r2) for i in range(n)])
    t_idx = np.nonzero(same)[0]
    critic = MlpNetwork.initialize(N_FEATURES, cfg.hidden_critic, 1, rng, linear_out=True)
    pos = {int(v): k for k, v in enumerate(t_idx)}
    c_train = np.array([pos[i] for i in train if i in pos])
    c_hold = np.array([pos[i] for i in hold if i in pos])

    def critic_loss(net, idx):
        rows = t_idx[idx]
        return td_loss_and_gradient(net, X[rows], X[rows - 1], R[rows], discount)

    critic, critic_curve = _fit(critic, critic_loss, c_train, c_hold, cfg, rng, "critic")

    G = tuner_targets(dataset, actor, scales, sliding)
    gmax = cfg.gain_margin * np.maximum(np.max(np.abs(G), axis=0), 1e-12)
    tuner = MlpNetwork.initialize(N_FEATURES, cfg.hidden_tuner, 2, rng, -gmax, gmax)
    T = encode(tuner, G)
    tuner, tuner_curve = _fit(tuner, lambda net, idx: loss_and_gradient(net, X[idx], T[idx]), train, hold, cfg, rng, "tuner")

    curves = {"actor": actor_curve, "critic": critic_curve, "tuner": tuner_curve}
    return TrainedModels(tuner, actor, critic, scales, curves)


# --- weight files ------------------------------------------------------------------------------

_MAGIC = b"SE3DNNW\x00"
_VERSION = 1


def _pack_net(net: MlpNetwork) -> bytes:
    n_in, h, n_out = net.sizes
    head = struct.pack("<IIIB", n_in, h, n_out, int(net.linear_out))
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in (*net.params(), net.lo, net.hi))
    return head + body


def _unpack_net(buf: memoryview, off: int) -> tuple[MlpNetwork, int]:
    n_in, h, n_out, lin = struct.unpack_from("<IIIB", buf, off)
    off += struct.calcsize("<IIIB")
    shapes = [(h, n_in), (h,), (n_out, h), (n_out,), (n_out,), (n_out,)]
    arrays = []
    for shp in shapes:
        cnt = int(np.prod(shp))
        if off + 8 * cnt > len(buf):
            raise WeightFileError("weight file is truncated")
        arrays.append(np.frombuffer(buf, dtype="<f8", count=cnt, offset=off).reshape(shp).astype(float))
        off += 8 * cnt
    return MlpNetwork(*arrays, linear_out=bool(lin)), off


def save_weights(path, models: TrainedModels) -> None:
    parts = [_MAGIC, struct.pack("<I", _VERSION)]
    for net in (models.tuner, models.actor, models.critic):
        parts.append(_pack_net(net))
    parts.append(struct.pack("<I", len(models.scales)))
    parts.append(np.ascontiguousarray(models.scales, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_weights(path) -> TrainedModels:
    data = Path(path).read_bytes()
    if not data.startswith(_MAGIC):
        raise WeightFileError(f"{path}: not a weight file")
    buf = memoryview(data)
    off = len(_MAGIC)
    (version,) = struct.unpack_from("<I", buf, off)
    if version != _VERSION:
        raise WeightFileError(f"{path}: unsupported version {version}")
    off += 4
    try:
        nets = []
        for _ in range(3):
            net, off = _unpack_net(buf, off)
            nets.append(net)
        (k,) = struct.unpack_from("<I", buf, off)
        off += 4
        scales = np.frombuffer(buf, dtype="<f8", count=k, offset=off).astype(float)
    except (struct.error, ValueError) as exc:
        raise WeightFileError(f"{path}: {exc}") from exc
    if off + 8 * k != len(data):
        raise WeightFileError(f"{path}: trailing or missing bytes")
    tuner, actor, critic = nets
    if tuner.sizes != (N_FEATURES, tuner.sizes[1], 2) or actor.sizes[::2] != (N_FEATURES, 6) or critic.sizes[2] != 1:
        raise WeightFileError(f"{path}: unexpected network sizes")
    return TrainedModels(tuner, actor, critic, scales)
