"""Per-pair deep Q-learning agent.

The evaluation network takes the 8 state features together with the 4
features of one candidate action and returns a single Q-value, so picking
the greedy action means sweeping the network over the action lattice.
Everything is plain numpy in float64 with hand-written backpropagation.

Channels are static within a run, so the environment of one agent is a
contextual bandit: the reward of an action depends only on the pair's
gains and the action itself. ``discount=0`` is therefore the default.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .channel import NoiseModel
from .coopshare import ActionGrid, QosConfig, ResourceDecision, evaluate_grid, evaluate_pair, watt_to_dbm

__all__ = [
    "TrainingError",
    "AgentState",
    "Experience",
    "ReplayMemory",
    "QNetwork",
    "TrainConfig",
    "EpisodeRecord",
    "epsilon_schedule",
    "action_features",
    "state_features",
    "forward",
    "select_action",
    "td_target",
    "train_step",
    "train_agent",
    "greedy_decision",
    "admissible_actions",
    "episode_log_to_csv",
    "save_checkpoint",
    "load_checkpoint",
]

STATE_DIM = 8
ACTION_DIM = 4
GAIN_DB_RANGE = (-160.0, 0.0)


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss or parameters)."""


def _affine(x, lo, hi):
    return np.clip(2.0 * (np.asarray(x, dtype=float) - lo) / (hi - lo) - 1.0, -1.0, 1.0)


# ---------------------------------------------------------------------------
# features


@dataclass(frozen=True)
class AgentState:
    """Raw state of agent (m, n): gains in dB, current powers in dBm, theta."""

    gains_db: tuple
    current_powers_dbm: tuple
    current_theta: float

    def features(self, q: QosConfig) -> np.ndarray:
        lo, hi = watt_to_dbm(q.p_min), watt_to_dbm(q.p_max)
        return np.concatenate(
            (
                _affine(self.gains_db, *GAIN_DB_RANGE),
                _affine(self.current_powers_dbm, lo, hi) if hi > lo else np.zeros(3),
                _affine([self.current_theta], 0.0, 0.5),
            )
        )


def state_features(gains, decision: ResourceDecision, q: QosConfig) -> np.ndarray:
    """Normalized 8-vector for linear gains ``(g_mn, g_mb, g_nb, g_nn)`` and a decision."""
    st = AgentState(
        tuple(10.0 * math.log10(g) for g in gains),
        tuple(float(watt_to_dbm(p)) for p in (decision.p_c, decision.p_r, decision.p_d)),
        decision.theta,
    )
    return st.features(q)


def action_features(grid: ActionGrid, q: QosConfig, indices=None) -> np.ndarray:
    """Normalized ``(p_c, p_r, p_d, theta)`` features, shape (K, 4)."""
    p_c, p_r, p_d, theta = grid.columns()
    if indices is not None:
        p_c, p_r, p_d, theta = (c[indices] for c in (p_c, p_r, p_d, theta))
    lo, hi = watt_to_dbm(q.p_min), watt_to_dbm(q.p_max)
    cols = [_affine(watt_to_dbm(p), lo, hi) if hi > lo else np.zeros(len(p)) for p in (p_c, p_r, p_d)]
    cols.append(_affine(theta, 0.0, 0.5))
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# network


class QNetwork:
    """Fully connected ReLU network with a linear scalar output."""

    def __init__(self, weights, biases):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need one bias vector per weight matrix")
        self.weights = [np.array(w, dtype=float) for w in weights]
        self.biases = [np.array(b, dtype=float).reshape(-1) for b in biases]
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or w.shape[1] != b.shape[0]:
                raise ValueError("weight/bias shapes are inconsistent")
        for w0, w1 in zip(self.weights, self.weights[1:]):
            if w0.shape[1] != w1.shape[0]:
                raise ValueError("consecutive layer sizes do not chain")
        if self.weights[-1].shape[1] != 1:
            raise ValueError("output layer must have width 1")

    @classmethod
    def initialize(cls, layer_sizes, rng: np.random.Generator) -> "QNetwork":
        """Uniform(+-sqrt(6 / fan_in)) weights, zero biases."""
        ws, bs = [], []
        for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
            lim = math.sqrt(6.0 / fan_in)
            ws.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
            bs.append(np.zeros(fan_out))
        return cls(ws, bs)

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def load_from(self, other: "QNetwork"):
        for dst, src in zip(self.params(), other.params()):
            dst[...] = src

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def predict(self, x) -> np.ndarray:
        """Q-values for a batch of 12-feature rows, shape (B,)."""
        h = np.asarray(x, dtype=float)
        if h.ndim != 2 or h.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"expected inputs of shape (B, {self.layer_sizes[0]}), got {h.shape}")
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                np.maximum(h, 0.0, out=h)
        return h[:, 0]

    def sweep(self, s_feat, a_feats) -> np.ndarray:
        """Q(s, a) for one state and many actions.

        The first layer is split into its state and action blocks so the
        state contribution is computed once.
        """
        w0 = self.weights[0]
        k = len(s_feat)
        h = a_feats @ w0[k:] + (s_feat @ w0[:k] + self.biases[0])
        np.maximum(h, 0.0, out=h)
        last = len(self.weights) - 1
        for i in range(1, last + 1):
            h = h @ self.weights[i] + self.biases[i]
            if i < last:
                np.maximum(h, 0.0, out=h)
        return h[:, 0]

    def gradients(self, x, target):
        """Mean squared error against ``target`` and its parameter gradients."""
        x = np.asarray(x, dtype=float)
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        err = acts[-1][:, 0] - target
        loss = float(np.mean(err * err))
        delta = (2.0 / len(x)) * err[:, None]
        grads = [None] * (2 * len(self.weights))
        for i in range(last, -1, -1):
            grads[2 * i] = acts[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0.0)
        return loss, grads


def forward(net: QNetwork, s, a) -> float:
    """Scalar Q-value of state features ``s`` and action features ``a``."""
    x = np.concatenate((np.ravel(s), np.ravel(a)))
    if x.shape[0] != net.layer_sizes[0]:
        raise ValueError(f"feature length {x.shape[0]} does not match input width {net.layer_sizes[0]}")
    return float(net.predict(x[None, :])[0])


# ---------------------------------------------------------------------------
# replay


@dataclass(frozen=True)
class Experience:
    s: np.ndarray
    a_index: int
    r: float
    s_next: np.ndarray


class ReplayMemory:
    """Fixed-capacity ring buffer of transitions stored column-wise."""

    def __init__(self, capacity: int, state_dim: int = STATE_DIM):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, state_dim))
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push(self, e: Experience):
        i = self.cursor
        self.s[i] = e.s
        self.a[i] = e.a_index
        self.r[i] = e.r
        self.s_next[i] = e.s_next
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise ValueError("cannot sample from an empty replay memory")
        k = min(batch, self.size)
        return rng.choice(self.size, size=k, replace=False)

    def sample(self, batch: int, rng: np.random.Generator) -> list:
        return [self[i] for i in self.sample_indices(batch, rng)]

    def __getitem__(self, i) -> Experience:
        if not 0 <= i < self.size:
            raise IndexError(i)
        return Experience(self.s[i].copy(), int(self.a[i]), float(self.r[i]), self.s_next[i].copy())

    def chronological(self) -> list:
        """Stored experiences from oldest to newest."""
        start = self.cursor if self.size == self.capacity else 0
        return [self[(start + j) % self.capacity] for j in range(self.size)]


# ---------------------------------------------------------------------------
# policy and learning


def epsilon_schedule(t: int, total: int = 500, floor: float = 0.2) -> float:
    """``max(1 - 0.8 t / total, floor)`` for episode ``t``."""
    return max(1.0 - 0.8 * t / total, floor)


@dataclass
class TrainConfig:
    episodes: int = 500
    steps_per_episode: int = 100
    minibatch: int = 32
    learning_rate: float = 1e-3
    discount: float = 0.0
    replay_capacity: int = 20_000
    hidden: tuple = (64, 64)
    seed: int = 0
    optimizer: str = "sgd"
    target_candidates: int = 256
    qos_mask: bool = True
    reward_transform: str = "symlog"
    epsilon_floor: float = 0.2

    def __post_init__(self):
        for name in ("episodes", "steps_per_episode", "minibatch", "replay_capacity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.reward_transform not in ("none", "symlog"):
            raise ValueError(f"unknown reward transform {self.reward_transform!r}")
        self.hidden = tuple(int(h) for h in self.hidden)

    @property
    def layer_sizes(self):
        return [STATE_DIM + ACTION_DIM, *self.hidden, 1]

    def epsilon(self, episode: int) -> float:
        return epsilon_schedule(episode, self.episodes, self.epsilon_floor)


def _transform(r, kind):
    if kind == "symlog":
        return np.sign(r) * np.log1p(np.abs(r))
    return r


def select_action(net: QNetwork, s, grid: ActionGrid, epsilon: float, rng: np.random.Generator,
                  q: QosConfig | None = None, candidates=None, a_feats=None) -> int:
    """Epsilon-greedy joint index.

    Exploration is uniform over the whole grid. Exploitation takes the
    argmax of the network over ``candidates`` (default: every action); ties
    go to the lowest index.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(grid.joint_size))
    return _greedy_index(net, s, grid, q or QosConfig(), candidates, a_feats)


def _greedy_index(net, s, grid, q, candidates=None, a_feats=None):
    if a_feats is None:
        a_feats = action_features(grid, q, candidates)
    values = net.sweep(np.asarray(s, dtype=float), a_feats)
    j = int(np.argmax(values))
    return int(candidates[j]) if candidates is not None else j


def td_target(target_net: QNetwork, e: Experience, grid: ActionGrid, discount: float,
              q: QosConfig | None = None, candidates=None) -> float:
    """``r + discount * max_a' Q_target(s', a')`` over ``candidates`` (default all)."""
    if discount == 0.0:
        return float(e.r)
    q = q or QosConfig()
    values = target_net.sweep(np.asarray(e.s_next, dtype=float), action_features(grid, q, candidates))
    return float(e.r + discount * values.max())


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
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _apply(net, x, targets, learning_rate, optimizer=None):
    loss, grads = net.gradients(x, targets)
    if not math.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss!r} (max |target| = {np.max(np.abs(targets)):.3g})")
    params = net.params()
    if optimizer is None:
        for p, g in zip(params, grads):
            p -= learning_rate * g
    else:
        optimizer.step(params, grads)
    return loss


def train_step(net: QNetwork, target_net: QNetwork, batch, grid: ActionGrid, discount: float,
               learning_rate: float, q: QosConfig | None = None, optimizer=None, candidates=None) -> float:
    """One gradient step on the mean squared TD error; returns the pre-step loss.

    Plain gradient descent unless an ``optimizer`` object is passed.
    """
    if not batch:
        raise ValueError("empty minibatch")
    q = q or QosConfig()
    idx = np.array([e.a_index for e in batch])
    x = np.hstack((np.array([e.s for e in batch]), action_features(grid, q, idx)))
    targets = np.array([td_target(target_net, e, grid, discount, q, candidates) for e in batch])
    return _apply(net, x, targets, learning_rate, optimizer)


def admissible_actions(gammas, grid: ActionGrid, q: QosConfig) -> np.ndarray:
    """Joint indices meeting both SE floors, ascending.

    C1 only involves ``(p_c, p_r, theta)`` and C2 only ``(p_d, theta)``, so
    both are tabulated on their own sub-lattices and combined, instead of
    evaluating every joint action.
    """
    g_mn, g_mb, g_nb, g_nn = map(float, gammas)
    pl = grid.power_levels
    th = grid.theta_levels
    n_p, n_t = len(pl), len(th)
    snr_c = np.minimum(g_mn * pl[:, None], g_mb * pl[:, None] + g_nb * pl[None, :])
    c1 = th * np.log2(1.0 + snr_c)[:, :, None] >= q.q_c  # (i_c, i_r, i_t)
    c2 = (1.0 - 2.0 * th) * np.log2(1.0 + g_nn * pl)[:, None] >= q.q_d  # (i_d, i_t)
    cr, t1 = np.nonzero(c1.reshape(n_p * n_p, n_t))  # cr = i_c * n_p + i_r
    t2, d2 = np.nonzero(c2.T)  # grouped by theta
    cnt = np.bincount(t2, minlength=n_t)
    rep = cnt[t1]
    total = int(rep.sum())
    if total == 0:
        return np.empty(0, dtype=np.intp)
    # pair every C1 entry with each C2 entry sharing its theta
    ends = np.cumsum(rep)
    pos = np.arange(total) - np.repeat(ends - rep, rep)
    d = d2[np.repeat((np.cumsum(cnt) - cnt)[t1], rep) + pos]
    out = np.repeat(cr * n_p * n_t + t1, rep) + d * n_t
    out.sort()
    return out


def greedy_decision(net: QNetwork, gammas, grid: ActionGrid, q: QosConfig, s=None,
                    noise: NoiseModel | None = None, qos_mask: bool = True):
    """Deploy the learned policy: ``(decision, u)`` or None if QoS is not met.

    With ``qos_mask`` the argmax only ranges over actions meeting both SE
    floors (the agent can check this from its own gains); without it the
    unrestricted argmax is taken and rejected if it violates QoS.
    """
    noise = noise or NoiseModel()
    if s is None:
        gains = tuple(g * noise.noise_power_w for g in gammas)
        s = state_features(gains, grid.decision(grid.midpoint_index()), q)
    if qos_mask:
        cand = admissible_actions(gammas, grid, q)
        if len(cand) == 0:
            return None
        idx = _greedy_index(net, s, grid, q, cand)
    else:
        idx = _greedy_index(net, s, grid, q)
    d = grid.decision(idx)
    ev = evaluate_pair(*gammas, d, q)
    if not ev.feasible:
        return None
    return d, ev.u


@dataclass
class EpisodeRecord:
    episode: int
    mean_reward: float
    greedy_u: float
    epsilon: float
    loss: float


@dataclass
class TrainResult:
    net: QNetwork
    log: list = field(default_factory=list)
    final_state: np.ndarray | None = None
    greedy: tuple | None = None

    def __iter__(self):
        # allows ``net, log = train_agent(...)``
        return iter((self.net, self.log))


def train_agent(gammas, q: QosConfig, grid: ActionGrid, cfg: TrainConfig,
                noise: NoiseModel | None = None, init_net: QNetwork | None = None) -> TrainResult:
    """Train one pair's agent following the replay / target-network loop.

    Each step: epsilon-greedy action, shaped reward, store, sample a
    minibatch, one gradient step. The target network is synced at the end
    of every episode. Deterministic given ``cfg.seed``.
    """
    noise = noise or NoiseModel()
    gammas = tuple(float(g) for g in gammas)
    gains = tuple(g * noise.noise_power_w for g in gammas)
    init_rng = _rng.make_rng(cfg.seed, _rng.AGENT_INIT)
    act_rng = _rng.make_rng(cfg.seed, _rng.AGENT_EXPLORE)

    if init_net is not None:
        if init_net.layer_sizes != cfg.layer_sizes:
            raise ValueError("warm-start network has the wrong shape")
        net = init_net.copy()
    else:
        net = QNetwork.initialize(cfg.layer_sizes, init_rng)
    target = net.copy()
    opt = _Adam(net.params(), cfg.learning_rate) if cfg.optimizer == "adam" else None
    memory = ReplayMemory(min(cfg.replay_capacity, cfg.episodes * cfg.steps_per_episode))

    # the environment is static, so every action's outcome is tabulated once
    table = evaluate_grid(gammas, grid, q)
    rewards = table["reward"]
    stored_rewards = _transform(rewards, cfg.reward_transform)
    all_feats = action_features(grid, q)
    gain_feats = _affine([10.0 * math.log10(g) for g in gains], *GAIN_DB_RANGE)

    def feats_of(idx):
        return np.concatenate((gain_feats, all_feats[idx]))

    cand = admissible_actions(gammas, grid, q) if cfg.qos_mask else None
    cand_feats = all_feats[cand] if cand is not None else all_feats
    if cand is not None and len(cand) == 0:
        raise ValueError("no action meets the QoS floors; the pair should not be trained")

    n_total = grid.joint_size
    s = feats_of(grid.midpoint_index())
    log = []
    for ep in range(cfg.episodes):
        eps = cfg.epsilon(ep)
        rsum = 0.0
        lsum = 0.0
        for _ in range(cfg.steps_per_episode):
            if act_rng.random() < eps:
                a = int(act_rng.integers(n_total))
            else:
                vals = net.sweep(s, cand_feats)
                j = int(np.argmax(vals))
                a = int(cand[j]) if cand is not None else j
            r = rewards[a]
            s_next = feats_of(a)
            memory.push(Experience(s, a, stored_rewards[a], s_next))
            rsum += r

            bidx = memory.sample_indices(cfg.minibatch, act_rng)
            x = np.hstack((memory.s[bidx], all_feats[memory.a[bidx]]))
            y = memory.r[bidx]
            if cfg.discount > 0.0:
                y = y + cfg.discount * _target_max(target, memory.s_next[bidx], all_feats, cand_feats, cfg, act_rng, n_total)
            lsum += _apply(net, x, y, cfg.learning_rate, opt)
            s = s_next
        target.load_from(net)

        vals = net.sweep(s, cand_feats)
        j = int(np.argmax(vals))
        g_idx = int(cand[j]) if cand is not None else j
        greedy_u = float(table["u"][g_idx]) if table["feasible"][g_idx] else 0.0
        log.append(EpisodeRecord(ep, rsum / cfg.steps_per_episode, greedy_u, eps, lsum / cfg.steps_per_episode))

    res = TrainResult(net, log, s)
    res.greedy = greedy_decision(net, gammas, grid, q, s=s, noise=noise, qos_mask=cfg.qos_mask)
    return res


def _target_max(target, s_next, all_feats, cand_feats, cfg, gen, n_total):
    # candidate subsample: uniform draws plus the target net's greedy action
    k = min(cfg.target_candidates, n_total)
    sub = gen.choice(n_total, size=k, replace=False)
    out = np.empty(len(s_next))
    for i, sn in enumerate(s_next):
        g = int(np.argmax(target.sweep(sn, cand_feats)))
        feats = np.vstack((all_feats[sub], cand_feats[g : g + 1]))
        out[i] = target.sweep(sn, feats).max()
    return out


def episode_log_to_csv(log) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["episode", "mean_reward", "greedy_u", "epsilon", "loss"])
    for rec in log:
        w.writerow([rec.episode, repr(rec.mean_reward), repr(rec.greedy_u), repr(rec.epsilon), repr(rec.loss)])
    return buf.getvalue()


# checkpoint layout: magic, version, n_sizes, sizes..., then float64 params (all little-endian)
_MAGIC = b"CDQN"
_VERSION = 1


def save_checkpoint(net: QNetwork) -> bytes:
    sizes = net.layer_sizes
    head = _MAGIC + struct.pack("<II", _VERSION, len(sizes)) + struct.pack(f"<{len(sizes)}I", *sizes)
    return head + net.flat().astype("<f8").tobytes()


def load_checkpoint(blob: bytes) -> QNetwork:
    if blob[:4] != _MAGIC:
        raise ValueError("not a Q-network checkpoint")
    version, n = struct.unpack_from("<II", blob, 4)
    if version != _VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    sizes = struct.unpack_from(f"<{n}I", blob, 12)
    flat = np.frombuffer(blob, dtype="<f8", offset=12 + 4 * n).astype(float)
    ws, bs, pos = [], [], 0
    for fi, fo in zip(sizes, sizes[1:]):
        ws.append(flat[pos : pos + fi * fo].reshape(fi, fo))
        pos += fi * fo
        bs.append(flat[pos : pos + fo])
        pos += fo
    if pos != len(flat):
        raise ValueError("checkpoint size does not match its header")
    return QNetwork(ws, bs)
