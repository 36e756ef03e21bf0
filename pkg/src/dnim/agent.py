"""Seed selection as reinforcement learning: Q-network over embeddings,
replay buffer, and double-Q training loop.

The Q-value of adding node a to seed set S is structurally additive:
with M3 = sigmoid(MLP1(z) @ MLP2(z).T) and c its column sums,
Q(S, a) = sum of c over S plus c[a]. Action selection therefore only
needs the c vector, which is cached per episode under frozen parameters;
gradient steps recompute embeddings so the loss reaches the GRU,
attention, and time-encoding parameters.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import SimpleNamespace
from typing import TextIO

import numpy as np

from ._kernels import derive_seed
from .autodiff import ParameterSet, Tensor, no_grad
from .influence_oracle import DEFAULT_REWARD_REPS, estimate_influence
from .nn import mlp_forward, mlp_init
from .social_sis import DiffusionParams
from .temporal_graph import TemporalGraph
from .tgn import EmbeddingConfig, embed_graph, init_embedding_params

# stream tags for deriving independent RNG streams from one base seed
_TAG_INIT = 1
_TAG_ACTION = 2
_TAG_SAMPLE = 3
_TAG_REWARD = 4


@dataclass
class AgentConfig:
    k: int
    episodes: int = 1000
    gamma: float = 0.95
    learning_rate: float = 0.001
    batch_size: int = 16
    target_sync: int = 20
    epsilon_start: float = 1.0
    epsilon_min: float = 0.2
    epsilon_decay: float = 0.98
    reward_threshold: float = 0.0
    buffer_capacity: int = 10_000
    reward_reps: int = DEFAULT_REWARD_REPS
    rng_seed: int = 0
    n_threads: int = 1
    use_adam: bool = False
    zz_ablation: bool = False  # M3 = sigmoid(z @ z.T), no estimator MLPs

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 < self.epsilon_min <= 1.0:
            raise ValueError("epsilon_min must lie in (0, 1]")
        if self.episodes < 0 or self.batch_size < 1 or self.buffer_capacity < 1:
            raise ValueError("episodes, batch_size, buffer_capacity out of range")
        if self.target_sync < 1:
            raise ValueError("target_sync must be >= 1")


def empty_state(n_nodes: int) -> np.ndarray:
    return np.zeros(n_nodes, dtype=np.uint8)


def state_with(state: np.ndarray, action: int) -> np.ndarray:
    if state[action]:
        raise ValueError(f"node {action} already in the seed set")
    out = state.copy()
    out[action] = 1
    return out


def state_nodes(state: np.ndarray) -> list[int]:
    return [int(v) for v in np.flatnonzero(state)]


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool

    def __post_init__(self):
        if self.state[self.action]:
            raise ValueError("action already present in state")
        expected = self.state.copy()
        expected[self.action] = 1
        if not np.array_equal(expected, self.next_state):
            raise ValueError("next_state must equal state plus the action bit")


class ReplayBuffer:
    """FIFO ring of transitions with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def add(self, t: Transition) -> None:
        self._items.append(t)

    def sample(self, rng: np.random.Generator, batch_size: int) -> list[Transition]:
        if batch_size > len(self._items):
            raise ValueError("not enough transitions to sample")
        picks = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[int(i)] for i in picks]

    def snapshot(self) -> list[Transition]:
        return list(self._items)


# ---- Q computation ---------------------------------------------------


def init_q_params(
    ps: ParameterSet, dim: int, rng: np.random.Generator, ablation: bool = False
) -> None:
    if not ablation:
        mlp_init(ps, "q_mlp1", dim, dim, rng)
        mlp_init(ps, "q_mlp2", dim, dim, rng)


def q_columns(ps: ParameterSet, z: Tensor, cfg: AgentConfig) -> Tensor:
    """Column sums c of M3 = sigmoid(M1 @ M2.T); Q(S,a) = sum c over S+{a}."""
    if cfg.zz_ablation:
        m3 = (z @ z.T).sigmoid()
    else:
        m1 = mlp_forward(z, ps, "q_mlp1")
        m2 = mlp_forward(z, ps, "q_mlp2")
        m3 = (m1 @ m2.T).sigmoid()
    return m3.sum(axis=0)


def q_values(
    ps: ParameterSet, z: Tensor, state: np.ndarray, cfg: AgentConfig
) -> tuple[np.ndarray, Tensor]:
    """Q(state, a) for every candidate a not in state.

    Returns (candidate node ids ascending, Q tensor aligned with them).
    """
    candidates = np.flatnonzero(state == 0)
    if len(candidates) == 0:
        raise ValueError("state is full: no candidate actions")
    c = q_columns(ps, z, cfg)
    base = (c * state.astype(np.float64)).sum()
    return candidates, c[candidates] + base


def select_action(
    q: np.ndarray, candidates: np.ndarray, epsilon: float, rng: np.random.Generator
) -> int:
    """Epsilon-greedy over candidates; greedy ties go to the lowest id."""
    if len(candidates) == 0:
        raise ValueError("no candidate actions")
    if rng.random() < epsilon:
        return int(candidates[rng.integers(len(candidates))])
    return int(candidates[int(np.argmax(q))])


def compute_loss(
    batch: list[Transition],
    ps: ParameterSet,
    target_ps: ParameterSet,
    gamma: float,
    z: Tensor,
    z_target: Tensor,
    cfg: AgentConfig,
    target_columns: np.ndarray | None = None,
) -> Tensor:
    """Mean squared double-Q error over a batch; targets carry no gradient.

    target = r for terminal transitions, else
    r + gamma * Q_target(s', argmax_a Q_online(s', a)).
    """
    if not batch:
        raise ValueError("empty batch")
    n = z.shape[0]
    c = q_columns(ps, z, cfg)
    if target_columns is None:
        with no_grad():
            target_columns = q_columns(target_ps, z_target, cfg).data
    c_online = c.data

    rows = np.zeros((len(batch), n))
    targets = np.zeros(len(batch))
    for i, tr in enumerate(batch):
        rows[i] = tr.state
        rows[i, tr.action] = 1.0
        if tr.terminal or gamma == 0.0:
            targets[i] = tr.reward
        else:
            cand = np.flatnonzero(tr.next_state == 0)
            best = cand[int(np.argmax(c_online[cand]))]
            mask = tr.next_state.astype(np.float64)
            mask[best] = 1.0
            targets[i] = tr.reward + gamma * float(mask @ target_columns)

    predicted = Tensor(rows) @ c.reshape(n, 1)
    return ((Tensor(targets.reshape(-1, 1)) - predicted) ** 2).mean()


# ---- training loop ---------------------------------------------------


@dataclass
class EpisodeRecord:
    episode: int
    episode_return: float
    loss: float  # nan when no gradient step ran
    epsilon: float


@dataclass
class TrainResult:
    params: ParameterSet
    log: list[EpisodeRecord] = field(default_factory=list)

    def log_to_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream)
        writer.writerow(["episode", "return", "loss", "epsilon"])
        for rec in self.log:
            writer.writerow(
                [rec.episode, repr(rec.episode_return), repr(rec.loss),
                 repr(rec.epsilon)]
            )


class _AdamState:
    """Adaptive-moment update, config-gated off by default."""

    def __init__(self, ps: ParameterSet, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = {name: np.zeros_like(t.data) for name, t in ps.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in ps.items()}
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def step(self, ps: ParameterSet, lr: float) -> None:
        self.t += 1
        for name, tensor in ps.items():
            if tensor.grad is None:
                continue
            g = tensor.grad
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1**self.t)
            v_hat = self.v[name] / (1 - self.beta2**self.t)
            tensor.data -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


def init_agent_params(
    cfg: AgentConfig, emb_cfg: EmbeddingConfig, rng: np.random.Generator
) -> ParameterSet:
    ps = ParameterSet()
    init_embedding_params(ps, emb_cfg, rng)
    init_q_params(ps, emb_cfg.dim, rng, ablation=cfg.zz_ablation)
    return ps


def train(
    g: TemporalGraph,
    p: DiffusionParams,
    cfg: AgentConfig,
    emb_cfg: EmbeddingConfig | None = None,
    on_episode=None,
) -> TrainResult:
    """Algorithm: per episode build a k-seed set with epsilon-greedy steps
    rewarded by common-random-number marginal gains, then take one
    gradient step on a replay minibatch."""
    if cfg.k > g.n_nodes:
        raise ValueError(f"k={cfg.k} exceeds {g.n_nodes} nodes")
    emb_cfg = emb_cfg or EmbeddingConfig()

    init_rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.rng_seed, _TAG_INIT)))
    action_rng = np.random.Generator(
        np.random.PCG64(derive_seed(cfg.rng_seed, _TAG_ACTION))
    )
    sample_rng = np.random.Generator(
        np.random.PCG64(derive_seed(cfg.rng_seed, _TAG_SAMPLE))
    )

    ps = init_agent_params(cfg, emb_cfg, init_rng)
    target_ps = ps.clone()
    optimizer = _AdamState(ps) if cfg.use_adam else None
    buffer = ReplayBuffer(cfg.buffer_capacity)
    result = TrainResult(params=ps)
    target_columns: np.ndarray | None = None

    for episode in range(cfg.episodes):
        # closed form keeps the schedule exact: after m episodes the
        # per-episode decay has been applied m times
        epsilon = max(cfg.epsilon_min, cfg.epsilon_start * cfg.epsilon_decay**episode)
        if episode % cfg.target_sync == 0:
            target_ps.copy_from(ps)
            target_columns = None  # recompute lazily below

        # frozen caches for this episode
        with no_grad():
            z_frozen = embed_graph(g, ps, emb_cfg)
            c_frozen = q_columns(ps, z_frozen, cfg).data
            if target_columns is None:
                z_target = embed_graph(g, target_ps, emb_cfg)
                target_columns = q_columns(target_ps, z_target, cfg).data

        reward_params = replace(
            p, rng_seed=derive_seed(cfg.rng_seed, _TAG_REWARD, episode)
        )
        state = empty_state(g.n_nodes)
        seeds: list[int] = []
        base_mean = 0.0
        episode_return = 0.0
        for step in range(cfg.k):
            candidates = np.flatnonzero(state == 0)
            action = select_action(
                c_frozen[candidates], candidates, epsilon, action_rng
            )
            seeds.append(action)
            new_mean = estimate_influence(
                g, seeds, reward_params, cfg.reward_reps, n_threads=cfg.n_threads
            ).mean
            reward = new_mean - base_mean
            base_mean = new_mean
            episode_return += reward
            next_state = state_with(state, action)
            if reward > cfg.reward_threshold:
                buffer.add(
                    Transition(state, action, reward, next_state,
                               terminal=step == cfg.k - 1)
                )
            state = next_state

        loss_value = math.nan
        if len(buffer) >= cfg.batch_size:
            batch = buffer.sample(sample_rng, cfg.batch_size)
            ps.zero_grad()
            z = embed_graph(g, ps, emb_cfg)
            loss = compute_loss(
                batch, ps, target_ps, cfg.gamma, z, z, cfg,
                target_columns=target_columns,
            )
            loss.backward()
            if optimizer is not None:
                optimizer.step(ps, cfg.learning_rate)
            else:
                ps.sgd_step(cfg.learning_rate)
            loss_value = float(loss.data)

        result.log.append(
            EpisodeRecord(episode, episode_return, loss_value, epsilon)
        )
        if on_episode is not None:
            on_episode(
                SimpleNamespace(
                    episode=episode,
                    params=ps,
                    target_params=target_ps,
                    buffer=buffer,
                    epsilon=epsilon,
                    seeds=list(seeds),
                    episode_return=episode_return,
                )
            )

    return result


def select_seeds_by_policy(
    g: TemporalGraph,
    ps: ParameterSet,
    k: int,
    cfg: AgentConfig,
    emb_cfg: EmbeddingConfig | None = None,
) -> list[int]:
    """Greedy (epsilon=0) rollout: k argmax-Q selections, ties to lower id."""
    if not 0 <= k <= g.n_nodes:
        raise ValueError(f"k={k} out of range for {g.n_nodes} nodes")
    emb_cfg = emb_cfg or EmbeddingConfig()
    with no_grad():
        z = embed_graph(g, ps, emb_cfg)
        c = q_columns(ps, z, cfg).data
    state = empty_state(g.n_nodes)
    seeds: list[int] = []
    for _ in range(k):
        candidates = np.flatnonzero(state == 0)
        action = int(candidates[int(np.argmax(c[candidates]))])
        seeds.append(action)
        state[action] = 1
    return seeds


# ---- checkpoints -----------------------------------------------------


def save_checkpoint(path, ps: ParameterSet, meta: dict) -> None:
    """Parameters in npz plus a JSON manifest carrying config metadata."""
    import json

    path = Path(path)
    ps.save(path)
    manifest_path = path.with_suffix(path.suffix + ".json")
    manifest = json.loads(manifest_path.read_text())
    manifest["meta"] = meta
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")


def load_checkpoint(path) -> tuple[ParameterSet, dict]:
    import json

    path = Path(path)
    ps = ParameterSet.load(path)
    manifest_path = path.with_suffix(path.suffix + ".json")
    meta = {}
    if manifest_path.exists():
        meta = json.loads(manifest_path.read_text()).get("meta", {})
    return ps, meta
