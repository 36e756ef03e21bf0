"""Dynamic node embeddings: batched memory rollout plus temporal attention.

The rollout walks the edge stream in fixed-size batches. Every edge
deposits a message at both endpoints, built from the memories as they
stood BEFORE the batch; per node per batch only the newest message
survives (later edge index wins ties) and feeds one GRU update. The
embedding stage then attends, for each node, over the final memories of
everything it ever touched, with a cosine encoding of the (normalized)
edge times.

Everything is differentiable: with a loss downstream of the embeddings,
backward reaches the GRU, attention, MLP, and time-encoding parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import ParameterSet, Tensor, concat, segment_sum
from .nn import (
    attention_init,
    gru_cell,
    gru_init,
    mlp_forward,
    mlp_init,
    segment_attention,
    time_encode,
    time_encode_init,
)
from .temporal_graph import TemporalGraph


@dataclass
class EmbeddingConfig:
    dim: int = 64
    n_layers: int = 1
    n_heads: int = 2
    batch_size: int = 200
    neighbor_cap: int | None = None  # most recent entries kept; None = all
    time_dim: int = 64
    raw_message_time: bool = False  # True: plain normalized dt scalar

    def __post_init__(self):
        if min(self.dim, self.n_heads, self.batch_size, self.time_dim) < 1:
            raise ValueError("embedding config values must be positive")
        if self.n_layers < 0:
            raise ValueError("n_layers must be >= 0")
        if self.neighbor_cap is not None and self.neighbor_cap < 1:
            raise ValueError("neighbor_cap must be positive or None")

    @property
    def message_dim(self) -> int:
        return 2 * self.dim + (1 if self.raw_message_time else self.time_dim)

    @property
    def key_dim(self) -> int:
        return self.dim + self.time_dim


@dataclass
class NodeMemoryState:
    memory: Tensor  # (N, dim) final memories
    last_update: np.ndarray  # (N,) seconds, T_s where never updated


def init_embedding_params(
    ps: ParameterSet, cfg: EmbeddingConfig, rng: np.random.Generator
) -> None:
    time_encode_init(ps, "time", cfg.time_dim)
    gru_init(ps, "memory_gru", cfg.message_dim, cfg.dim, rng)
    for layer in range(cfg.n_layers):
        attention_init(ps, f"attn{layer}", cfg.key_dim, cfg.dim, rng)
        mlp_init(ps, f"emb{layer}", 2 * cfg.dim, cfg.dim, rng)


def _normalize(times: np.ndarray, g: TemporalGraph) -> np.ndarray:
    span = max(g.duration, 1)
    return (np.asarray(times, dtype=np.float64) - g.t_start) / span


def rollout_memory(
    g: TemporalGraph, ps: ParameterSet, cfg: EmbeddingConfig
) -> NodeMemoryState:
    n = g.n_nodes
    zero_row = Tensor(np.zeros((1, cfg.dim)))
    rows: list[Tensor] = [zero_row] * n
    last_update = np.full(n, g.t_start, dtype=np.int64)
    span = max(g.duration, 1)

    for lo in range(0, g.n_edges, cfg.batch_size):
        hi = min(lo + cfg.batch_size, g.n_edges)
        src, dst, ts = g.src[lo:hi], g.dst[lo:hi], g.ts[lo:hi]
        endpoint = np.concatenate([src, dst])
        other = np.concatenate([dst, src])
        times = np.concatenate([ts, ts])
        edge_ix = np.tile(np.arange(hi - lo), 2)

        # newest message per endpoint; later edge index breaks time ties
        order = np.lexsort((edge_ix, times, endpoint))
        endpoint, other, times = endpoint[order], other[order], times[order]
        is_last = np.ones(len(endpoint), dtype=bool)
        is_last[:-1] = endpoint[1:] != endpoint[:-1]
        upd_nodes = endpoint[is_last]
        upd_other = other[is_last]
        upd_times = times[is_last]

        self_mem = concat([rows[v] for v in upd_nodes], axis=0)
        other_mem = concat([rows[v] for v in upd_other], axis=0)
        dt = (upd_times - last_update[upd_nodes]) / span
        if cfg.raw_message_time:
            time_part = Tensor(dt.reshape(-1, 1))
        else:
            time_part = time_encode(Tensor(dt), ps, "time")
        messages = concat([self_mem, other_mem, time_part], axis=1)
        updated = gru_cell(messages, self_mem, ps, "memory_gru")
        for i, v in enumerate(upd_nodes):
            rows[v] = updated[i : i + 1]
        last_update[upd_nodes] = upd_times

    return NodeMemoryState(concat(rows, axis=0), last_update)


def _neighbor_entries(
    g: TemporalGraph, cap: int | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flat (node, neighbor, time) triples sorted by node then time."""
    node = np.concatenate([g.src, g.dst])
    nbr = np.concatenate([g.dst, g.src])
    times = np.concatenate([g.ts, g.ts])
    edge_ix = np.tile(np.arange(g.n_edges), 2)
    order = np.lexsort((edge_ix, times, node))
    node, nbr, times = node[order], nbr[order], times[order]
    if cap is not None and len(node):
        # keep each node's most recent cap entries
        starts = np.searchsorted(node, np.arange(g.n_nodes), side="left")
        ends = np.searchsorted(node, np.arange(g.n_nodes), side="right")
        keep = np.zeros(len(node), dtype=bool)
        for s, e in zip(starts, ends):
            keep[max(s, e - cap) : e] = True
        node, nbr, times = node[keep], nbr[keep], times[keep]
    return node, nbr, times


def compute_embeddings(
    g: TemporalGraph, mem: NodeMemoryState, ps: ParameterSet, cfg: EmbeddingConfig
) -> Tensor:
    """One embedding per node, shape (N, dim); L=0 returns the memory."""
    n = g.n_nodes
    h = mem.memory
    if cfg.n_layers == 0:
        return h
    node, nbr, times = _neighbor_entries(g, cfg.neighbor_cap)
    t_norm = _normalize(times, g)
    phi_edges = time_encode(Tensor(t_norm), ps, "time")
    phi_zero = time_encode(Tensor(np.zeros(n)), ps, "time")
    has_entries = len(node) > 0
    connected = np.unique(node) if has_entries else np.empty(0, dtype=np.int64)
    compact = np.searchsorted(connected, node) if has_entries else node

    for layer in range(cfg.n_layers):
        if has_entries:
            queries = concat([h[connected], phi_zero[connected]], axis=1)
            keys = concat([h[nbr], phi_edges], axis=1)
            attended = segment_attention(
                queries, keys, keys, compact, cfg.n_heads, ps, f"attn{layer}"
            )
            h_tilde = segment_sum(attended, connected, n)
        else:
            h_tilde = Tensor(np.zeros((n, cfg.dim)))
        h = mlp_forward(concat([h, h_tilde], axis=1), ps, f"emb{layer}")
    return h


def embed_graph(
    g: TemporalGraph, ps: ParameterSet, cfg: EmbeddingConfig
) -> Tensor:
    """Rollout plus embedding in one call."""
    return compute_embeddings(g, rollout_memory(g, ps, cfg), ps, cfg)
