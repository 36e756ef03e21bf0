"""Neural building blocks: MLP, GRU cell, temporal attention, time encoding.

All primitives take a ParameterSet plus a name prefix, so online and
target networks are plain clones of the same parameter layout. Inputs are
row-major batches: x[i] is one sample.
"""

from __future__ import annotations

import numpy as np

from .autodiff import ParameterSet, Tensor, concat, segment_softmax, segment_sum


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


# ---- MLP -------------------------------------------------------------


def mlp_init(
    ps: ParameterSet,
    name: str,
    in_dim: int,
    out_dim: int,
    rng: np.random.Generator,
    hidden: tuple[int, ...] | None = None,
) -> None:
    """Affine -> ReLU -> ... -> affine; default one hidden layer of in_dim."""
    if hidden is None:
        hidden = (in_dim,)
    dims = [in_dim, *hidden, out_dim]
    for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        ps.add(f"{name}/W{i}", glorot_uniform(rng, a, b))
        ps.add(f"{name}/b{i}", np.zeros(b))


def mlp_forward(x: Tensor, ps: ParameterSet, name: str) -> Tensor:
    if f"{name}/W0" not in ps:
        raise KeyError(f"no MLP parameters under {name!r}")
    h = x
    i = 0
    while f"{name}/W{i}" in ps:
        if h.shape[-1] != ps[f"{name}/W{i}"].shape[0]:
            raise ValueError(
                f"{name} layer {i}: input width {h.shape[-1]} != "
                f"{ps[f'{name}/W{i}'].shape[0]}"
            )
        h = h @ ps[f"{name}/W{i}"] + ps[f"{name}/b{i}"]
        i += 1
        if f"{name}/W{i}" in ps:
            h = h.relu()
    return h


# ---- GRU cell --------------------------------------------------------


def gru_init(
    ps: ParameterSet, name: str, msg_dim: int, state_dim: int, rng: np.random.Generator
) -> None:
    for gate in ("z", "r", "h"):
        ps.add(f"{name}/W_{gate}", glorot_uniform(rng, msg_dim, state_dim))
        ps.add(f"{name}/U_{gate}", glorot_uniform(rng, state_dim, state_dim))
        ps.add(f"{name}/b_{gate}", np.zeros(state_dim))


def gru_cell(m: Tensor, s_prev: Tensor, ps: ParameterSet, name: str) -> Tensor:
    """Standard GRU update: s' = (1-z)*s_prev + z*h_tilde."""
    if m.shape[-1] != ps[f"{name}/W_z"].shape[0]:
        raise ValueError(f"message width {m.shape[-1]} does not match {name}")
    if s_prev.shape[-1] != ps[f"{name}/U_z"].shape[0]:
        raise ValueError(f"state width {s_prev.shape[-1]} does not match {name}")
    z = (m @ ps[f"{name}/W_z"] + s_prev @ ps[f"{name}/U_z"] + ps[f"{name}/b_z"]).sigmoid()
    r = (m @ ps[f"{name}/W_r"] + s_prev @ ps[f"{name}/U_r"] + ps[f"{name}/b_r"]).sigmoid()
    h_tilde = (
        m @ ps[f"{name}/W_h"] + (r * s_prev) @ ps[f"{name}/U_h"] + ps[f"{name}/b_h"]
    ).tanh()
    return (1.0 - z) * s_prev + z * h_tilde


# ---- multi-head attention --------------------------------------------


def attention_init(
    ps: ParameterSet, name: str, key_dim: int, out_dim: int, rng: np.random.Generator
) -> None:
    ps.add(f"{name}/Wo", glorot_uniform(rng, key_dim, out_dim))
    ps.add(f"{name}/bo", np.zeros(out_dim))


def segment_attention(
    queries: Tensor,
    keys: Tensor,
    vals: Tensor,
    segment_ids: np.ndarray,
    n_heads: int,
    ps: ParameterSet,
    name: str,
) -> Tensor:
    """Scaled dot-product attention, one query per segment.

    queries: (S, D); keys/vals: (E, D) with segment_ids mapping each row
    to its query. Heads are direct width-D/n_heads splits of the inputs;
    the concatenated head outputs go through one linear projection.
    Returns (S, out_dim). Segments without rows get a zero attention
    output (only the projection bias reaches them).
    """
    n_rows, width = keys.shape
    n_segments = queries.shape[0]
    if n_rows == 0:
        raise ValueError("empty key set")
    if keys.shape != vals.shape or queries.shape[-1] != width:
        raise ValueError("query/key/value widths differ")
    if width % n_heads:
        raise ValueError(f"width {width} not divisible by {n_heads} heads")
    d_head = width // n_heads

    q = queries.reshape(n_segments, n_heads, d_head)
    k = keys.reshape(n_rows, n_heads, d_head)
    v = vals.reshape(n_rows, n_heads, d_head)

    scores = (q[segment_ids] * k).sum(axis=2) * (1.0 / np.sqrt(d_head))
    attn = segment_softmax(scores, segment_ids, n_segments)
    mixed = segment_sum(attn.reshape(n_rows, n_heads, 1) * v, segment_ids, n_segments)
    return mixed.reshape(n_segments, width) @ ps[f"{name}/Wo"] + ps[f"{name}/bo"]


def multi_head_attention(
    q: Tensor, keys: Tensor, vals: Tensor, n_heads: int, ps: ParameterSet, name: str
) -> Tensor:
    """Single-query attention over one neighborhood; returns (out_dim,)."""
    queries = q.reshape(1, -1)
    seg = np.zeros(keys.shape[0], dtype=np.int64)
    return segment_attention(queries, keys, vals, seg, n_heads, ps, name).reshape(-1)


# ---- time encoding ---------------------------------------------------


def time_encode_init(ps: ParameterSet, name: str, dim: int) -> None:
    # frequencies log-spaced over [1, 1e3]; phases start at zero
    ps.add(f"{name}/omega", np.logspace(0.0, 3.0, dim))
    ps.add(f"{name}/b", np.zeros(dim))


def time_encode(t, ps: ParameterSet, name: str) -> Tensor:
    """phi(t) = cos(omega*t + b) for already-normalized times.

    t: scalar or (B,) tensor/array; returns (B, dim) with B=1 for scalars.
    """
    t = t if isinstance(t, Tensor) else Tensor(np.atleast_1d(np.float64(t)))
    return (t.reshape(-1, 1) * ps[f"{name}/omega"] + ps[f"{name}/b"]).cos()
