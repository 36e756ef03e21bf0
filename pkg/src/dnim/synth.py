"""Deterministic synthetic temporal graphs for tests and benchmarks."""

from __future__ import annotations

import io

import numpy as np

from .temporal_graph import TemporalGraph, parse_edge_list


def hub_graph(
    n_nodes: int = 50,
    hub_degree: int = 40,
    t_start: int = 0,
    t_end: int = 100,
) -> TemporalGraph:
    """One dominant broadcaster plus a weak late chain.

    Node 0 sends to nodes 1..hub_degree at seconds 1..hub_degree, so
    seeding it cascades early and wide. The remaining nodes form a chain
    of late edges whose activations are clipped by the window end,
    keeping their influence small. With activity window [0, 100),
    activation duration 30 s, and certain transmission, seeding the hub
    yields (100 + 30*hub_degree) / n_nodes seconds per node while any
    other single seed stays far below that.
    """
    if hub_degree + 1 > n_nodes:
        raise ValueError("hub_degree must leave room for the chain nodes")
    lines = []
    for i in range(hub_degree):
        lines.append(f"0 {i + 1} {t_start + 1 + i}")
    chain = list(range(hub_degree + 1, n_nodes))
    late = t_end - 10
    for a, b in zip(chain, chain[1:]):
        lines.append(f"{a} {b} {late}")
        late += 1
    if len(chain) == 1:
        # a single extra node still needs an edge to enter the node set
        lines.append(f"{chain[0]} 1 {t_end - 5}")
    stream = io.StringIO("\n".join(lines) + "\n")
    return parse_edge_list(stream, t_start=t_start, t_end=t_end)


def heavy_tailed_graph(
    n_nodes: int = 400,
    n_edges: int = 4000,
    t_start: int = 0,
    t_end: int = 2_592_000,
    rng_seed: int = 7,
) -> TemporalGraph:
    """Random temporal graph with a skewed out-degree distribution.

    Sources follow a Zipf-like weighting over node rank so a few nodes
    dominate the edge stream, mimicking social-network degree skew at a
    size where Monte Carlo estimates stay cheap.
    """
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    ranks = np.arange(1, n_nodes + 1, dtype=np.float64)
    weights = 1.0 / ranks
    weights /= weights.sum()
    src = rng.choice(n_nodes, size=n_edges, p=weights)
    dst = rng.integers(0, n_nodes, size=n_edges)
    # avoid self-loops by shifting collisions to the next node
    collide = src == dst
    dst[collide] = (dst[collide] + 1) % n_nodes
    times = rng.integers(t_start, t_end, size=n_edges)
    order = np.argsort(times, kind="stable")
    lines = [f"{s} {d} {t}" for s, d, t in zip(src[order], dst[order], times[order])]
    # guarantee every node appears so ids cover the full range
    for v in range(n_nodes):
        lines.append(f"{v} {(v + 1) % n_nodes} {t_end - 1}")
    stream = io.StringIO("\n".join(lines) + "\n")
    return parse_edge_list(stream, t_start=t_start, t_end=t_end)
