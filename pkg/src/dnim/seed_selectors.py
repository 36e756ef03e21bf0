"""Non-learning seed selection baselines: lazy greedy, degree, random."""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .influence_oracle import _run_reps
from .social_sis import DiffusionParams, _seed_mask
from .temporal_graph import TemporalGraph


def degree_top_k(g: TemporalGraph, k: int) -> list[int]:
    """Top-k nodes by out-degree over the whole edge list, ties to lower id."""
    _check_k(g, k)
    deg = g.out_degrees()
    order = np.lexsort((np.arange(g.n_nodes), -deg))
    return [int(v) for v in order[:k]]


def random_k(g: TemporalGraph, k: int, rng_seed: int) -> list[int]:
    """Uniform sample of k nodes without replacement, deterministic per seed."""
    _check_k(g, k)
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    return sorted(int(v) for v in rng.choice(g.n_nodes, size=k, replace=False))


def greedy_lazy(
    g: TemporalGraph,
    k: int,
    p: DiffusionParams,
    reps: int,
    n_threads: int = 1,
) -> list[int]:
    """CELF-style lazy greedy seed selection.

    Every influence estimate in the selection shares the replication
    streams derived from p.rng_seed (common random numbers), so cached
    gains from earlier rounds are comparable across rounds. Gains are
    tracked as integer active-second totals summed over replications,
    which keeps comparisons and ties exact; float rounding never flips
    an ordering. Cached gains are treated as upper bounds: a node is
    selected only once its gain has been re-evaluated against the
    current seed set and still tops the queue. Gain ties break toward
    the lower node id.

    Social-SIS influence is not proven submodular, so the upper-bound
    assumption is heuristic, exactly as CELF is normally applied.
    """
    if k == 0:
        return []
    _check_k(g, k)

    def total_of(seeds: list[int]) -> int:
        totals, _ = _run_reps(g, _seed_mask(g, seeds), p, reps, 1)
        return int(totals.sum())

    def gain_of(v: int, base: list[int], base_total: int) -> int:
        return total_of(base + [v]) - base_total

    # Round 0: evaluate every candidate against the empty set.
    candidates = list(range(g.n_nodes))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            gains = list(pool.map(lambda v: gain_of(v, [], 0), candidates))
    else:
        gains = [gain_of(v, [], 0) for v in candidates]

    # Heap entries: (-gain, node, round when the gain was computed).
    heap = [(-gains[v], v, 0) for v in candidates]
    heapq.heapify(heap)

    selected: list[int] = []
    current_total = 0
    while len(selected) < k:
        while True:
            neg_gain, v, evaluated_at = heapq.heappop(heap)
            if evaluated_at == len(selected):
                selected.append(v)
                current_total += -neg_gain
                break
            fresh = gain_of(v, selected, current_total)
            heapq.heappush(heap, (-fresh, v, len(selected)))
    return selected


def _check_k(g: TemporalGraph, k: int) -> None:
    if k != int(k) or not 0 <= k <= g.n_nodes:
        raise ValueError(f"k={k} out of range for {g.n_nodes} nodes")
