"""Social-SIS diffusion: non-progressive activation over a temporal graph.

Seeds are pinned active for the whole horizon. Each edge (s, v, t) whose
source is active at t succeeds with probability mu and grants the target
t_act seconds of activity, appended after any activity it already has
(start = max(t, end of the target's last interval), clipped at t_end).
Intervals are half-open [start, end): a node whose interval ends at t is
not active at t.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from . import _kernels
from .temporal_graph import TemporalGraph

MONTH_SECONDS = 2_592_000  # 30 days; used for "1 month" activation presets


@dataclass(frozen=True)
class DiffusionParams:
    mu: float
    t_act: int
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must be in [0, 1], got {self.mu}")
        if self.t_act <= 0:
            raise ValueError(f"t_act must be positive, got {self.t_act}")


@dataclass(frozen=True)
class DiffusionStats:
    attempts: int
    successes: int
    successes_on_active: int

    def __post_init__(self):
        if not 0 <= self.successes_on_active <= self.successes <= self.attempts:
            raise ValueError(f"inconsistent stats: {self}")

    def __add__(self, other: "DiffusionStats") -> "DiffusionStats":
        return DiffusionStats(
            self.attempts + other.attempts,
            self.successes + other.successes,
            self.successes_on_active + other.successes_on_active,
        )


class ActivationLog:
    """Per-node active intervals from one diffusion run.

    Stored as parallel (node, start, end) arrays grouped by node and
    time-sorted within each node. Seed nodes carry exactly the single
    interval [t_start, t_end).
    """

    def __init__(self, n_nodes: int, node: np.ndarray, start: np.ndarray, end: np.ndarray):
        order = np.argsort(node, kind="stable")
        self.n_nodes = int(n_nodes)
        self.node = np.asarray(node, dtype=np.int64)[order]
        self.start = np.asarray(start, dtype=np.int64)[order]
        self.end = np.asarray(end, dtype=np.int64)[order]

    @classmethod
    def empty(cls, n_nodes: int) -> "ActivationLog":
        z = np.empty(0, dtype=np.int64)
        return cls(n_nodes, z, z, z)

    def __len__(self) -> int:
        return len(self.node)

    def intervals_for(self, v: int) -> list[tuple[int, int]]:
        lo = np.searchsorted(self.node, v, side="left")
        hi = np.searchsorted(self.node, v, side="right")
        return [(int(s), int(e)) for s, e in zip(self.start[lo:hi], self.end[lo:hi])]

    def total_active_time(self) -> int:
        return int(np.sum(self.end - self.start))

    def active_node_count(self) -> int:
        return len(np.unique(self.node))

    def validate(self, t_start: int, t_end: int) -> None:
        """Interval discipline: sorted, disjoint, non-empty, inside range."""
        if np.any(self.start >= self.end):
            raise AssertionError("empty or inverted interval in log")
        if len(self) and (self.start.min() < t_start or self.end.max() > t_end):
            raise AssertionError("interval outside [t_start, t_end)")
        # within each node, starts ascend and do not overlap previous ends
        same = self.node[1:] == self.node[:-1]
        if np.any(same & (self.start[1:] < self.end[:-1])):
            raise AssertionError("overlapping intervals for a node")

    def to_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream)
        writer.writerow(["node", "start", "end"])
        for v, s, e in zip(self.node, self.start, self.end):
            writer.writerow([int(v), int(s), int(e)])


def _seed_mask(g: TemporalGraph, seeds: Iterable[int]) -> np.ndarray:
    mask = np.zeros(g.n_nodes, dtype=np.uint8)
    for v in seeds:
        v = int(v)
        if not 0 <= v < g.n_nodes:
            raise IndexError(f"seed id {v} out of range [0, {g.n_nodes})")
        mask[v] = 1
    return mask


def _kernel_args(g: TemporalGraph, mask: np.ndarray, p: DiffusionParams, rep: int):
    rep_seed = np.uint64(_kernels.derive_seed(p.rng_seed, rep))
    return (
        g.src,
        g.dst,
        g.ts,
        mask,
        np.int64(g.t_start),
        np.int64(g.t_end),
        np.float64(p.mu),
        np.int64(p.t_act),
        rep_seed,
    )


def run_diffusion(
    g: TemporalGraph, seeds: Iterable[int], p: DiffusionParams, rep: int = 0
) -> tuple[ActivationLog, DiffusionStats]:
    """Run one replication and materialize the full activation log.

    rep selects the replication stream: replication r of a Monte Carlo
    estimate with the same params reproduces run_diffusion(..., rep=r)
    exactly. An empty seed set yields an empty log.
    """
    mask = _seed_mask(g, seeds)
    n_seeds = int(mask.sum())
    if n_seeds == 0:
        return ActivationLog.empty(g.n_nodes), DiffusionStats(0, 0, 0)

    m = g.n_edges
    out_node = np.empty(m, dtype=np.int64)
    out_start = np.empty(m, dtype=np.int64)
    out_end = np.empty(m, dtype=np.int64)
    count, attempts, successes, on_active = _kernels.sim_log(
        *_kernel_args(g, mask, p, rep), out_node, out_start, out_end
    )
    count = int(count)

    seed_nodes = np.flatnonzero(mask).astype(np.int64)
    node = np.concatenate([seed_nodes, out_node[:count]])
    start = np.concatenate(
        [np.full(n_seeds, g.t_start, dtype=np.int64), out_start[:count]]
    )
    end = np.concatenate([np.full(n_seeds, g.t_end, dtype=np.int64), out_end[:count]])
    log = ActivationLog(g.n_nodes, node, start, end)
    log.validate(g.t_start, g.t_end)
    stats = DiffusionStats(int(attempts), int(successes), int(on_active))
    return log, stats


def run_diffusion_totals(
    g: TemporalGraph, mask: np.ndarray, p: DiffusionParams, rep: int
) -> tuple[int, DiffusionStats]:
    """Fast path: total active node-seconds without building the log."""
    n_seeds = int(mask.sum())
    if n_seeds == 0:
        return 0, DiffusionStats(0, 0, 0)
    extra, attempts, successes, on_active = _kernels.sim_totals(
        *_kernel_args(g, mask, p, rep)
    )
    total = n_seeds * (g.t_end - g.t_start) + int(extra)
    return total, DiffusionStats(int(attempts), int(successes), int(on_active))


def influence(log: ActivationLog, n_nodes: int) -> float:
    """Average active seconds per node: sum of interval lengths over N."""
    return log.total_active_time() / n_nodes


def fraction_active_activations(stats: DiffusionStats) -> float:
    """Percentage of successful activations whose target was already active."""
    if stats.successes == 0:
        return 0.0
    return 100.0 * stats.successes_on_active / stats.successes


def window_activity(
    log: ActivationLog, n_windows: int, t_start: int, t_end: int
) -> np.ndarray:
    """Distinct active nodes per window, splitting [t_start, t_end) evenly.

    A node counts in window w when any of its intervals intersects w.
    """
    if n_windows < 1:
        raise ValueError("n_windows must be >= 1")
    span = float(t_end - t_start)
    bounds = t_start + span * np.arange(n_windows + 1) / n_windows
    bounds[0], bounds[-1] = float(t_start), float(t_end)
    hit = np.zeros((n_windows, log.n_nodes), dtype=bool)
    # window w spans [bounds[w], bounds[w+1]); interval [s, e) intersects
    # it when s < bounds[w+1] and e > bounds[w]
    lo = np.searchsorted(bounds[1:], log.start, side="right")
    hi = np.searchsorted(bounds[:-1], log.end, side="left") - 1
    lo = np.clip(lo, 0, n_windows - 1)
    hi = np.clip(hi, 0, n_windows - 1)
    for v, a, b in zip(log.node, lo, hi):
        hit[a : b + 1, v] = True
    return hit.sum(axis=1).astype(np.int64)
