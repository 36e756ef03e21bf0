"""Continuous-time temporal graph: edge-list ingestion and neighbor lookup.

A graph is a timestamp-sorted stream of directed edges over a dense node
index. Original dataset ids (arbitrary 64-bit ints) are remapped to
[0, N) in order of first appearance in the time-sorted stream, so that an
id's rank roughly tracks how early the node enters the network.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

CACHE_FORMAT_VERSION = 1


class EdgeListError(ValueError):
    """Malformed or empty edge-list input. Carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class TemporalGraph:
    """Immutable continuous-time graph; safe to share across threads.

    src/dst/ts are parallel int64 arrays sorted by ts (stable with respect
    to input order on ties). orig_ids maps dense id -> original dataset id.
    """

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    ts: np.ndarray
    t_start: int
    t_end: int
    orig_ids: np.ndarray
    _incidence: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("graph must have at least one node")
        if self.t_start > self.t_end:
            raise ValueError("t_start must not exceed t_end")
        if len(self.ts) and np.any(np.diff(self.ts) < 0):
            raise ValueError("edges must be sorted by timestamp")
        for arr in (self.src, self.dst, self.ts, self.orig_ids):
            arr.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return len(self.ts)

    @property
    def duration(self) -> int:
        return self.t_end - self.t_start

    @classmethod
    def from_edges(
        cls,
        n_nodes: int,
        edges: Iterable[tuple[int, int, int]],
        t_start: int | None = None,
        t_end: int | None = None,
        orig_ids: np.ndarray | None = None,
    ) -> "TemporalGraph":
        """Build a graph from (src, dst, t) triples with dense ids."""
        triples = list(edges)
        src = np.array([e[0] for e in triples], dtype=np.int64)
        dst = np.array([e[1] for e in triples], dtype=np.int64)
        ts = np.array([e[2] for e in triples], dtype=np.int64)
        order = np.argsort(ts, kind="stable")
        src, dst, ts = src[order], dst[order], ts[order]
        if len(ts):
            if np.min(src) < 0 or np.min(dst) < 0:
                raise ValueError("negative node id")
            if max(int(np.max(src)), int(np.max(dst))) >= n_nodes:
                raise ValueError("edge references node id >= n_nodes")
        if t_start is None:
            t_start = int(ts[0]) if len(ts) else 0
        if t_end is None:
            t_end = int(ts[-1]) if len(ts) else int(t_start)
        if orig_ids is None:
            orig_ids = np.arange(n_nodes, dtype=np.int64)
        return cls(
            n_nodes=int(n_nodes),
            src=src,
            dst=dst,
            ts=ts,
            t_start=int(t_start),
            t_end=int(t_end),
            orig_ids=np.asarray(orig_ids, dtype=np.int64),
        )

    def temporal_neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """All (neighbor, timestamp) pairs incident to v, time-ascending.

        Direction is ignored and one entry is kept per edge, so repeated
        contacts appear repeatedly.
        """
        if not 0 <= v < self.n_nodes:
            raise IndexError(f"node id {v} out of range [0, {self.n_nodes})")
        nodes, times, offsets = self._incidence_csr()
        lo, hi = offsets[v], offsets[v + 1]
        return nodes[lo:hi], times[lo:hi]

    def _incidence_csr(self):
        """CSR of undirected incidence, per-node entries in edge order."""
        cached = self._incidence.get("csr")
        if cached is not None:
            return cached
        m = self.n_edges
        deg = np.bincount(self.src, minlength=self.n_nodes) + np.bincount(
            self.dst, minlength=self.n_nodes
        )
        offsets = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(deg, out=offsets[1:])
        nodes = np.empty(2 * m, dtype=np.int64)
        times = np.empty(2 * m, dtype=np.int64)
        cursor = offsets[:-1].copy()
        for i in range(m):
            s, d, t = self.src[i], self.dst[i], self.ts[i]
            p = cursor[s]
            nodes[p], times[p] = d, t
            cursor[s] = p + 1
            p = cursor[d]
            nodes[p], times[p] = s, t
            cursor[d] = p + 1
        for arr in (nodes, times, offsets):
            arr.setflags(write=False)
        self._incidence["csr"] = (nodes, times, offsets)
        return self._incidence["csr"]

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n_nodes)

    def to_original(self, dense_ids: Iterable[int]) -> list[int]:
        return [int(self.orig_ids[v]) for v in dense_ids]

    def from_original(self, original_ids: Iterable[int]) -> list[int]:
        lookup = self._incidence.get("orig_lookup")
        if lookup is None:
            lookup = {int(o): i for i, o in enumerate(self.orig_ids)}
            self._incidence["orig_lookup"] = lookup
        out = []
        for o in original_ids:
            o = int(o)
            if o not in lookup:
                raise KeyError(f"unknown original node id {o}")
            out.append(lookup[o])
        return out

    def write_edge_list(self, stream: TextIO) -> None:
        write_edge_list(self, stream)

    def save_cache(self, path) -> None:
        save_cache(self, path)

    @staticmethod
    def load_cache(path) -> "TemporalGraph":
        return load_cache(path)


def _parse_timestamp(tok: str, line_no: int) -> int:
    # Accept plain ints; tolerate float literals (some exports append ".0"
    # or sub-second digits) by flooring to whole seconds.
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return int(np.floor(float(tok)))
    except ValueError:
        raise EdgeListError(f"bad timestamp {tok!r}", line_no) from None


def parse_edge_list(
    source: TextIO | Iterable[str] | str,
    delimiter: str | None = None,
    has_weight_column: bool = False,
    drop_loops: bool = False,
    dedup: bool = False,
    t_start: int | None = None,
    t_end: int | None = None,
) -> TemporalGraph:
    """Parse `src,dst[,weight],timestamp` lines into a TemporalGraph.

    delimiter None auto-detects comma vs whitespace per line. The weight
    column, when present, is validated and discarded. Blank lines and
    lines starting with '#' or '%' are skipped. drop_loops removes edges
    with src == dst; dedup removes exact (src, dst, t) repeats, keeping
    the first occurrence. Node set covers every id seen on a valid line,
    including ids only seen on dropped edges.
    """
    if isinstance(source, str):
        source = io.StringIO(source)

    n_fields = 4 if has_weight_column else 3
    raw_src: list[int] = []
    raw_dst: list[int] = []
    raw_ts: list[int] = []
    dropped_ids: list[int] = []
    all_ts_min: int | None = None
    all_ts_max: int | None = None
    seen_triples: set[tuple[int, int, int]] = set()
    any_valid_line = False

    for line_no, line in enumerate(source, start=1):
        line = line.strip()
        if not line or line[0] in "#%":
            continue
        fields = line.split(delimiter) if delimiter else (
            line.split(",") if "," in line else line.split()
        )
        fields = [f.strip() for f in fields if f.strip() != ""]
        if len(fields) != n_fields:
            raise EdgeListError(
                f"expected {n_fields} fields, got {len(fields)}", line_no
            )
        try:
            s = int(fields[0])
            d = int(fields[1])
        except ValueError:
            raise EdgeListError(f"bad node id in {fields[:2]}", line_no) from None
        if has_weight_column:
            try:
                float(fields[2])
            except ValueError:
                raise EdgeListError(f"bad weight {fields[2]!r}", line_no) from None
        t = _parse_timestamp(fields[-1], line_no)

        any_valid_line = True
        all_ts_min = t if all_ts_min is None else min(all_ts_min, t)
        all_ts_max = t if all_ts_max is None else max(all_ts_max, t)

        if drop_loops and s == d:
            dropped_ids.append(s)
            continue
        if dedup:
            key = (s, d, t)
            if key in seen_triples:
                continue
            seen_triples.add(key)
        raw_src.append(s)
        raw_dst.append(d)
        raw_ts.append(t)

    if not any_valid_line:
        raise EdgeListError("no edges in input")

    src = np.array(raw_src, dtype=np.int64)
    dst = np.array(raw_dst, dtype=np.int64)
    ts = np.array(raw_ts, dtype=np.int64)
    order = np.argsort(ts, kind="stable")
    src, dst, ts = src[order], dst[order], ts[order]

    # Dense remap: first appearance scanning the sorted stream (src before
    # dst per edge); ids seen only on dropped edges follow at the end.
    remap: dict[int, int] = {}
    for i in range(len(ts)):
        for o in (int(src[i]), int(dst[i])):
            if o not in remap:
                remap[o] = len(remap)
    for o in dropped_ids:
        if o not in remap:
            remap[o] = len(remap)

    dense_src = np.fromiter((remap[int(x)] for x in src), dtype=np.int64, count=len(src))
    dense_dst = np.fromiter((remap[int(x)] for x in dst), dtype=np.int64, count=len(dst))
    orig_ids = np.empty(len(remap), dtype=np.int64)
    for o, i in remap.items():
        orig_ids[i] = o

    return TemporalGraph(
        n_nodes=len(remap),
        src=dense_src,
        dst=dense_dst,
        ts=ts,
        t_start=int(all_ts_min if t_start is None else t_start),
        t_end=int(all_ts_max if t_end is None else t_end),
        orig_ids=orig_ids,
    )


def write_edge_list(g: TemporalGraph, stream: TextIO) -> None:
    """Emit `src,dst,timestamp` lines (original ids) in stored edge order."""
    for i in range(g.n_edges):
        stream.write(
            f"{g.orig_ids[g.src[i]]},{g.orig_ids[g.dst[i]]},{g.ts[i]}\n"
        )


def save_cache(g: TemporalGraph, path) -> None:
    """Versioned binary cache for fast reload."""
    np.savez_compressed(
        path,
        format_version=np.int64(CACHE_FORMAT_VERSION),
        n_nodes=np.int64(g.n_nodes),
        src=g.src,
        dst=g.dst,
        ts=g.ts,
        t_start=np.int64(g.t_start),
        t_end=np.int64(g.t_end),
        orig_ids=g.orig_ids,
    )


def load_cache(path) -> TemporalGraph:
    with np.load(path) as z:
        version = int(z["format_version"])
        if version != CACHE_FORMAT_VERSION:
            raise ValueError(
                f"cache format v{version} unsupported (expected v{CACHE_FORMAT_VERSION})"
            )
        return TemporalGraph(
            n_nodes=int(z["n_nodes"]),
            src=z["src"].astype(np.int64),
            dst=z["dst"].astype(np.int64),
            ts=z["ts"].astype(np.int64),
            t_start=int(z["t_start"]),
            t_end=int(z["t_end"]),
            orig_ids=z["orig_ids"].astype(np.int64),
        )
