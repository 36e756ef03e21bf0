"""Diffusion inner loops.

One uniform draw per eligible edge event, keyed by (replication seed, edge
index) through a splitmix64 hash. Keying by edge index rather than by a
sequential stream position makes common-random-number coupling exact: the
same edge sees the same draw no matter which seed set is being simulated.

Every kernel exists in three bindings: ``*_py`` (uncompiled, overflow
warnings suppressed), ``*_jit`` (compiled, None without numba), and the
bare name bound to whichever backend is active. All interval arithmetic is
int64, so the two paths are bit-identical.
"""

from __future__ import annotations

import numpy as np

from .backend import USE_NUMBA, compile_kernel, py_fallback

_MASK64 = (1 << 64) - 1

# splitmix64 finalizer constants
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(x: int) -> int:
    """splitmix64 finalizer on Python ints (driver-side seed derivation)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def derive_seed(base: int, *indices: int) -> int:
    """Fixed 64-bit mix of a base seed and stream indices.

    Used for per-replication streams: the result depends only on the
    arguments (order included), never on evaluation order or thread
    scheduling. The odd multiplier keeps the accumulate step bijective.
    """
    h = mix64(base & _MASK64)
    for ix in indices:
        h = mix64((h * 0xD1342543DE82EF95 + mix64(ix & _MASK64)) & _MASK64)
    return h


def _uniform_probe_impl(rep_seed, n, out):
    # Reference stream: out[i] = U01 draw for edge index i under rep_seed.
    for i in range(n):
        z = np.uint64(i)
        z = z + _GAMMA
        z ^= z >> _S30
        z = z * _M1
        z ^= z >> _S27
        z = z * _M2
        z ^= z >> _S31
        z = rep_seed ^ z
        z = z + _GAMMA
        z ^= z >> _S30
        z = z * _M1
        z ^= z >> _S27
        z = z * _M2
        z ^= z >> _S31
        out[i] = (z >> _S11) * _INV53


def _sim_totals_impl(src, dst, ts, seed_mask, t_s, t_e, mu, t_act, rep_seed):
    """One Social-SIS replication, returning only aggregate numbers.

    Returns (extra_active_time, attempts, successes, successes_on_active);
    extra_active_time excludes the seeds' own [t_s, t_e) intervals.

    A node's appended intervals always chain forward (each new start is
    max(t, previous end)), so "v active at t" reduces to last_end[v] > t.
    """
    n_nodes = seed_mask.shape[0]
    last_end = np.full(n_nodes, t_s, np.int64)
    extra = np.int64(0)
    attempts = np.int64(0)
    successes = np.int64(0)
    on_active = np.int64(0)
    for i in range(src.shape[0]):
        s = src[i]
        t = ts[i]
        if seed_mask[s] == 0 and last_end[s] <= t:
            continue
        attempts += 1
        v = dst[i]
        if seed_mask[v] == 1:
            continue  # seeds are pinned active: attempt is a no-op
        z = np.uint64(i)
        z = z + _GAMMA
        z ^= z >> _S30
        z = z * _M1
        z ^= z >> _S27
        z = z * _M2
        z ^= z >> _S31
        z = rep_seed ^ z
        z = z + _GAMMA
        z ^= z >> _S30
        z = z * _M1
        z ^= z >> _S27
        z = z * _M2
        z ^= z >> _S31
        if (z >> _S11) * _INV53 < mu:
            successes += 1
            le = last_end[v]
            if le > t:
                on_active += 1
                start = le
            else:
                start = t
            end = start + t_act
            if end > t_e:
                end = t_e
            if end > start:
                extra += end - start
                last_end[v] = end
    return extra, attempts, successes, on_active


def _sim_log_impl(
    src, dst, ts, seed_mask, t_s, t_e, mu, t_act, rep_seed, out_node, out_start, out_end
):
    """Same replication as _sim_totals_impl, materializing the intervals.

    out_* must be int64 arrays of length >= len(src). Returns
    (n_records, attempts, successes, successes_on_active). Records appear
    in edge order, so they are time-sorted within each node.
    """
    n_nodes = seed_mask.shape[0]
    last_end = np.full(n_nodes, t_s, np.int64)
    count = np.int64(0)
    attempts = np.int64(0)
    successes = np.int64(0)
    on_active = np.int64(0)
    for i in range(src.shape[0]):
        s = src[i]
        t = ts[i]
        if seed_mask[s] == 0 and last_end[s] <= t:
            continue
        attempts += 1
        v = dst[i]
        if seed_mask[v] == 1:
            continue
        z = np.uint64(i)
        z = z + _GAMMA
        z ^= z >> _S30
        z = z * _M1
        z ^= z >> _S27
        z = z * _M2
        z ^= z >> _S31
        z = rep_seed ^ z
        z = z + _GAMMA
        z ^= z >> _S30
        z = z * _M1
        z ^= z >> _S27
        z = z * _M2
        z ^= z >> _S31
        if (z >> _S11) * _INV53 < mu:
            successes += 1
            le = last_end[v]
            if le > t:
                on_active += 1
                start = le
            else:
                start = t
            end = start + t_act
            if end > t_e:
                end = t_e
            if end > start:
                out_node[count] = v
                out_start[count] = start
                out_end[count] = end
                count += 1
                last_end[v] = end
    return count, attempts, successes, on_active


uniform_probe_py = py_fallback(_uniform_probe_impl)
sim_totals_py = py_fallback(_sim_totals_impl)
sim_log_py = py_fallback(_sim_log_impl)

uniform_probe_jit = compile_kernel(_uniform_probe_impl)
sim_totals_jit = compile_kernel(_sim_totals_impl)
sim_log_jit = compile_kernel(_sim_log_impl)

if USE_NUMBA:
    uniform_probe = uniform_probe_jit
    sim_totals = sim_totals_jit
    sim_log = sim_log_jit
else:
    uniform_probe = uniform_probe_py
    sim_totals = sim_totals_py
    sim_log = sim_log_py
