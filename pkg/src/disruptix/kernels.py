"""Hot loops: citer partition counting and the stratified swap walk.

Each kernel has a compiled path (numba) and a fallback.  The partition
fallback is a vectorised numpy pair-join; the swap walk is inherently
sequential, so its fallback runs the very same loop uncompiled, which keeps
both backends bit-identical for a given random stream.
"""
import numpy as np

from ._accel import apply_thread_cap, njit, prange, resolve_backend

# Cap on candidate (focal, citer) pairs materialised per block by the numpy path.
_PAIR_BLOCK = 1 << 22


@njit(parallel=True, cache=True, nogil=True)
def _partition_jit(out_ptr, out_idx, in_ptr, in_idx, time, fb_lo, r_lo, hi, n_chunks):
    n = time.shape[0]
    n_cite = np.zeros(n, dtype=np.int64)
    n_b = np.zeros(n, dtype=np.int64)
    n_r = np.zeros(n, dtype=np.int64)
    chunk = (n + n_chunks - 1) // n_chunks
    for c in prange(n_chunks):
        cites = np.full(n, -1, dtype=np.int64)
        seen = np.full(n, -1, dtype=np.int64)
        stop = min(n, (c + 1) * chunk)
        for i in range(c * chunk, stop):
            lo_fb = fb_lo[i]
            lo_r = r_lo[i]
            top = hi[i]
            k = 0
            for p in range(in_ptr[i], in_ptr[i + 1]):
                j = in_idx[p]
                cites[j] = i
                if time[j] >= lo_fb and time[j] <= top:
                    k += 1
            b = 0
            r = 0
            for q in range(out_ptr[i], out_ptr[i + 1]):
                ref = out_idx[q]
                for p in range(in_ptr[ref], in_ptr[ref + 1]):
                    j = in_idx[p]
                    if j == i or seen[j] == i:
                        continue
                    seen[j] = i
                    tj = time[j]
                    if cites[j] == i:
                        if tj >= lo_fb and tj <= top:
                            b += 1
                    elif tj >= lo_r and tj <= top:
                        r += 1
            n_cite[i] = k
            n_b[i] = b
            n_r[i] = r
    return n_cite, n_b, n_r


def _expand_ranges(starts, counts):
    """Concatenate ranges [s, s + c) for each pair, vectorised."""
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.cumsum(counts) - counts
    return np.repeat(starts - offsets, counts) + np.arange(total, dtype=np.int64)


def _partition_numpy(out_ptr, out_idx, in_ptr, in_idx, time, fb_lo, r_lo, hi):
    n = time.shape[0]
    n_cite = np.zeros(n, dtype=np.int64)
    n_b = np.zeros(n, dtype=np.int64)
    n_r = np.zeros(n, dtype=np.int64)
    if n == 0:
        return n_cite, n_b, n_r
    out_deg = np.diff(out_ptr)
    in_deg = np.diff(in_ptr)
    focal_of_ref_edge = np.repeat(np.arange(n, dtype=np.int64), out_deg)

    # direct citations: key focal * n + citer, sorted because in_idx is sorted per focal
    focal_of_cite = np.repeat(np.arange(n, dtype=np.int64), in_deg)
    cite_keys = focal_of_cite * n + in_idx
    t_cite = time[in_idx]
    in_w = (t_cite >= fb_lo[focal_of_cite]) & (t_cite <= hi[focal_of_cite])
    n_cite += np.bincount(focal_of_cite[in_w], minlength=n)
    fb_keys = cite_keys[in_w]

    # two-paths focal -> ref <- citer, processed in focal blocks
    paths_per_focal = np.zeros(n, dtype=np.int64)
    np.add.at(paths_per_focal, focal_of_ref_edge, in_deg[out_idx])
    cum = np.cumsum(paths_per_focal)
    start_focal = 0
    while start_focal < n:
        base = cum[start_focal - 1] if start_focal else 0
        stop_focal = int(np.searchsorted(cum, base + _PAIR_BLOCK, side="right"))
        stop_focal = min(max(stop_focal, start_focal + 1), n)
        e0, e1 = out_ptr[start_focal], out_ptr[stop_focal]
        refs = out_idx[e0:e1]
        focals = focal_of_ref_edge[e0:e1]
        counts = in_deg[refs]
        citer = in_idx[_expand_ranges(in_ptr[refs], counts)]
        focal = np.repeat(focals, counts)
        keep = citer != focal
        keys = np.unique(focal[keep] * n + citer[keep])
        focal = keys // n
        citer = keys % n
        tj = time[citer]
        cites_focal = _sorted_isin(keys, cite_keys)
        in_fb = _sorted_isin(keys, fb_keys)
        both = np.bincount(focal[in_fb], minlength=n)
        only_ref = (~cites_focal) & (tj >= r_lo[focal]) & (tj <= hi[focal])
        n_b += both
        n_r += np.bincount(focal[only_ref], minlength=n)
        start_focal = stop_focal
    return n_cite, n_b, n_r


def _sorted_isin(keys, sorted_haystack):
    if sorted_haystack.size == 0:
        return np.zeros(keys.shape, dtype=bool)
    pos = np.searchsorted(sorted_haystack, keys)
    pos[pos == sorted_haystack.size] = 0
    return sorted_haystack[pos] == keys


def partition_counts(out_ptr, out_idx, in_ptr, in_idx, time, fb_lo, r_lo, hi, backend=None):
    """Per-node (window citers of focal, N_B, N_R).

    A citer j of focal i counts toward F/B when ``fb_lo[i] <= time[j] <= hi[i]``
    and toward R when ``r_lo[i] <= time[j] <= hi[i]``; N_F is citers minus N_B.
    Requires ``fb_lo <= r_lo`` elementwise.
    """
    args = tuple(np.ascontiguousarray(a, dtype=np.int64)
                 for a in (out_ptr, out_idx, in_ptr, in_idx, time, fb_lo, r_lo, hi))
    if resolve_backend(backend) == "numba":
        n_chunks = max(1, min(apply_thread_cap(), args[4].shape[0]))
        return _partition_jit(*args, n_chunks)
    return _partition_numpy(*args)


@njit(cache=True, nogil=True)
def _swap_walk(slot_cited, out_ptr, slot_stratum, stratum_start, stratum_size, stratum_edges,
               citer_of_slot, draw_first, draw_second, target, retained):
    """Consume one batch of draws; returns (attempts used, retained so far).

    ``slot_cited`` is mutated in place.  Slots are edge positions sorted by
    citer, so the citer of a slot never changes; only cited endpoints move.
    """
    used = 0
    for t in range(draw_first.shape[0]):
        if retained >= target:
            break
        used += 1
        e1 = draw_first[t]
        s = slot_stratum[e1]
        e2 = stratum_edges[stratum_start[s] + int(draw_second[t] * stratum_size[s])]
        if e1 == e2:
            continue
        a = citer_of_slot[e1]
        b = slot_cited[e1]
        c = citer_of_slot[e2]
        d = slot_cited[e2]
        if a == d or c == b or b == d or a == c:
            continue
        dup = False
        for p in range(out_ptr[a], out_ptr[a + 1]):
            if slot_cited[p] == d:
                dup = True
                break
        if not dup:
            for p in range(out_ptr[c], out_ptr[c + 1]):
                if slot_cited[p] == b:
                    dup = True
                    break
        if dup:
            continue
        slot_cited[e1] = d
        slot_cited[e2] = b
        retained += 1
    return used, retained


def swap_walk(*args, backend=None):
    if resolve_backend(backend) == "numba":
        return _swap_walk(*args)
    return _swap_walk.py_func(*args)
