# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled neighbour-sampling kernel for graphs of at most 64 nodes.

Mirrors ``_fallback.sample_batch`` step for step.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil

MAX_NODES = 64


cdef inline uint64_t bit(int i) nogil:
    return (<uint64_t>1) << i


cdef void closure(uint64_t* w, int n, uint64_t* children, uint64_t* desc) nogil:
    cdef int v, c
    cdef uint64_t pm, ch, d, done = 0, all_nodes
    all_nodes = (~(<uint64_t>0)) if n == 64 else (bit(n) - 1)
    for v in range(n):
        children[v] = 0
    for v in range(n):
        pm = w[v]
        while pm:
            children[__builtin_ctzll(pm)] |= bit(v)
            pm &= pm - 1
    while done != all_nodes:
        for v in range(n):
            if (done >> v) & 1:
                continue
            ch = children[v]
            if ch & ~done:
                continue
            d = ch
            while ch:
                d |= desc[__builtin_ctzll(ch)]
                ch &= ch - 1
            desc[v] = d
            done |= bit(v)


cdef void car(uint64_t* w, int n, double u) nogil:
    cdef int h, t, count = 0, pick
    cdef uint64_t ph, pm, low
    for h in range(n):
        ph = w[h]
        pm = ph
        while pm:
            t = __builtin_ctzll(pm)
            low = bit(t)
            if ph == (w[t] | low):
                count += 1
            pm &= pm - 1
    if count == 0:
        return
    pick = <int>(u * count)
    if pick >= count:
        pick = count - 1
    for h in range(n):
        ph = w[h]
        pm = ph
        while pm:
            t = __builtin_ctzll(pm)
            low = bit(t)
            if ph == (w[t] | low):
                if pick == 0:
                    w[h] = ph & ~low
                    w[t] |= bit(h)
                    return
                pick -= 1
            pm &= pm - 1


def sample_batch(parents, double[::1] uniforms, int n_pre, int n_draws, int cars):
    cdef int n = len(parents)
    if n > 64:
        raise ValueError("compiled kernel supports at most 64 nodes")
    if uniforms.shape[0] < n_pre + n_draws * (cars + 1):
        raise ValueError("not enough uniforms")
    cdef uint64_t w[64]
    cdef uint64_t children[64]
    cdef uint64_t desc[64]
    cdef uint64_t anc[64]
    cdef uint64_t legal[64]
    cdef int i, j, v, x = 0, y = 0, ui = 0, total, pick, c
    cdef uint64_t full, m, dm, ch
    full = (~(<uint64_t>0)) if n == 64 else (bit(n) - 1)
    for v in range(n):
        w[v] = <uint64_t>int(parents[v])

    heads_arr = np.empty(n_draws, dtype=np.int64)
    olds_arr = np.empty(n_draws, dtype=np.uint64)
    news_arr = np.empty(n_draws, dtype=np.uint64)
    nbrs_arr = np.empty((n_draws, n), dtype=np.uint64)
    cdef int64_t[::1] heads = heads_arr
    cdef uint64_t[::1] olds = olds_arr
    cdef uint64_t[::1] news = news_arr
    cdef uint64_t[:, ::1] nbrs = nbrs_arr

    with nogil:
        for i in range(n_pre):
            car(w, n, uniforms[ui])
            ui += 1
        for i in range(n_draws):
            for j in range(cars):
                car(w, n, uniforms[ui])
                ui += 1
            closure(w, n, children, desc)
            for v in range(n):
                anc[v] = 0
            for v in range(n):
                dm = desc[v]
                while dm:
                    anc[__builtin_ctzll(dm)] |= bit(v)
                    dm &= dm - 1
            total = 0
            for x in range(n):
                ch = children[x]
                m = ch | (full & ~ch & ~w[x] & ~anc[x] & ~bit(x))
                legal[x] = m
                total += __builtin_popcountll(m)
            if total == 0:
                with gil:
                    raise RuntimeError("no legal arc move")
            pick = <int>(uniforms[ui] * total)
            ui += 1
            if pick >= total:
                pick = total - 1
            for x in range(n):
                c = __builtin_popcountll(legal[x])
                if pick < c:
                    m = legal[x]
                    while pick > 0:
                        m &= m - 1
                        pick -= 1
                    y = __builtin_ctzll(m)
                    break
                pick -= c
            heads[i] = y
            olds[i] = w[y]
            news[i] = w[y] ^ bit(x)
            for v in range(n):
                nbrs[i, v] = w[v]
            nbrs[i, y] = news[i]
    return heads_arr, olds_arr, news_arr, nbrs_arr
