"""Compiled inner loops for graph construction and greedy clique search.

The greedy works on per-receiver packet bitmasks rather than on the adjacency
matrix: a vertex (i, j) is adjacent to the vertices of receiver k != i that are
{(k, j)} when k wants j, and {(k, l) : l in H_i} otherwise. Neighbour weight
sums therefore reduce to one popcount per receiver.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# weights closer than this (relative) count as tied; ties go to the smaller vertex
TIE_RTOL = 1e-12


@njit(cache=True)
def adjacency(entries, rec, pkt):
    n = rec.shape[0]
    et = np.ascontiguousarray(entries.T)
    adj = np.empty((n, n), dtype=np.bool_)
    for a in range(n):
        i = rec[a]
        j = pkt[a]
        k_has_j = et[j]
        i_row = entries[i]
        row = adj[a]
        for b in range(n):
            k = rec[b]
            l = pkt[b]
            row[b] = k != i and (l == j or (k_has_j[k] == 0 and i_row[l] == 0))
    return adj


@njit(cache=True)
def modified(adj, w_star, work):
    """(w* + 1) * neighbour-sum of w*, over the vertex subset ``work``.

    Neighbour sums are accumulated in ascending vertex order.
    """
    m = work.shape[0]
    wv = np.empty(m)
    for b in range(m):
        wv[b] = w_star[work[b]]
    out = np.empty(m)
    for a in range(m):
        row = adj[work[a]]
        s = 0.0
        for b in range(m):
            if row[work[b]]:
                s += wv[b]
        out[a] = (wv[a] + 1.0) * s
    return out


@njit(cache=True)
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@njit(cache=True)
def _bitmasks(entries):
    M, N = entries.shape
    words = (N + 63) // 64
    want = np.zeros((M, words), dtype=np.uint64)
    full = np.zeros(words, dtype=np.uint64)
    for l in range(N):
        full[l >> 6] |= np.uint64(1) << np.uint64(l & 63)
    for k in range(M):
        for l in range(N):
            if entries[k, l]:
                want[k, l >> 6] |= np.uint64(1) << np.uint64(l & 63)
    has = np.empty_like(want)
    for k in range(M):
        for q in range(words):
            has[k, q] = ~want[k, q] & full[q]
    return want, has


@njit(cache=True)
def _restrict(work, want, has, i, j):
    M, words = work.shape
    q = j >> 6
    bit = np.uint64(1) << np.uint64(j & 63)
    for k in range(M):
        if k == i:
            for r in range(words):
                work[k, r] = 0
        elif want[k, q] & bit:
            for r in range(words):
                work[k, r] = work[k, r] & bit if r == q else np.uint64(0)
        else:
            for r in range(words):
                work[k, r] &= has[i, r]


@njit(cache=True)
def greedy(entries, present, w_rec, level, h):
    """Multilayer greedy maximum-weight vertex search.

    ``entries`` is the feedback matrix (drives adjacency), ``present`` marks the
    vertices of the graph being searched. ``w_rec[i]`` is the original weight
    shared by all vertices of receiver i and ``level[i]`` the layer (0 = highest delay) of receiver i. Vertices are
    scanned in (receiver, packet) order and a later vertex only wins if it is
    larger by more than TIE_RTOL, so ties go to the smallest vertex.
    Returns (receivers, packets) of the chosen vertices in selection order.
    """
    M, N = entries.shape
    words = (N + 63) // 64
    want, has = _bitmasks(entries)
    vert, _ = _bitmasks(present)
    out_r = np.empty(M, dtype=np.int64)
    out_p = np.empty(M, dtype=np.int64)
    c = 0
    work = np.zeros((M, words), dtype=np.uint64)
    cnt = np.zeros(M, dtype=np.int64)
    active = np.zeros(M, dtype=np.int64)
    for layer in range(h):
        for k in range(M):
            for r in range(words):
                work[k, r] = vert[k, r] if level[k] == layer else np.uint64(0)
        for q in range(c):
            _restrict(work, want, has, out_r[q], out_p[q])
        while True:
            best = -1.0
            bi = -1
            bj = -1
            # receivers that still have vertices in the working graph
            na = 0
            for k in range(M):
                for r in range(words):
                    if work[k, r]:
                        active[na] = k
                        na += 1
                        break
            for ia in range(na):
                i = active[ia]
                # vertices of k adjacent to (i, j) when k does not want j: work[k] & H_i
                for ka in range(na):
                    k = active[ka]
                    n = 0
                    for t in range(words):
                        n += int(_popcount(work[k, t] & has[i, t]))
                    cnt[k] = n
                for r in range(words):
                    bits = work[i, r]
                    while bits:
                        low = bits & (~bits + np.uint64(1))
                        bits ^= low
                        j = r * 64 + int(_popcount(low - np.uint64(1)))
                        q = j >> 6
                        bit = np.uint64(1) << np.uint64(j & 63)
                        s = 0.0
                        for ka in range(na):
                            k = active[ka]
                            if k == i:
                                continue
                            if want[k, q] & bit:
                                if work[k, q] & bit:
                                    s += w_rec[k]
                            elif cnt[k]:
                                s += w_rec[k] * cnt[k]
                        val = (w_rec[i] + 1.0) * s
                        if bi < 0 or val - best > TIE_RTOL * best:
                            best = val
                            bi = i
                            bj = j
            if bi < 0:
                break
            out_r[c] = bi
            out_p[c] = bj
            c += 1
            _restrict(work, want, has, bi, bj)
    return out_r[:c], out_p[:c]
