# cython: language_level=3, boundscheck=False, wraparound=False
"""Bron-Kerbosch with pivoting over 64-bit vertex sets."""

from libc.stdint cimport uint64_t

cdef extern from *:
    int __builtin_popcountll(unsigned long long)
    int __builtin_ctzll(unsigned long long)

cdef enum:
    MAXN = 64


cdef void _expand(uint64_t r, uint64_t p, uint64_t x, uint64_t* adj, list out):
    cdef uint64_t m, low, cand
    cdef int u, v, c, best
    cdef uint64_t pivot_adj = 0
    if p == 0:
        if x == 0:
            out.append(r)
        return
    best = -1
    m = p | x
    while m:
        u = __builtin_ctzll(m)
        m &= m - 1
        c = __builtin_popcountll(p & adj[u])
        if c > best:
            best = c
            pivot_adj = adj[u]
    cand = p & ~pivot_adj
    while cand:
        v = __builtin_ctzll(cand)
        low = (<uint64_t>1) << v
        cand &= cand - 1
        _expand(r | low, p & adj[v], x & adj[v], adj, out)
        p &= ~low
        x |= low


def maximal_clique_masks(adj_list):
    """Same contract as the pure-Python kernel, for graphs of at most 64 vertices."""
    cdef int n = len(adj_list)
    cdef uint64_t adj[MAXN]
    cdef uint64_t full
    cdef int i
    if n == 0:
        return []
    if n > MAXN:
        raise ValueError("the compiled kernel handles at most 64 vertices")
    for i in range(n):
        adj[i] = <uint64_t>adj_list[i]
    full = (~(<uint64_t>0)) if n == 64 else (((<uint64_t>1) << n) - 1)
    out = []
    _expand(0, full, 0, adj, out)
    return out
