"""Pure-Python Bron-Kerbosch with pivoting over integer bitsets."""

from __future__ import annotations

_bit_count = int.bit_count


def maximal_clique_masks(adj: list[int]) -> list[int]:
    """All maximal cliques of the graph with neighbour bitsets ``adj``.

    ``adj[v]`` has bit ``u`` set iff ``u`` and ``v`` are adjacent (no self
    loops).  Each clique is returned as a vertex bitmask, in discovery order.
    """
    n = len(adj)
    if n == 0:
        return []
    out: list[int] = []

    def expand(r: int, p: int, x: int) -> None:
        if not p:
            if not x:
                out.append(r)
            return
        # pivot on the vertex of P | X with the most neighbours in P
        best, pivot, m = -1, 0, p | x
        while m:
            low = m & -m
            u = low.bit_length() - 1
            m ^= low
            c = _bit_count(p & adj[u])
            if c > best:
                best, pivot = c, u
        cand = p & ~adj[pivot]
        while cand:
            low = cand & -cand
            v = low.bit_length() - 1
            cand ^= low
            expand(r | low, p & adj[v], x & adj[v])
            p &= ~low
            x |= low

    expand(0, (1 << n) - 1, 0)
    return out
