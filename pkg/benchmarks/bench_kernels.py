"""Compare the compiled and pure-Python maximal-clique kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Graphs are random compatibility graphs of the sizes the allocator sees
(tens of candidate paths).  Both kernels must return the same cliques.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from irsroute import _kernels


def random_adj(n: int, p: float, seed: int) -> list[int]:
    rng = np.random.default_rng(seed)
    adj = [0] * n
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                adj[u] |= 1 << v
                adj[v] |= 1 << u
    return adj


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.BACKEND != "cython":
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation`")
    print(f"{'n':>4} {'p':>5} {'cliques':>8} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for n, p in [(16, 0.5), (32, 0.5), (48, 0.6), (60, 0.7), (60, 0.85)]:
        adj = random_adj(n, p, seed=n)
        ref = sorted(_kernels.maximal_clique_masks(adj, "python"))
        assert sorted(_kernels.maximal_clique_masks(adj, "cython")) == ref
        t = {}
        for b in ("python", "cython"):
            runs = timeit.repeat(lambda: _kernels.maximal_clique_masks(adj, b),
                                 number=1, repeat=args.repeat)
            t[b] = min(runs) * 1e3
        print(f"{n:>4} {p:>5.2f} {len(ref):>8} {t['python']:>10.2f} {t['cython']:>10.2f} "
              f"{t['python'] / t['cython']:>7.1f}x")


if __name__ == "__main__":
    main()
