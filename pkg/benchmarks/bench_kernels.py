"""Time the numba kernels against their pure-numpy twins.

    python3 benchmarks/bench_kernels.py [--sizes 256,1024] [--repeat 3]

Results are checked for equality before timing.  The first numba call
compiles (or loads the on-disk cache), so it is made once up front.
"""
import argparse
import timeit

import numpy as np

from dmst import _kernels as K
from dmst import graph as gm


def cases(g):
    indptr, indices = g.csr()
    order = np.array(sorted(range(g.m), key=lambda k: g.edges[k].key), dtype=np.int64)
    us = np.array([g.index[e.u] for e in g.edges], dtype=np.int64)
    vs = np.array([g.index[e.v] for e in g.edges], dtype=np.int64)
    return {
        "bfs": (lambda: K._nb_bfs(indptr, indices, 0, np.zeros(1, dtype=np.bool_), False),
                lambda: K.np_bfs_distances(indptr, indices, 0)),
        "eccentricities": (lambda: K._nb_eccentricities(indptr, indices),
                           lambda: K.np_eccentricities(indptr, indices)),
        "kruskal": (lambda: K._nb_kruskal(g.n, us, vs, order),
                    lambda: K.np_kruskal(g.n, us, vs, order)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="256,1024")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not K._HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<16}{'n':>6}{'m':>8}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for n in (int(x) for x in args.sizes.split(",")):
        g = gm.generate_random_connected(n, 4 * n, 0)
        for name, (fast, slow) in cases(g).items():
            assert np.array_equal(fast(), slow()), name
            number = 1 if name == "eccentricities" else 20
            t_fast = min(timeit.repeat(fast, number=number, repeat=args.repeat)) / number
            t_slow = min(timeit.repeat(slow, number=number, repeat=args.repeat)) / number
            print(f"{name:<16}{n:>6}{g.m:>8}{1e3 * t_fast:>12.3f}{1e3 * t_slow:>12.3f}"
                  f"{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
