"""Compare the numba kernels against their numpy twins.

Usage: python3 benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]

Each kernel is warmed up once (numba compiles on first call), then timed as
the best of ``--repeat`` runs.  Outputs are checked for agreement first.
"""

import argparse
import time

import numpy as np

from nearperm import _kernels


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def grid_csr(side):
    """4-neighbour grid graph on side x side vertices."""
    idx = np.arange(side * side).reshape(side, side)
    src, dst = [], []
    for a, b in [(idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])]:
        src += [a.ravel(), b.ravel()]
        dst += [b.ravel(), a.ravel()]
    src, dst = np.concatenate(src), np.concatenate(dst)
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(side * side + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    return np.cumsum(indptr), dst[order]


def cases(n, rng):
    perm = rng.permutation(n)
    side = int(np.sqrt(n))
    indptr, indices = grid_csr(side)
    nbr = rng.integers(-1, n, size=(n, 4))
    coords = rng.integers(-1000, 1000, size=(n, 2))
    box = ([-500, -500], [500, 500], [True, True], [True, False], [0, 1], [1, 3])
    return {
        "cycle_labels": lambda b: _kernels.point_cycle_lengths(perm, b),
        "bfs_distances": lambda b: _kernels.bfs_distances(indptr, indices, 0, b),
        "boundary_count": lambda b: _kernels.boundary_count(nbr, b),
        "rect_mask": lambda b: _kernels.rect_mask(coords, *box, backend=b),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _kernels.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':16s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}")
    for name, fn in cases(args.n, rng).items():
        a, b = fn("numpy"), fn("numba")
        if not np.array_equal(np.asarray(a), np.asarray(b)):
            raise SystemExit(f"{name}: backends disagree")
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        print(f"{name:16s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
