"""Array kernels shared by the enumeration-heavy parts of the package.

Each kernel has a numba implementation and a pure-numpy twin with the same
signature and the same output.  Setting ``NEARPERM_NO_NUMBA=1`` in the
environment (or running without numba installed) selects the numpy twins.
``NEARPERM_THREADS`` caps the number of threads numba may use.
"""

from __future__ import annotations

import os

import numpy as np

_WANT_NUMBA = os.environ.get("NEARPERM_NO_NUMBA", "").strip() not in ("1", "true", "yes")

try:
    if not _WANT_NUMBA:
        raise ImportError("numba disabled by NEARPERM_NO_NUMBA")
    import numba
    from numba import njit, prange
except ImportError:  # pragma: no cover - exercised with the env flag
    numba = None

BACKEND = "numba" if numba is not None else "numpy"

if numba is not None:
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # prefer OpenMP; an outdated TBB only produces a warning
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    _threads = os.environ.get("NEARPERM_THREADS")
    if _threads:
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------- numpy twins

def _cycle_labels_np(perm):
    n = perm.shape[0]
    lab = np.arange(n, dtype=np.int64)
    p = perm.astype(np.int64, copy=True)
    steps = 1
    # pointer doubling: after k rounds lab[i] is the min over 2^k iterates
    while steps < n:
        lab = np.minimum(lab, lab[p])
        p = p[p]
        steps *= 2
    lab = np.minimum(lab, lab[p])
    roots, inverse = np.unique(lab, return_inverse=True)
    lengths = np.bincount(inverse).astype(np.int64)
    return inverse.astype(np.int64), lengths


def _bfs_np(indptr, indices, source):
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    d = 0
    while frontier.size:
        starts = indptr[frontier]
        counts = indptr[frontier + 1] - starts
        if counts.sum() == 0:
            break
        offs = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
        nbrs = indices[np.arange(counts.sum()) + offs]
        nbrs = np.unique(nbrs[dist[nbrs] < 0])
        d += 1
        dist[nbrs] = d
        frontier = nbrs
    return dist


def _boundary_count_np(nbr):
    if nbr.shape[0] == 0:
        return 0
    return int((nbr < 0).any(axis=1).sum())


def _rect_mask_np(coords, lo, hi, has_lo, has_hi, r, q):
    ok = np.ones(coords.shape[0], dtype=np.bool_)
    for j in range(coords.shape[1]):
        c = coords[:, j]
        if has_lo[j]:
            ok &= c >= lo[j]
        if has_hi[j]:
            ok &= c <= hi[j]
        if q[j] > 1:
            ok &= np.mod(c - r[j], q[j]) == 0
    return ok


# ---------------------------------------------------------------- numba side

if numba is not None:

    @njit(cache=True)
    def _cycle_labels_nb(perm):
        n = perm.shape[0]
        label = np.full(n, -1, dtype=np.int64)
        lengths = np.zeros(n, dtype=np.int64)
        k = 0
        for i in range(n):
            if label[i] >= 0:
                continue
            j = i
            size = 0
            while label[j] < 0:
                label[j] = k
                size += 1
                j = perm[j]
            lengths[k] = size
            k += 1
        return label, lengths[:k]

    @njit(cache=True)
    def _bfs_nb(indptr, indices, source):
        n = indptr.shape[0] - 1
        dist = np.full(n, -1, dtype=np.int64)
        queue = np.empty(n, dtype=np.int64)
        dist[source] = 0
        queue[0] = source
        head, tail = 0, 1
        while head < tail:
            x = queue[head]
            head += 1
            for e in range(indptr[x], indptr[x + 1]):
                y = indices[e]
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    queue[tail] = y
                    tail += 1
        return dist

    @njit(cache=True)
    def _boundary_count_nb(nbr):
        total = 0
        for i in range(nbr.shape[0]):
            for s in range(nbr.shape[1]):
                if nbr[i, s] < 0:
                    total += 1
                    break
        return total

    @njit(cache=True, parallel=True)
    def _rect_mask_nb(coords, lo, hi, has_lo, has_hi, r, q):
        n, d = coords.shape
        out = np.ones(n, dtype=np.bool_)
        for i in prange(n):
            for j in range(d):
                c = coords[i, j]
                if has_lo[j] and c < lo[j]:
                    out[i] = False
                    break
                if has_hi[j] and c > hi[j]:
                    out[i] = False
                    break
                if q[j] > 1 and (c - r[j]) % q[j] != 0:
                    out[i] = False
                    break
        return out


# ---------------------------------------------------------------- public API

def cycle_labels(perm, backend=None):
    """Label each point of a permutation array by its cycle.

    Returns ``(labels, lengths)``: ``labels[i]`` indexes into ``lengths``.
    Cycle numbering differs between backends; lengths per point do not.
    """
    perm = np.ascontiguousarray(perm, dtype=np.int64)
    if perm.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if _pick(backend) == "numba":
        return _cycle_labels_nb(perm)
    return _cycle_labels_np(perm)


def cycle_lengths(perm, backend=None):
    """Sorted array of cycle lengths of a permutation array."""
    _, lengths = cycle_labels(perm, backend)
    return np.sort(lengths)


def point_cycle_lengths(perm, backend=None):
    labels, lengths = cycle_labels(perm, backend)
    return lengths[labels]


def bfs_distances(indptr, indices, source, backend=None):
    """Graph distances from ``source`` in a CSR graph (-1 when unreachable)."""
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    if _pick(backend) == "numba":
        return _bfs_nb(indptr, indices, np.int64(source))
    return _bfs_np(indptr, indices, int(source))


def boundary_count(nbr, backend=None):
    """Number of rows of ``nbr`` containing a negative entry."""
    nbr = np.ascontiguousarray(nbr, dtype=np.int64)
    if nbr.ndim != 2 or nbr.shape[0] == 0:
        return 0
    if _pick(backend) == "numba":
        return int(_boundary_count_nb(nbr))
    return _boundary_count_np(nbr)


def rect_mask(coords, lo, hi, has_lo, has_hi, r, q, backend=None):
    """Membership of integer points in a strided box, one row per point."""
    args = (
        np.ascontiguousarray(coords, dtype=np.int64),
        np.ascontiguousarray(lo, dtype=np.int64),
        np.ascontiguousarray(hi, dtype=np.int64),
        np.ascontiguousarray(has_lo, dtype=np.bool_),
        np.ascontiguousarray(has_hi, dtype=np.bool_),
        np.ascontiguousarray(r, dtype=np.int64),
        np.ascontiguousarray(q, dtype=np.int64),
    )
    if args[0].shape[0] == 0:
        return np.zeros(0, dtype=np.bool_)
    if _pick(backend) == "numba":
        return _rect_mask_nb(*args)
    return _rect_mask_np(*args)


def _pick(backend):
    if backend is None:
        return BACKEND
    if backend == "numba" and numba is None:
        raise RuntimeError("numba backend requested but unavailable")
    return backend
