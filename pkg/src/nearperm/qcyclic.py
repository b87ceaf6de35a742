"""Residuals of near free near actions of the quasi-cyclic group C_{m^infty}.

A construction is a list of block exponents q_k: block k is a copy of
Z/m^{q_k}.  At level n the cyclic group Z/m^n is realized by translation on
blocks with q_k >= n and trivially on the others, so the residual at level n
is the sum of m^{q_k} over the small blocks, read mod m^n.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels


class QCError(ValueError):
    pass


@dataclass(frozen=True)
class QCConstruction:
    m: int
    q: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(int(x) for x in self.q))
        if self.m < 2:
            raise QCError("m must be >= 2")
        if any(x < 0 for x in self.q):
            raise QCError("block exponents must be non-negative")
        if any(a > b for a, b in zip(self.q, self.q[1:])):
            raise QCError("block exponents must be non-decreasing")

    def concat(self, other: "QCConstruction") -> "QCConstruction":
        if other.m != self.m:
            raise QCError("bases differ")
        return QCConstruction(self.m, tuple(sorted(self.q + other.q)))

    def to_json(self):
        return {"m": self.m, "q": list(self.q)}


@dataclass(frozen=True)
class DigitStream:
    """Residues s_0 = 0, s_1, ..., s_N with s_n in [0, m^n) and s_n = s_{n-1} mod m^{n-1}."""

    m: int
    s: tuple

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(int(x) for x in self.s))
        m, s = self.m, self.s
        if m < 2:
            raise QCError("m must be >= 2")
        if not s or s[0] != 0:
            raise QCError("a digit stream starts with s_0 = 0")
        for n, x in enumerate(s):
            if not 0 <= x < m ** n:
                raise QCError(f"s_{n} = {x} is outside [0, {m ** n})")
            if n and (x - s[n - 1]) % m ** (n - 1):
                raise QCError(f"s_{n} = {x} is not congruent to s_{n - 1} = {s[n - 1]} mod {m ** (n - 1)}")

    @classmethod
    def of_integer(cls, m: int, value: int, N: int) -> "DigitStream":
        return cls(m, tuple(value % m ** n for n in range(N + 1)))


def residual_truncation(c: QCConstruction, n: int) -> int:
    if n < 1:
        raise QCError("n must be >= 1")
    mod = c.m ** n
    return sum(c.m ** q for q in c.q if q < n) % mod


def residual_table(c: QCConstruction, N: int) -> list:
    return [residual_truncation(c, n) for n in range(1, N + 1)]


def digits_to_blocks(d: DigitStream, N: int) -> list:
    """Block counts b_1..b_N; b_n blocks of exponent n-1 realize s_n at every level."""
    if N >= len(d.s):
        raise QCError(f"digit stream only reaches level {len(d.s) - 1}")
    return [(d.s[n] - d.s[n - 1]) // d.m ** (n - 1) for n in range(1, N + 1)]


def blocks_to_construction(m: int, b: Sequence[int]) -> QCConstruction:
    q = []
    for n, count in enumerate(b, start=1):
        q.extend([n - 1] * int(count))
    return QCConstruction(m, tuple(q))


def realization(c: QCConstruction, n: int) -> np.ndarray:
    """Generator of the level-n realization as a permutation array of all points.

    On a block Z/m^q with q >= n it adds m^(q-n), so Z/m^n acts freely there.
    """
    sizes = [c.m ** q for q in c.q]
    perm = np.arange(sum(sizes), dtype=np.int64)
    start = 0
    for q, size in zip(c.q, sizes):
        if q >= n:
            perm[start:start + size] = start + (np.arange(size) + c.m ** (q - n)) % size
        start += size
    return perm


def direct_count_oracle(c: QCConstruction, n: int, backend=None) -> int:
    """Number of points whose Z/m^n-orbit is smaller than m^n (unreduced)."""
    if n < 1:
        raise QCError("n must be >= 1")
    perm = realization(c, n)
    lens = _kernels.point_cycle_lengths(perm, backend)
    return int(np.count_nonzero(lens < c.m ** n))


def realizability_report(c: QCConstruction, N: int) -> dict:
    """Residue table, with the caveat that finite precision proves little."""
    return {"m": c.m, "q": list(c.q), "precision": N, "residues": residual_table(c, N),
            "status": f"consistent at precision {N}",
            "caveat": "a finite truncation never certifies that the residual lies outside Z"}
