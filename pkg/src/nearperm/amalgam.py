"""The mod-p invariant for near actions of G = C_pn *_{C_p} C_{p^2}.

G is presented as <t, u | t^pn = u^(p^2) = 1, t^n = u^p>.  Put z = t^n = u^p,
which is central of order p.  Every element is z^c w with w a reduced word in
the free product C_n * C_p (t-syllables t^a, 0 < a < n, alternating with
u-syllables u^b, 0 < b < p).  Elements are stored as ``(word, c)``.

For a near action given on a finite window W by permutations t and u, the
invariant counts the p-cycles of t^n on a u-invariant set Y containing
F = {x : t^n x != u^p x}, modulo p.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import _kernels


class AmalgamError(ValueError):
    pass


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % k for k in range(2, int(p ** 0.5) + 1))


# ------------------------------------------------------------- finite perms

class FinPerm:
    """Permutation of an explicit finite point list."""

    def __init__(self, points, perm):
        self.points = list(points)
        self.perm = np.asarray(perm, dtype=np.int64)
        if self.perm.shape != (len(self.points),):
            raise AmalgamError("permutation length does not match the ground set")
        if len(self.points) and not np.array_equal(np.sort(self.perm), np.arange(len(self.points))):
            raise AmalgamError("not a bijection")
        self._index = {x: i for i, x in enumerate(self.points)}

    @classmethod
    def from_function(cls, points, fn):
        points = list(points)
        idx = {x: i for i, x in enumerate(points)}
        return cls(points, [idx[fn(x)] for x in points])

    def index_of(self, x):
        return self._index[x]

    def __call__(self, x):
        return self.points[self.perm[self._index[x]]]

    def power(self, k: int) -> "FinPerm":
        out = np.arange(len(self.points), dtype=np.int64)
        base = self.perm if k >= 0 else np.argsort(self.perm)
        for _ in range(abs(k)):
            out = base[out]
        return FinPerm(self.points, out)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.perm, np.arange(len(self.points))))

    def cycle_type(self) -> Counter:
        return Counter(int(x) for x in _kernels.cycle_lengths(self.perm))

    def restrict(self, subset) -> "FinPerm":
        sub = sorted(subset, key=self._index.__getitem__)
        sidx = {x: i for i, x in enumerate(sub)}
        try:
            return FinPerm(sub, [sidx[self(x)] for x in sub])
        except KeyError as e:
            raise AmalgamError(f"subset is not invariant (escapes at {e.args[0]})") from None

    def orbit(self, x) -> list:
        out, y = [x], self(x)
        while y != x:
            out.append(y)
            y = self(y)
        return out


# -------------------------------------------------------------- group model

def _left_mult(elem, gen, p, n):
    """Left multiplication of ``(word, c)`` by t or u in G."""
    word, c = elem
    order = n if gen == "t" else p
    if word and word[0][0] == gen:
        e = word[0][1] + 1
        if e == order:
            return word[1:], (c + 1) % p
        return ((gen, e),) + word[1:], c
    return ((gen, 1),) + word, c


def word_length(elem) -> int:
    return len(elem[0])


def ball(p: int, n: int, L: int) -> list:
    """All elements with at most L syllables, in a fixed order."""
    words = [()]
    frontier = [()]
    for _ in range(L):
        nxt = []
        for w in frontier:
            kinds = ("t", "u") if not w else (("u",) if w[0][0] == "t" else ("t",))
            for g in kinds:
                for e in range(1, (n if g == "t" else p)):
                    nxt.append(((g, e),) + w)
        words.extend(nxt)
        frontier = nxt
    return [(w, c) for w in words for c in range(p)]


def in_X(elem) -> bool:
    """Empty word, or last syllable a power of t."""
    w = elem[0]
    return not w or w[-1][0] == "t"


@dataclass
class AmalgamData:
    p: int
    n: int
    t: FinPerm
    u: FinPerm
    interior: frozenset = field(default=None)

    def __post_init__(self):
        if not _is_prime(self.p) or self.n <= 0 or self.n % self.p:
            raise AmalgamError("need p prime and p | n")
        if self.t.points != self.u.points:
            raise AmalgamError("t and u must act on the same window")
        if self.interior is None:
            self.interior = frozenset(self.t.points)
        self.t_order_ok = self.t.power(self.p * self.n).is_identity()
        self.u_order_ok = self.u.power(self.p * self.p).is_identity()
        if not (self.t_order_ok and self.u_order_ok):
            raise AmalgamError("order relations fail on the window")

    @property
    def points(self):
        return self.t.points

    def F(self) -> list:
        """Interior points where t^n and u^p disagree."""
        tn, up = self.t.power(self.n), self.u.power(self.p)
        return [x for x in self.points if x in self.interior and tn(x) != up(x)]

    def to_json(self):
        return {"p": self.p, "n": self.n, "size": len(self.points),
                "interior": len(self.interior), "t_order_ok": self.t_order_ok,
                "u_order_ok": self.u_order_ok}


def amalgam_invariant(d: AmalgamData, Y: Iterable) -> int:
    """Number of p-cycles of t^n on Y, mod p."""
    Y = set(Y)
    for x in Y:
        if d.u(x) not in Y:
            raise AmalgamError(f"Y is not u-invariant at {x}")
    missing = [x for x in d.F() if x not in Y]
    if missing:
        raise AmalgamError(f"Y misses {len(missing)} points of F, e.g. {missing[0]}")
    tn = d.t.power(d.n).restrict(Y)
    return tn.cycle_type().get(d.p, 0) % d.p


# --------------------------------------------------------------- builders

def _window_perm(points, step):
    """Permutation of the window from a partial step map; cut orbits are frozen."""
    pset = set(points)
    image, boundary = {}, set()
    for x in points:
        if x in image or x in boundary:
            continue
        orbit, y, ok = [x], step(x), True
        while y != x:
            if y not in pset:
                ok = False
                break
            orbit.append(y)
            y = step(y)
        if ok:
            for a, b in zip(orbit, orbit[1:] + orbit[:1]):
                image[a] = b
        else:
            # walk back as well to freeze the whole cut orbit
            boundary.update(orbit)
    for x in boundary:
        image[x] = x
    for x in points:
        image.setdefault(x, x)
    return FinPerm.from_function(points, image.__getitem__), boundary


def _complete_boundary(points, step, boundary):
    # a cut orbit may have been entered from its middle; close it under step
    pset = set(points)
    todo = list(boundary)
    while todo:
        x = todo.pop()
        y = step(x)
        if y in pset and y not in boundary:
            boundary.add(y)
            todo.append(y)
    return boundary


@dataclass
class AmalgamModel:
    data: AmalgamData
    Y: list
    evidence: list
    margin_ok: bool

    def invariant(self) -> int:
        return amalgam_invariant(self.data, self.Y)

    def to_json(self):
        return {"data": self.data.to_json(), "Y": len(self.Y), "invariant": self.invariant(),
                "F": len(self.data.F()), "margin_ok": self.margin_ok, "evidence": self.evidence}


def _check_params(p, n, L):
    if not _is_prime(p):
        raise AmalgamError(f"p = {p} is not prime")
    if n <= 0 or n % p:
        raise AmalgamError(f"p = {p} does not divide n = {n}")
    if L < 3:
        raise AmalgamError("L must be >= 3")


def _build(p, n, L, points, u_step):
    t_step = lambda x: _left_mult(x, "t", p, n)
    t, bt = _window_perm(points, t_step)
    u, bu = _window_perm(points, u_step)
    _complete_boundary(points, t_step, bt)
    _complete_boundary(points, u_step, bu)
    interior = frozenset(x for x in points if x not in bt and x not in bu)
    return AmalgamData(p, n, t, u, interior)


def build_amalgam_model(p: int, n: int, L: int) -> AmalgamModel:
    """Non-realizable model on X = words not ending in a power of u.

    t is left translation; u' is left translation by u except on <z> where
    it is the identity.  F(t,u') = <z> and Y = <z>.
    """
    _check_params(p, n, L)
    points = [x for x in ball(p, n, L) if in_X(x)]

    def u_step(x):
        return x if not x[0] else _left_mult(x, "u", p, n)

    d = _build(p, n, L, points, u_step)
    Y = [((), c) for c in range(p)]
    F = d.F()
    margin_ok = all(word_length(x) <= L - 2 for x in F) and set(F) <= set(Y)
    return AmalgamModel(d, Y, commensuration_evidence(p, n, L), margin_ok)


def commensuration_evidence(p: int, n: int, L: int) -> list:
    """Sizes of (tX xor X) and (uX xor X) inside balls of G of radius r <= L."""
    G = ball(p, n, L + 1)
    rows = []
    for r in range(1, L + 1):
        inside = [x for x in G if word_length(x) <= r]
        row = {"radius": r}
        for g in ("t", "u"):
            gX = {_left_mult(x, g, p, n) for x in G if in_X(x)}
            row[g] = sum(1 for y in inside if (y in gX) != in_X(y))
        rows.append(row)
    return rows


def build_realizable_window(p: int, n: int, L: int) -> AmalgamData:
    """G acting on its own radius-L ball by left multiplication."""
    _check_params(p, n, L)
    points = ball(p, n, L)
    return _build(p, n, L, points, lambda x: _left_mult(x, "u", p, n))


def disjoint_union(a: AmalgamData, b: AmalgamData, Ya=(), Yb=()):
    """Tagged disjoint union of two windows; returns ``(data, Y)``."""
    if (a.p, a.n) != (b.p, b.n):
        raise AmalgamError("parameters differ")
    pts = [(0, x) for x in a.points] + [(1, x) for x in b.points]
    t = FinPerm.from_function(pts, lambda q: (q[0], (a.t if q[0] == 0 else b.t)(q[1])))
    u = FinPerm.from_function(pts, lambda q: (q[0], (a.u if q[0] == 0 else b.u)(q[1])))
    interior = frozenset([(0, x) for x in a.interior] + [(1, x) for x in b.interior])
    Y = [(0, x) for x in Ya] + [(1, x) for x in Yb]
    return AmalgamData(a.p, a.n, t, u, interior), Y


def random_enlargement(d: AmalgamData, Y, rng: random.Random, extra: Optional[int] = None) -> list:
    """Y plus a few random u-orbits lying entirely in the interior."""
    Y = set(Y)
    seen, candidates = set(Y), []
    for x in d.points:
        if x in seen:
            continue
        orb = d.u.orbit(x)
        seen.update(orb)
        if all(y in d.interior for y in orb):
            candidates.append(orb)
    k = rng.randint(1, max(1, min(len(candidates), 6))) if extra is None else extra
    for orb in rng.sample(candidates, min(k, len(candidates))):
        Y.update(orb)
    return sorted(Y, key=d.t.index_of)
