"""Countable carriers built from lattice cells, and exact rectangle-union sets.

A carrier is a finite list of cells; a cell is a product of at most four
axes, each one of ``Z``, ``N`` or ``{0..n-1}``.  Subsets are finite unions of
*rects*: products of strided intervals ``{x : lo <= x <= hi, x = r mod q}``
with possibly infinite ends.  Everything here is exact; infinity is encoded
by ``None`` bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import _kernels

MAX_DIM = 4
INF = math.inf


class CarrierError(ValueError):
    """Raised for malformed cells, carriers, points or rects."""


# --------------------------------------------------------------------- axes

@dataclass(frozen=True)
class AxisDomain:
    kind: str  # "full" | "half" | "bounded"
    n: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("full", "half", "bounded"):
            raise CarrierError(f"unknown axis kind {self.kind!r}")
        if self.kind == "bounded":
            if self.n is None or self.n < 1:
                raise CarrierError("bounded axis needs n >= 1")
        elif self.n is not None:
            raise CarrierError(f"{self.kind} axis takes no size")

    @classmethod
    def full(cls):
        return cls("full")

    @classmethod
    def half(cls):
        return cls("half")

    @classmethod
    def bounded(cls, n):
        return cls("bounded", n)

    @property
    def lo(self):
        return None if self.kind == "full" else 0

    @property
    def hi(self):
        return self.n - 1 if self.kind == "bounded" else None

    def contains(self, x: int) -> bool:
        return (self.lo is None or x >= self.lo) and (self.hi is None or x <= self.hi)

    def constraint(self) -> "AxisConstraint":
        return AxisConstraint(self.lo, self.hi, 0, 1)

    def to_json(self):
        d = {"kind": self.kind}
        if self.kind == "bounded":
            d["n"] = self.n
        return d

    @classmethod
    def from_json(cls, d):
        return cls(d["kind"], d.get("n"))


@dataclass(frozen=True)
class Cell:
    id: str
    axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if len(self.axes) > MAX_DIM:
            raise CarrierError(f"cell {self.id!r} has dimension > {MAX_DIM}")

    @property
    def dim(self) -> int:
        return len(self.axes)

    def full_rect(self) -> "Rect":
        return Rect(self.id, tuple(a.constraint() for a in self.axes))

    def contains(self, coords) -> bool:
        return len(coords) == self.dim and all(a.contains(c) for a, c in zip(self.axes, coords))

    def to_json(self):
        return {"id": self.id, "axes": [a.to_json() for a in self.axes]}

    @classmethod
    def from_json(cls, d):
        return cls(str(d["id"]), tuple(AxisDomain.from_json(a) for a in d["axes"]))


class Point(NamedTuple):
    cell: str
    coords: tuple

    def to_json(self):
        return {"cell": self.cell, "coords": list(self.coords)}

    @classmethod
    def from_json(cls, d):
        return cls(str(d["cell"]), tuple(int(c) for c in d["coords"]))

    def __str__(self):
        return f"{self.cell}{list(self.coords)}"


def pt(cell, *coords) -> Point:
    return Point(cell, tuple(coords))


@dataclass(frozen=True)
class Carrier:
    cells: tuple

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise CarrierError("a carrier needs at least one cell")
        ids = [c.id for c in self.cells]
        if len(set(ids)) != len(ids):
            raise CarrierError("cell ids must be distinct")
        object.__setattr__(self, "_by_id", {c.id: c for c in self.cells})
        object.__setattr__(self, "_order", {c.id: i for i, c in enumerate(self.cells)})

    def cell(self, cid: str) -> Cell:
        try:
            return self._by_id[cid]
        except KeyError:
            raise CarrierError(f"no cell {cid!r}") from None

    def has_cell(self, cid) -> bool:
        return cid in self._by_id

    def order(self, cid) -> int:
        return self._order[cid]

    def contains(self, p: Point) -> bool:
        return p.cell in self._by_id and self._by_id[p.cell].contains(p.coords)

    def check_point(self, p: Point) -> Point:
        if not self.contains(p):
            raise CarrierError(f"point {p} is not in the carrier")
        return p

    def full(self) -> "RectSet":
        return RectSet(self, [c.full_rect() for c in self.cells], canonical=True)

    def to_json(self):
        return {"cells": [c.to_json() for c in self.cells]}

    @classmethod
    def from_json(cls, d):
        return cls(tuple(Cell.from_json(c) for c in d["cells"]))


# -------------------------------------------------------- strided intervals

def _le(a, b):
    """a <= b where None on the left means -inf (only used for lo values)."""
    return a is None or (b is not None and a <= b)


def _max_lo(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _min_hi(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _crt(r1, q1, r2, q2):
    """Solve x = r1 mod q1, x = r2 mod q2.  Returns (r, lcm) or None."""
    g = math.gcd(q1, q2)
    if (r2 - r1) % g:
        return None
    lcm = q1 // g * q2
    m = q2 // g
    k = ((r2 - r1) // g) * pow(q1 // g, -1, m) % m if m > 1 else 0
    return (r1 + q1 * k) % lcm, lcm


@dataclass(frozen=True)
class AxisConstraint:
    """Strided interval; build with :func:`constraint` to get canonical form."""

    lo: Optional[int]
    hi: Optional[int]
    r: int = 0
    q: int = 1

    @property
    def finite(self) -> bool:
        return self.lo is not None and self.hi is not None

    @property
    def single(self) -> bool:
        return self.finite and self.lo == self.hi

    def card(self):
        if not self.finite:
            return INF
        return (self.hi - self.lo) // self.q + 1

    def contains(self, x: int) -> bool:
        return ((self.lo is None or x >= self.lo) and (self.hi is None or x <= self.hi)
                and (x - self.r) % self.q == 0)

    def values(self, lo=None, hi=None):
        """Members inside the (finite) clip window [lo, hi]."""
        a = _max_lo(self.lo, lo)
        b = _min_hi(self.hi, hi)
        if a is None or b is None:
            raise CarrierError("cannot list an unbounded constraint")
        a += (self.r - a) % self.q
        return range(a, b + 1, self.q) if a <= b else range(0)

    def first(self) -> int:
        """Some member, preferring one close to zero."""
        if self.lo is not None:
            return self.lo
        if self.hi is not None:
            return self.hi
        return self.r

    def shift(self, sign: int, t: int) -> "AxisConstraint":
        """Image under x -> sign*x + t."""
        if sign == 1:
            lo = None if self.lo is None else self.lo + t
            hi = None if self.hi is None else self.hi + t
            r = self.r + t
        else:
            lo = None if self.hi is None else t - self.hi
            hi = None if self.lo is None else t - self.lo
            r = t - self.r
        return constraint(lo, hi, r, self.q)

    def key(self):
        return (self.lo is not None, self.lo if self.lo is not None else 0,
                self.hi is None, self.hi if self.hi is not None else 0, self.q, self.r)

    def to_json(self):
        return {"lo": self.lo, "hi": self.hi, "r": self.r, "q": self.q}

    @classmethod
    def from_json(cls, d):
        c = constraint(d["lo"], d["hi"], d.get("r", 0), d.get("q", 1))
        if c is None:
            raise CarrierError(f"empty axis constraint {d}")
        return c

    def __str__(self):
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "+inf" if self.hi is None else str(self.hi)
        s = f"[{lo},{hi}]"
        return s if self.q == 1 else f"{s}%{self.q}={self.r}"


def constraint(lo, hi, r=0, q=1) -> Optional[AxisConstraint]:
    """Canonical strided interval, or None when empty."""
    if q < 1:
        raise CarrierError("modulus must be positive")
    r %= q
    if lo is not None:
        lo += (r - lo) % q
    if hi is not None:
        hi -= (hi - r) % q
    if lo is not None and hi is not None:
        if lo > hi:
            return None
        if lo == hi:
            return AxisConstraint(lo, hi, 0, 1)
    return AxisConstraint(lo, hi, r, q)


def meet(a: AxisConstraint, b: AxisConstraint) -> Optional[AxisConstraint]:
    sol = _crt(a.r, a.q, b.r, b.q)
    if sol is None:
        return None
    return constraint(_max_lo(a.lo, b.lo), _min_hi(a.hi, b.hi), sol[0], sol[1])


def axis_diff(a: AxisConstraint, b: AxisConstraint) -> list:
    """a minus b as a list of disjoint constraints."""
    m = meet(a, b)
    if m is None:
        return [a]
    out = []
    if m.lo is not None:
        c = constraint(a.lo, m.lo - 1, a.r, a.q)
        if c is not None:
            out.append(c)
    sol = _crt(a.r, a.q, b.r, b.q)
    res_b, lcm = sol
    for j in range(lcm // a.q):
        res = (a.r + j * a.q) % lcm
        if res != res_b:
            c = constraint(m.lo, m.hi, res, lcm)
            if c is not None:
                out.append(c)
    if m.hi is not None:
        c = constraint(m.hi + 1, a.hi, a.r, a.q)
        if c is not None:
            out.append(c)
    return out


def _axis_merge(a: AxisConstraint, b: AxisConstraint) -> Optional[AxisConstraint]:
    """A single constraint equal to the disjoint union a | b, if one exists."""
    cands = []
    lo = None if (a.lo is None or b.lo is None) else min(a.lo, b.lo)
    hi = None if (a.hi is None or b.hi is None) else max(a.hi, b.hi)
    if a.q == b.q:
        if a.r == b.r:
            cands.append(constraint(lo, hi, a.r, a.q))
        elif a.q % 2 == 0 and (a.r - b.r) % a.q == a.q // 2:
            cands.append(constraint(lo, hi, a.r, a.q // 2))
    for c in cands:
        if c is None:
            continue
        rest = [p for x in axis_diff(c, a) for p in axis_diff(x, b)]
        if not rest:
            return c
    return None


# -------------------------------------------------------------------- rects

@dataclass(frozen=True)
class Rect:
    cell: str
    axes: tuple  # of AxisConstraint

    @property
    def dim(self):
        return len(self.axes)

    @property
    def finite(self) -> bool:
        return all(a.finite for a in self.axes)

    def card(self):
        if not self.finite:
            return INF
        return math.prod(a.card() for a in self.axes)

    def contains(self, p: Point) -> bool:
        return (p.cell == self.cell and len(p.coords) == len(self.axes)
                and all(a.contains(x) for a, x in zip(self.axes, p.coords)))

    def points(self):
        """All points of a finite rect, in lexicographic order."""
        if not self.finite:
            raise CarrierError("cannot enumerate an infinite rect")
        for coords in itertools.product(*(a.values() for a in self.axes)):
            yield Point(self.cell, coords)

    def some_point(self) -> Point:
        return Point(self.cell, tuple(a.first() for a in self.axes))

    def key(self):
        return (self.cell, tuple(a.key() for a in self.axes))

    def to_json(self):
        return {"cell": self.cell, "axes": [a.to_json() for a in self.axes]}

    @classmethod
    def from_json(cls, d):
        return cls(str(d["cell"]), tuple(AxisConstraint.from_json(a) for a in d["axes"]))

    def __str__(self):
        return f"{self.cell}:" + "x".join(str(a) for a in self.axes)


def make_rect(carrier: Carrier, cell: str, *bounds) -> Optional[Rect]:
    """Rect from per-axis tuples ``(lo, hi)`` or ``(lo, hi, r, q)``, clipped to the cell."""
    c = carrier.cell(cell)
    if len(bounds) != c.dim:
        raise CarrierError(f"cell {cell!r} has dimension {c.dim}")
    axes = []
    for dom, b in zip(c.axes, bounds):
        lo, hi, *rest = b
        r, q = rest if rest else (0, 1)
        a = constraint(lo, hi, r, q)
        if a is None:
            return None
        a = meet(a, dom.constraint())
        if a is None:
            return None
        axes.append(a)
    return Rect(cell, tuple(axes))


def point_rect(p: Point) -> Rect:
    return Rect(p.cell, tuple(AxisConstraint(x, x, 0, 1) for x in p.coords))


def rect_intersect(a: Rect, b: Rect) -> Optional[Rect]:
    if a.cell != b.cell or a.dim != b.dim:
        return None
    axes = []
    for x, y in zip(a.axes, b.axes):
        m = meet(x, y)
        if m is None:
            return None
        axes.append(m)
    return Rect(a.cell, tuple(axes))


def rect_diff(a: Rect, b: Rect) -> list:
    """a minus b as disjoint rects; returns [a] untouched when they are disjoint."""
    if rect_intersect(a, b) is None:
        return [a]
    out = []
    prefix = list(a.axes)
    for i in range(a.dim):
        for piece in axis_diff(a.axes[i], b.axes[i]):
            axes = prefix[:i] + [piece] + list(a.axes[i + 1:])
            out.append(Rect(a.cell, tuple(axes)))
        prefix[i] = meet(a.axes[i], b.axes[i])
    return out


def _merge_pass(rects: list) -> list:
    rects = list(rects)
    changed = True
    while changed:
        changed = False
        for i, j in itertools.combinations(range(len(rects)), 2):
            a, b = rects[i], rects[j]
            if a.cell != b.cell:
                continue
            diff_axes = [k for k in range(a.dim) if a.axes[k] != b.axes[k]]
            if len(diff_axes) != 1:
                continue
            k = diff_axes[0]
            m = _axis_merge(a.axes[k], b.axes[k])
            if m is None:
                continue
            rects[i] = Rect(a.cell, a.axes[:k] + (m,) + a.axes[k + 1:])
            del rects[j]
            changed = True
            break
    return rects


class RectSet:
    """Finite disjoint union of rects over a fixed carrier, in canonical order."""

    __slots__ = ("carrier", "rects")

    def __init__(self, carrier: Carrier, rects: Iterable[Rect] = (), canonical=False):
        self.carrier = carrier
        if canonical:
            self.rects = tuple(sorted(rects, key=Rect.key))
        else:
            self.rects = rectset_normalize(carrier, list(rects)).rects

    @classmethod
    def of_points(cls, carrier, points):
        return cls(carrier, [point_rect(p) for p in points])

    def __iter__(self):
        return iter(self.rects)

    def __len__(self):
        return len(self.rects)

    def __eq__(self, other):
        return isinstance(other, RectSet) and self.carrier == other.carrier and self.rects == other.rects

    def __hash__(self):
        return hash(self.rects)

    def __repr__(self):
        return "RectSet{" + ", ".join(str(r) for r in self.rects) + "}"

    def is_empty(self) -> bool:
        return not self.rects

    def is_finite(self) -> bool:
        return all(r.finite for r in self.rects)

    def card(self):
        return rectset_card(self)

    def contains(self, p: Point) -> bool:
        return any(r.contains(p) for r in self.rects)

    def points(self):
        """Points of a finite set, deterministic order."""
        out = [p for r in self.rects for p in r.points()]
        return sorted(out, key=lambda p: (self.carrier.order(p.cell), p.coords))

    def union(self, other: "RectSet") -> "RectSet":
        return RectSet(self.carrier, list(self.rects) + list(other.rects))

    def diff(self, other: "RectSet") -> "RectSet":
        return rectset_diff(self, other)

    def intersect(self, other: "RectSet") -> "RectSet":
        out = []
        for a in self.rects:
            for b in other.rects:
                m = rect_intersect(a, b)
                if m is not None:
                    out.append(m)
        return RectSet(self.carrier, out)

    def same_set(self, other: "RectSet") -> bool:
        return self.diff(other).is_empty() and other.diff(self).is_empty()

    def mask(self, points: Sequence[Point], backend=None) -> np.ndarray:
        """Vectorised membership test for many points."""
        out = np.zeros(len(points), dtype=np.bool_)
        by_cell = {}
        for i, p in enumerate(points):
            by_cell.setdefault(p.cell, []).append(i)
        for r in self.rects:
            idx = by_cell.get(r.cell)
            if not idx:
                continue
            if r.dim == 0:
                out[idx] = True
                continue
            coords = np.array([points[i].coords for i in idx], dtype=np.int64).reshape(len(idx), r.dim)
            lo = [a.lo if a.lo is not None else 0 for a in r.axes]
            hi = [a.hi if a.hi is not None else 0 for a in r.axes]
            m = _kernels.rect_mask(coords, lo, hi, [a.lo is not None for a in r.axes],
                                   [a.hi is not None for a in r.axes],
                                   [a.r for a in r.axes], [a.q for a in r.axes], backend=backend)
            out[np.asarray(idx)[m]] = True
        return out

    def to_json(self):
        return [r.to_json() for r in self.rects]

    @classmethod
    def from_json(cls, carrier, data):
        return cls(carrier, [Rect.from_json(d) for d in data])


def rectset_normalize(carrier: Carrier, rects: Sequence[Rect]) -> RectSet:
    """Disjoint canonical form of a union of possibly overlapping rects."""
    out: list = []
    for r in rects:
        if not carrier.has_cell(r.cell):
            raise CarrierError(f"rect on unknown cell {r.cell!r}")
        frags = [r]
        for s in out:
            frags = [f for x in frags for f in rect_diff(x, s)]
            if not frags:
                break
        out.extend(frags)
    return RectSet(carrier, _merge_pass(out), canonical=True)


def rectset_diff(a: RectSet, b: RectSet) -> RectSet:
    frags = list(a.rects)
    for s in b.rects:
        frags = [f for x in frags for f in rect_diff(x, s)]
    return RectSet(a.carrier, _merge_pass(frags), canonical=True)


def rectset_card(a: RectSet):
    total = 0
    for r in a.rects:
        c = r.card()
        if c == INF:
            return INF
        total += c
    return total


def window_rect(carrier: Carrier, cell: str, radius: int) -> Rect:
    """The part of a cell with every unbounded coordinate in [-R, R]."""
    c = carrier.cell(cell)
    axes = []
    for dom in c.axes:
        if dom.kind == "bounded":
            axes.append(dom.constraint())
        else:
            axes.append(constraint(_max_lo(dom.lo, -radius), radius))
    return Rect(cell, tuple(axes))


def enumerate_window(a: Union[RectSet, Carrier], radius: int) -> list:
    """Points with every coordinate of absolute value at most R.

    Bounded axes are always listed in full.  Order: carrier cell order, then
    lexicographic coordinates.
    """
    if radius < 0:
        raise CarrierError("radius must be non-negative")
    rs = a.full() if isinstance(a, Carrier) else a
    carrier = rs.carrier
    win = {c.id: window_rect(carrier, c.id, radius) for c in carrier.cells}
    pts = []
    for r in rs.rects:
        m = rect_intersect(r, win[r.cell])
        if m is not None:
            pts.extend(m.points())
    pts.sort(key=lambda p: (carrier.order(p.cell), p.coords))
    return pts
