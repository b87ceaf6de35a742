"""Near maps: finitely many rigid pieces on rects plus a finite exception table.

A :class:`NearMap` from carrier ``src`` to carrier ``dst`` is given by pieces
``(source rect, target cell, signed-affine transform)`` with disjoint sources
covering ``src`` up to a finite set, and a finite table of exceptions
``point -> point`` or ``point -> None`` (undefined) that override the pieces.

The index uses the banker convention: the shift ``n -> n+1`` on N has index
+1, i.e. ``index = |dst minus image| - |src minus domain|`` for an injective
representative.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, Optional

import numpy as np

from . import _kernels
from .carrier import (
    INF,
    Carrier,
    CarrierError,
    Point,
    Rect,
    RectSet,
    point_rect,
    rect_intersect,
    rectset_normalize,
)


class NearMapError(ValueError):
    """Invalid near map data or an operation outside its domain."""


class InfiniteSetError(NearMapError):
    """A set that the operation needs to be finite is infinite."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


# ---------------------------------------------------------------- transforms

@dataclass(frozen=True)
class Transform:
    """``y[i] = signs[i] * x[perm[i]] + t[i]``: a signed permutation plus translation."""

    perm: tuple
    signs: tuple
    t: tuple

    def __post_init__(self):
        d = len(self.perm)
        if sorted(self.perm) != list(range(d)) or len(self.signs) != d or len(self.t) != d:
            raise NearMapError("transform must be a signed permutation with a translation")
        if any(s not in (1, -1) for s in self.signs):
            raise NearMapError("signs must be +1 or -1")

    @classmethod
    def identity(cls, d):
        return cls(tuple(range(d)), (1,) * d, (0,) * d)

    @classmethod
    def translation(cls, t):
        d = len(t)
        return cls(tuple(range(d)), (1,) * d, tuple(t))

    @classmethod
    def from_matrix(cls, P, t):
        perm, signs = [], []
        for row in P:
            nz = [(j, v) for j, v in enumerate(row) if v != 0]
            if len(nz) != 1 or nz[0][1] not in (1, -1):
                raise NearMapError(f"row {row} is not a signed unit row")
            perm.append(nz[0][0])
            signs.append(nz[0][1])
        return cls(tuple(perm), tuple(signs), tuple(int(x) for x in t))

    @property
    def dim(self):
        return len(self.perm)

    @property
    def is_translation(self):
        return self.perm == tuple(range(self.dim)) and all(s == 1 for s in self.signs)

    @property
    def is_identity(self):
        return self.is_translation and not any(self.t)

    def matrix(self):
        d = self.dim
        return [[self.signs[i] if j == self.perm[i] else 0 for j in range(d)] for i in range(d)]

    def apply(self, x):
        return tuple(s * x[j] + c for j, s, c in zip(self.perm, self.signs, self.t))

    def compose(self, other: "Transform") -> "Transform":
        """``self o other``."""
        perm = tuple(other.perm[j] for j in self.perm)
        signs = tuple(s * other.signs[j] for s, j in zip(self.signs, self.perm))
        t = tuple(s * other.t[j] + c for s, j, c in zip(self.signs, self.perm, self.t))
        return Transform(perm, signs, t)

    def inverse(self) -> "Transform":
        d = self.dim
        perm, signs, t = [0] * d, [1] * d, [0] * d
        for i, (j, s, c) in enumerate(zip(self.perm, self.signs, self.t)):
            perm[j] = i
            signs[j] = s
            t[j] = -s * c
        return Transform(tuple(perm), tuple(signs), tuple(t))

    def image(self, rect: Rect, cell: str) -> Rect:
        return Rect(cell, tuple(rect.axes[j].shift(s, c)
                                for j, s, c in zip(self.perm, self.signs, self.t)))


@dataclass(frozen=True)
class Piece:
    source: Rect
    target: str
    transform: Transform

    @property
    def image(self) -> Rect:
        return self.transform.image(self.source, self.target)

    def to_json(self):
        return {"source": self.source.to_json(), "target_cell": self.target,
                "P": self.transform.matrix(), "t": list(self.transform.t)}

    @classmethod
    def from_json(cls, d):
        return cls(Rect.from_json(d["source"]), str(d["target_cell"]),
                   Transform.from_matrix(d["P"], d["t"]))


def _effective_agree(a: Piece, b: Piece, region: Rect) -> bool:
    """Do two pieces give the same value at every point of ``region``?"""
    if a.target != b.target:
        return False
    ta, tb = a.transform, b.transform
    inv_a, inv_b = ta.inverse(), tb.inverse()
    # column j of the matrix: which output row reads input axis j, with what sign
    for j, ax in enumerate(region.axes):
        if ax.single:
            continue
        if inv_a.perm[j] != inv_b.perm[j] or inv_a.signs[j] != inv_b.signs[j]:
            return False
    x = region.some_point().coords
    return ta.apply(x) == tb.apply(x)


def _inside(rect: Rect, cell) -> bool:
    for dom, ax in zip(cell.axes, rect.axes):
        if dom.lo is not None and (ax.lo is None or ax.lo < dom.lo):
            return False
        if dom.hi is not None and (ax.hi is None or ax.hi > dom.hi):
            return False
    return len(cell.axes) == len(rect.axes)


# ------------------------------------------------------------------ near maps

class NearMap:
    """A near map ``src -> dst`` (see module docstring)."""

    __slots__ = ("src", "dst", "pieces", "exceptions", "_inv_cache")

    def __init__(self, src: Carrier, dst: Carrier, pieces: Iterable[Piece],
                 exceptions: Optional[Dict[Point, Optional[Point]]] = None, check=True):
        self.src = src
        self.dst = dst
        self.pieces = tuple(sorted(pieces, key=lambda p: p.source.key()))
        self.exceptions = dict(exceptions or {})
        self._inv_cache = None
        if check:
            self.validate()

    # -- construction helpers

    @classmethod
    def identity(cls, carrier: Carrier) -> "NearMap":
        return cls(carrier, carrier,
                   [Piece(c.full_rect(), c.id, Transform.identity(c.dim)) for c in carrier.cells],
                   check=False)

    @classmethod
    def from_permutation(cls, carrier: Carrier, mapping: Dict[Point, Point]) -> "NearMap":
        """Identity outside a finite table."""
        ident = cls.identity(carrier)
        return cls(carrier, carrier, ident.pieces, {k: v for k, v in mapping.items() if k != v})

    def validate(self):
        src, dst = self.src, self.dst
        for p in self.pieces:
            sc = src.cell(p.source.cell)
            tc = dst.cell(p.target)
            if sc.dim != tc.dim or p.transform.dim != sc.dim:
                raise NearMapError(f"piece {p.source} changes dimension")
            if not _inside(p.source, sc):
                raise NearMapError(f"piece source {p.source} leaves its cell")
            if not _inside(p.image, tc):
                raise NearMapError(f"image of {p.source} leaves cell {tc.id!r}")
        for i, a in enumerate(self.pieces):
            for b in self.pieces[i + 1:]:
                if rect_intersect(a.source, b.source) is not None:
                    raise NearMapError(f"piece sources {a.source} and {b.source} overlap")
        for k, v in self.exceptions.items():
            src.check_point(k)
            if v is not None:
                dst.check_point(v)
        covered = RectSet(src, [p.source for p in self.pieces])
        rest = src.full().diff(covered)
        if not rest.is_finite():
            raise NearMapError(f"pieces miss an infinite set: {rest}")
        missing = [p for p in rest.points() if p not in self.exceptions]
        if missing:
            raise NearMapError(f"points {missing[:5]} are neither in a piece nor in the exceptions")

    # -- evaluation

    def piece_at(self, x: Point) -> Optional[Piece]:
        for p in self.pieces:
            if p.source.contains(x):
                return p
        return None

    def __call__(self, x: Point) -> Optional[Point]:
        return self.evaluate(x)

    def evaluate(self, x: Point) -> Optional[Point]:
        if x in self.exceptions:
            return self.exceptions[x]
        p = self.piece_at(x)
        if p is None:
            raise CarrierError(f"point {x} is outside the source carrier")
        return Point(p.target, p.transform.apply(x.coords))

    def _piece_value(self, x: Point) -> Optional[Point]:
        p = self.piece_at(x)
        return None if p is None else Point(p.target, p.transform.apply(x.coords))

    def preimages(self, y: Point) -> list:
        """All x with f(x) = y, sorted."""
        out = [k for k, v in self.exceptions.items() if v == y]
        for p in self.pieces:
            if p.target != y.cell:
                continue
            x = Point(p.source.cell, p.transform.inverse().apply(y.coords))
            if p.source.contains(x) and x not in self.exceptions:
                out.append(x)
        return sorted(out)

    # -- structure

    def images(self):
        return [p.image for p in self.pieces]

    def _overlaps(self):
        imgs = self.images()
        out = []
        for i in range(len(imgs)):
            for j in range(i + 1, len(imgs)):
                m = rect_intersect(imgs[i], imgs[j])
                if m is not None:
                    out.append(m)
        return out

    def closely_injective(self) -> bool:
        return all(m.finite for m in self._overlaps())

    def uncovered(self) -> RectSet:
        """dst minus the union of piece images."""
        return self.dst.full().diff(RectSet(self.dst, self.images()))

    def closely_surjective(self) -> bool:
        return self.uncovered().is_finite()

    def _anomaly_candidates(self) -> set:
        """Finite set of targets outside of which every point has exactly one preimage.

        Only meaningful for closely bijective maps.
        """
        cand = set()
        for m in self._overlaps():
            cand.update(m.points())
        cand.update(self.uncovered().points())
        cand.update(v for v in self.exceptions.values() if v is not None)
        for k in self.exceptions:
            v = self._piece_value(k)
            if v is not None:
                cand.add(v)
        return cand

    def defect_counts(self):
        """``(missing, undefined, excess)`` for a closely bijective map.

        ``missing`` counts targets without preimage, ``undefined`` counts
        undefined points, ``excess`` counts surplus preimages.
        """
        missing = excess = 0
        for y in self._anomaly_candidates():
            n = len(self.preimages(y))
            if n == 0:
                missing += 1
            else:
                excess += n - 1
        undefined = sum(1 for v in self.exceptions.values() if v is None)
        return missing, undefined, excess

    def is_bijection(self) -> bool:
        if not (self.closely_injective() and self.closely_surjective()):
            return False
        return self.defect_counts() == (0, 0, 0)

    # -- serialisation

    def to_json(self):
        items = sorted(self.exceptions.items(), key=lambda kv: (kv[0].cell, kv[0].coords))
        return {
            "src": self.src.to_json(),
            "dst": self.dst.to_json(),
            "pieces": [p.to_json() for p in self.pieces],
            "exceptions": [{"from": k.to_json(), "to": None if v is None else v.to_json()}
                           for k, v in items],
        }

    @classmethod
    def from_json(cls, d, check=True):
        src = Carrier.from_json(d["src"])
        dst = Carrier.from_json(d["dst"])
        pieces = [Piece.from_json(p) for p in d["pieces"]]
        exc = {}
        for e in d.get("exceptions", []):
            k = Point.from_json(e["from"])
            if k in exc:
                raise NearMapError(f"duplicate exception key {k}")
            exc[k] = None if e.get("to") is None else Point.from_json(e["to"])
        return cls(src, dst, pieces, exc, check=check)

    def __repr__(self):
        return f"NearMap({len(self.pieces)} pieces, {len(self.exceptions)} exceptions)"


# ------------------------------------------------------------ public calculus

def evaluate(f: NearMap, x: Point) -> Optional[Point]:
    return f.evaluate(x)


def classify_bijectivity(f: NearMap) -> dict:
    return {"closely_injective": f.closely_injective(),
            "closely_surjective": f.closely_surjective()}


def _tidy(src, dst, pieces, exceptions) -> NearMap:
    """Drop redundant exceptions and merge pieces sharing a transform."""
    groups = {}
    for p in pieces:
        groups.setdefault((p.target, p.transform), []).append(p.source)
    merged = []
    for (target, tr), sources in groups.items():
        for r in rectset_normalize(src, sources).rects:
            merged.append(Piece(r, target, tr))
    f = NearMap(src, dst, merged, check=False)
    exc = {}
    for k, v in exceptions.items():
        if v is None or f._piece_value(k) != v:
            exc[k] = v
    f.exceptions = exc
    return f


def compose(g: NearMap, f: NearMap) -> NearMap:
    """``g o f`` (apply f first)."""
    if f.dst != g.src:
        raise NearMapError("compose: f.dst differs from g.src")
    pieces = []
    for pf in f.pieces:
        img = pf.image
        inv = pf.transform.inverse()
        for pg in g.pieces:
            m = rect_intersect(img, pg.source)
            if m is None:
                continue
            region = inv.image(m, pf.source.cell)
            pieces.append(Piece(region, pg.target, pg.transform.compose(pf.transform)))
    special = set(f.exceptions)
    for y in g.exceptions:
        special.update(f.preimages(y))
    exc = {}
    for x in special:
        y = f.evaluate(x)
        exc[x] = None if y is None else g.evaluate(y)
    return _tidy(f.src, g.dst, pieces, exc)


def invert(f: NearMap) -> NearMap:
    """A near inverse of a closely bijective map (exact inverse off a finite set)."""
    if f._inv_cache is not None:
        return f._inv_cache
    if not f.closely_injective():
        raise NearMapError("invert: map is not closely injective")
    if not f.closely_surjective():
        raise NearMapError("invert: map is not closely surjective")
    pieces = []
    seen = []
    for p in f.pieces:
        region = RectSet(f.dst, [p.image], canonical=True)
        if seen:
            region = region.diff(RectSet(f.dst, seen))
        inv = p.transform.inverse()
        for r in region.rects:
            pieces.append(Piece(r, p.source.cell, inv))
        seen.append(p.image)
    exc = {}
    for y in f._anomaly_candidates():
        pre = f.preimages(y)
        exc[y] = pre[0] if pre else None
    g = _tidy(f.dst, f.src, pieces, exc)
    f._inv_cache = g
    return g


def _pairs(f: NearMap, g: NearMap):
    for a in f.pieces:
        for b in g.pieces:
            m = rect_intersect(a.source, b.source)
            if m is not None:
                yield a, b, m


def near_equal(f: NearMap, g: NearMap) -> bool:
    """Graphs differ on a finite set only."""
    if f.src != g.src or f.dst != g.dst:
        return False
    for a, b, m in _pairs(f, g):
        if not m.finite and not _effective_agree(a, b, m):
            return False
    return True


def disagreement(f: NearMap, g: NearMap) -> list:
    """Sorted finite list of points where f and g differ (undefined counts as a value)."""
    if f.src != g.src:
        raise NearMapError("disagreement: different sources")
    keys = set(f.exceptions) | set(g.exceptions)
    out = set()
    for a, b, m in _pairs(f, g):
        if _effective_agree(a, b, m):
            continue
        if not m.finite:
            raise InfiniteSetError(f"maps disagree on the infinite rect {m}", witness=m)
        for x in m.points():
            if x not in keys:
                out.add(x)
    for x in keys:
        if f.evaluate(x) != g.evaluate(x):
            out.add(x)
    return sorted(out, key=lambda p: (f.src.order(p.cell), p.coords))


def graph_equal(f: NearMap, g: NearMap) -> bool:
    if f.src != g.src or f.dst != g.dst:
        return False
    try:
        return not disagreement(f, g)
    except InfiniteSetError:
        return False


def index(f: NearMap):
    """Banker index: an int, or +/- math.inf for one-sided maps."""
    ci, cs = f.closely_injective(), f.closely_surjective()
    if ci and cs:
        missing, undefined, excess = f.defect_counts()
        return missing - undefined - excess
    if ci:
        return INF
    if cs:
        return -INF
    raise NearMapError("index: map is neither closely injective nor closely surjective")


def support(f: NearMap) -> list:
    """Points moved by a self-map (undefined points included)."""
    if f.src != f.dst:
        raise NearMapError("support needs a self-map")
    return disagreement(f, NearMap.identity(f.src))


def is_finitely_supported(f: NearMap) -> bool:
    if f.src != f.dst:
        return False
    try:
        support(f)
    except InfiniteSetError:
        return False
    return f.is_bijection()


def _finite_perm_array(f: NearMap):
    if f.src != f.dst:
        raise NearMapError("not a self-map")
    try:
        supp = support(f)
    except InfiniteSetError as e:
        raise NearMapError("map has infinite support") from e
    idx = {p: i for i, p in enumerate(supp)}
    arr = np.empty(len(supp), dtype=np.int64)
    for p, i in idx.items():
        y = f.evaluate(p)
        if y is None or y not in idx:
            raise NearMapError(f"not a permutation at {p}")
        arr[i] = idx[y]
    if len(set(arr.tolist())) != len(arr):
        raise NearMapError("not a permutation: two points share an image")
    return supp, arr


def cycle_type(f: NearMap) -> Counter:
    """Multiset of lengths (>1) of the cycles of a finitely supported permutation."""
    _, arr = _finite_perm_array(f)
    return Counter(int(x) for x in _kernels.cycle_lengths(arr) if x > 1)


def cycles(f: NearMap) -> list:
    """Nontrivial cycles as lists of points, each starting at its smallest point."""
    supp, arr = _finite_perm_array(f)
    seen, out = set(), []
    for i in range(len(supp)):
        if i in seen:
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(supp[j])
            j = int(arr[j])
        out.append(cyc)
    return out


def parity(f: NearMap) -> int:
    ct = cycle_type(f)
    return sum((k - 1) * n for k, n in ct.items()) % 2


def commutator(f: NearMap, g: NearMap) -> NearMap:
    """``f g f^-1 g^-1``."""
    return compose(f, compose(g, compose(invert(f), invert(g))))


def power(f: NearMap, n: int) -> NearMap:
    if f.src != f.dst:
        raise NearMapError("power needs a self-map")
    if n < 0:
        return power(invert(f), -n)
    result = NearMap.identity(f.src)
    base = f
    while n:
        if n & 1:
            result = compose(base, result)
        n >>= 1
        if n:
            base = compose(base, base)
    return result


@dataclass(frozen=True)
class FixedSet:
    """Fixed points as a rect union plus finite corrections."""

    rects: RectSet
    added: frozenset
    removed: frozenset

    def is_finite(self) -> bool:
        return self.rects.is_finite()

    def card(self):
        c = self.rects.card()
        return c if c == INF else c + len(self.added) - len(self.removed)

    def contains(self, p: Point) -> bool:
        if p in self.removed:
            return False
        return p in self.added or self.rects.contains(p)


def _piece_fixed(p: Piece):
    """Fixed points of one piece: ('rect', Rect) or ('points', list)."""
    src = p.source
    if p.target != src.cell:
        return "points", []
    tr = p.transform
    axes = list(src.axes)
    cyc_axes = []
    for i, (j, s, c) in enumerate(zip(tr.perm, tr.signs, tr.t)):
        if j != i:
            cyc_axes.append(i)
            continue
        if s == 1:
            if c != 0:
                return "points", []
        else:
            if c % 2 or not axes[i].contains(c // 2):
                return "points", []
            axes[i] = type(axes[i])(c // 2, c // 2, 0, 1)
    r = Rect(src.cell, tuple(axes))
    if not cyc_axes:
        return "rect", r
    if not r.finite:
        # axis-swapping pieces would give diagonal fixed sets; enumerate when bounded
        if all(r.axes[i].finite for i in cyc_axes):
            pass
        else:
            raise NearMapError("fixed set of an axis-swapping piece is not a rect union")
    pts = [x for x in r.points() if tr.apply(x.coords) == x.coords]
    return "points", pts


def fixed_set(f: NearMap) -> FixedSet:
    if f.src != f.dst:
        raise NearMapError("fixed_set needs a self-map")
    rects, added, removed = [], set(), set()
    for p in f.pieces:
        kind, val = _piece_fixed(p)
        if kind == "rect":
            rects.append(val)
        else:
            added.update(x for x in val if x not in f.exceptions)
    rs = RectSet(f.src, rects)
    for k, v in f.exceptions.items():
        if v == k:
            if not rs.contains(k):
                added.add(k)
        elif rs.contains(k):
            removed.add(k)
    return FixedSet(rs, frozenset(added), frozenset(removed))


def translation_map(carrier: Carrier, t, cells=None) -> NearMap:
    """Translate each listed cell by ``t``; clipped where it would leave the cell.

    Points whose image leaves the cell become undefined.
    """
    cells = [c.id for c in carrier.cells] if cells is None else list(cells)
    tr = Transform.translation(t)
    inv = tr.inverse()
    pieces, exc = [], {}
    for c in carrier.cells:
        if c.id not in cells:
            pieces.append(Piece(c.full_rect(), c.id, Transform.identity(c.dim)))
            continue
        full = c.full_rect()
        pre = rect_intersect(full, inv.image(full, c.id))
        if pre is not None:
            pieces.append(Piece(pre, c.id, tr))
        rest = RectSet(carrier, [full], canonical=True)
        if pre is not None:
            rest = rest.diff(RectSet(carrier, [pre], canonical=True))
        if not rest.is_finite():
            raise NearMapError("translation leaves the cell on an infinite set")
        for x in rest.points():
            exc[x] = None
    return NearMap(carrier, carrier, pieces, exc)


def exceptions_map(carrier: Carrier, table: Dict[Point, Optional[Point]]) -> NearMap:
    """Identity pieces overridden by a table (for finite surgery)."""
    return NearMap(carrier, carrier, NearMap.identity(carrier).pieces, dict(table))


def point_as_rect(p: Point) -> Rect:
    return point_rect(p)
