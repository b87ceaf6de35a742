"""Classification of finite-type near Z^2-sets, and ends of near Z^d-sets.

The action must come as a graded atlas: every cell is a two-dimensional box
and the pieces of both lifts and their inverses are stride-free translations.
Beyond a threshold T every cell splits into four corners, unit-width strips
and a bounded middle.  Stepping along the left boundary of each corner or
strip with the appropriate generator gives the corner graph; after strips are
contracted every component is a cycle of length 4m, and the translation
offsets picked up along the way add up to the holonomy s.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .carrier import Carrier, Cell, Point, Rect, make_rect, rect_intersect
from .nearaction import ActionError, NearAction, near_free_check
from .nearmap import (
    InfiniteSetError,
    NearMap,
    NearMapError,
    Piece,
    Transform,
    commutator,
    compose,
    disagreement,
    parity,
)


class AtlasError(ValueError):
    """The action is not presented as a graded Z^2 atlas."""


class GraphError(ValueError):
    """The corner graph is not a disjoint union of well-formed cycles."""


CORNERS = ("UR", "UL", "LL", "LR")
# (fixed axis, fixed side, ray direction along the other axis, map key, standard step)
_CORNER_RULE = {
    "UR": (0, +1, +1, "u'", (-1, 0)),
    "UL": (1, +1, -1, "v'", (0, -1)),
    "LL": (0, -1, -1, "u", (1, 0)),
    "LR": (1, -1, +1, "v", (0, 1)),
}
_STRIP_RULE = {
    "up": ("u'", (-1, 0)),
    "left": ("v'", (0, -1)),
    "down": ("u", (1, 0)),
    "right": ("v", (0, 1)),
}


@dataclass(frozen=True)
class GradedRectangle:
    rect: Rect
    kind: str  # corner | strip | bounded
    label: str  # UR/UL/LL/LR, up/left/down/right, or bounded
    offset: tuple = (0, 0)
    line: Optional[int] = None  # the fixed coordinate of a strip

    @property
    def cell(self):
        return self.rect.cell

    def name(self):
        if self.kind == "strip":
            return f"{self.cell}:{self.label}@{self.line}"
        return f"{self.cell}:{self.label}"

    def to_json(self):
        return {"rect": self.rect.to_json(), "type": self.kind, "label": self.label,
                "offset": list(self.offset)}


@dataclass
class Decomposition:
    threshold: int
    rectangles: List[GradedRectangle]
    leftover: List[Point]
    maps: Dict[str, NearMap]

    @property
    def corners(self):
        return [r for r in self.rectangles if r.kind == "corner"]


@dataclass
class CornerGraph:
    vertices: List[GradedRectangle]
    succ: Dict[int, Tuple[int, tuple]]  # vertex -> (next vertex, translation offset)

    def to_dot(self) -> str:
        lines = ["digraph corners {"]
        for i, v in enumerate(self.vertices):
            shape = "box" if v.kind == "corner" else "ellipse"
            lines.append(f'  n{i} [label="{v.name()}", shape={shape}];')
        for i, (j, d) in sorted(self.succ.items()):
            lab = f' [label="{d[0]},{d[1]}"]' if any(d) else ""
            lines.append(f"  n{i} -> n{j}{lab};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return {"vertices": [v.name() for v in self.vertices],
                "edges": [[i, j, list(d)] for i, (j, d) in sorted(self.succ.items())]}


@dataclass(frozen=True)
class Z2Component:
    winding: int
    holonomy: tuple
    cycle: tuple = field(default=(), compare=False)

    def to_json(self):
        return {"winding": self.winding, "holonomy": list(self.holonomy)}


@dataclass(frozen=True)
class Z2Class:
    ends: int
    components: tuple

    def key(self):
        return (self.ends, tuple(sorted((c.winding, c.holonomy) for c in self.components)))

    def to_json(self):
        return {"ends": self.ends, "components": [c.to_json() for c in self.components]}


# ------------------------------------------------------------------- atlas

def _four_maps(a: NearAction) -> Dict[str, NearMap]:
    if len(a.generators) != 2:
        raise AtlasError("a near Z^2 action needs exactly two generators")
    g1, g2 = a.generators
    return {"u": a.lifts[g1], "u'": a.inverse_lift(g1), "v": a.lifts[g2], "v'": a.inverse_lift(g2)}


def regular_set(a: NearAction) -> list:
    """Finite set of points where an inverse or commutation equation fails."""
    M = _four_maps(a)
    ident = NearMap.identity(a.carrier)
    bad = set()
    try:
        for x, y in (("u", "u'"), ("v", "v'")):
            bad.update(disagreement(compose(M[x], M[y]), ident))
            bad.update(disagreement(compose(M[y], M[x]), ident))
        for x in ("u", "u'"):
            for y in ("v", "v'"):
                bad.update(disagreement(compose(M[x], M[y]), compose(M[y], M[x])))
    except InfiniteSetError as e:
        raise ActionError(f"irregular set is infinite: {e.witness}") from e
    return sorted(bad, key=lambda p: (a.carrier.order(p.cell), p.coords))


def _threshold(a: NearAction, maps) -> int:
    b = 0
    for f in maps.values():
        for p in f.pieces:
            if not p.transform.is_translation:
                raise AtlasError(f"piece on {p.source} is not a translation")
            for ax in p.source.axes:
                if ax.q != 1:
                    raise AtlasError(f"piece on {p.source} has a stride")
                for v in (ax.lo, ax.hi):
                    if v is not None:
                        b = max(b, abs(v))
        for k in f.exceptions:
            b = max(b, max(abs(c) for c in k.coords))
    for c in a.carrier.cells:
        if c.dim != 2:
            raise AtlasError(f"cell {c.id!r} is not two-dimensional")
        for dom in c.axes:
            for v in (dom.lo, dom.hi):
                if v is not None:
                    b = max(b, abs(v))
    return b + 1


def _segments(dom, T):
    """Per-axis pieces: ('low', None), ('mid', value) ..., ('high', None)."""
    out = []
    if dom.lo is None:
        out.append(("low", None))
    lo = -T + 1 if dom.lo is None else dom.lo
    hi = T - 1 if dom.hi is None else dom.hi
    out.extend(("mid", v) for v in range(lo, hi + 1))
    if dom.hi is None:
        out.append(("high", None))
    return out


def _seg_bounds(seg, T):
    kind, v = seg
    if kind == "low":
        return (None, -T)
    if kind == "high":
        return (T, None)
    return (v, v)


def corner_decomposition(a: NearAction, threshold: Optional[int] = None) -> Decomposition:
    maps = _four_maps(a)
    T = _threshold(a, maps)
    if threshold is not None:
        T = max(T, threshold)
    rects, leftover = [], []
    corner_name = {("high", "high"): "UR", ("low", "high"): "UL",
                   ("low", "low"): "LL", ("high", "low"): "LR"}
    for c in a.carrier.cells:
        for sx in _segments(c.axes[0], T):
            for sy in _segments(c.axes[1], T):
                r = make_rect(a.carrier, c.id, _seg_bounds(sx, T), _seg_bounds(sy, T))
                if r is None:
                    continue
                if sx[0] != "mid" and sy[0] != "mid":
                    rects.append(GradedRectangle(r, "corner", corner_name[(sx[0], sy[0])]))
                elif sx[0] == "mid" and sy[0] == "mid":
                    leftover.extend(r.points())
                elif sx[0] == "mid":
                    rects.append(GradedRectangle(r, "strip", "up" if sy[0] == "high" else "down",
                                                 line=sx[1]))
                else:
                    rects.append(GradedRectangle(r, "strip", "right" if sx[0] == "high" else "left",
                                                 line=sy[1]))
    dec = Decomposition(T, rects, leftover, maps)
    _check_standard(dec)
    return dec


_STD = {"u": (1, 0), "u'": (-1, 0), "v": (0, 1), "v'": (0, -1)}


def _check_standard(dec: Decomposition):
    for g in dec.rectangles:
        if g.kind == "corner":
            keys = _STD
        elif g.label in ("up", "down"):
            keys = ("v", "v'")
        else:
            keys = ("u", "u'")
        for k in keys:
            for p in dec.maps[k].pieces:
                m = rect_intersect(p.source, g.rect)
                if m is None or m.finite:
                    continue
                if p.target != g.cell or tuple(p.transform.t) != _STD[k]:
                    raise AtlasError(f"{k} is not a standard unit translation on {g.name()}")


# ------------------------------------------------------------ corner graph

def _locate(dec: Decomposition, cell, fixed_axis, fixed_value, direction):
    """The rectangle containing the tail of a ray (axis-parallel, in ``direction``)."""
    T = dec.threshold
    for i, g in enumerate(dec.rectangles):
        if g.cell != cell:
            continue
        ax_fixed = g.rect.axes[fixed_axis]
        ax_free = g.rect.axes[1 - fixed_axis]
        if not ax_fixed.contains(fixed_value):
            continue
        if direction > 0 and ax_free.hi is None or direction < 0 and ax_free.lo is None:
            return i
    raise GraphError(f"ray on cell {cell!r} axis {fixed_axis} = {fixed_value} leaves every rectangle"
                     f" (threshold {T})")


def _germ_step(dec: Decomposition, key: str, cell, fixed_axis, fixed_value, direction):
    """Apply map ``key`` to the germ of a ray; returns (cell, fixed value, translation)."""
    f = dec.maps[key]
    far = dec.threshold * 4 + 8
    coords = [0, 0]
    coords[fixed_axis] = fixed_value
    coords[1 - fixed_axis] = direction * far
    x = Point(cell, tuple(coords))
    p = f.piece_at(x)
    if p is None:
        raise GraphError(f"{key} is undefined far along a ray in {cell!r}")
    src_free = p.source.axes[1 - fixed_axis]
    if (direction > 0 and src_free.hi is not None) or (direction < 0 and src_free.lo is not None):
        raise GraphError(f"{key} splits a ray germ in {cell!r}")
    t = tuple(p.transform.t)
    return p.target, fixed_value + t[fixed_axis], t


def _vertex_step(dec: Decomposition, g: GradedRectangle):
    T = dec.threshold
    if g.kind == "corner":
        fixed_axis, side, direction, key, std = _CORNER_RULE[g.label]
        fixed_value = side * T
    else:
        key, std = _STRIP_RULE[g.label]
        fixed_axis = 0 if g.label in ("up", "down") else 1
        direction = +1 if g.label in ("up", "right") else -1
        fixed_value = g.line
    cell, val, t = _germ_step(dec, key, g.cell, fixed_axis, fixed_value, direction)
    j = _locate(dec, cell, fixed_axis, val, direction)
    delta = (t[0] - std[0], t[1] - std[1])
    return j, delta


def corner_graph(dec: Decomposition) -> CornerGraph:
    """Graph on corners and strips; each vertex steps across its left boundary."""
    verts = [g for g in dec.rectangles]
    succ = {i: _vertex_step(dec, g) for i, g in enumerate(verts)}
    return CornerGraph(verts, succ)


def glue_strips(g: CornerGraph) -> CornerGraph:
    """Contract every strip into the corner that precedes it."""
    keep = [i for i, v in enumerate(g.vertices) if v.kind == "corner"]
    new_index = {old: k for k, old in enumerate(keep)}
    succ = {}
    limit = len(g.vertices) + 1
    for old in keep:
        j, d = g.succ[old]
        total = list(d)
        steps = 0
        while g.vertices[j].kind != "corner":
            j, d = g.succ[j]
            total[0] += d[0]
            total[1] += d[1]
            steps += 1
            if steps > limit:
                raise GraphError("strips form a cycle without corners")
        succ[new_index[old]] = (new_index[j], tuple(total))
    return CornerGraph([g.vertices[i] for i in keep], succ)


def check_graph(g: CornerGraph):
    indeg = {i: 0 for i in range(len(g.vertices))}
    for i, (j, _) in g.succ.items():
        if i == j:
            raise GraphError(f"self-loop at {g.vertices[i].name()}")
        indeg[j] += 1
        a, b = g.vertices[i].label, g.vertices[j].label
        if CORNERS[(CORNERS.index(a) + 1) % 4] != b:
            raise GraphError(f"edge {g.vertices[i].name()} -> {g.vertices[j].name()} breaks the"
                             " UR, UL, LL, LR pattern")
    bad = [g.vertices[i].name() for i, n in indeg.items() if n != 1]
    if bad:
        raise GraphError(f"in-degree differs from 1 at {bad[:4]} (action not near free?)")


def cycles_of(g: CornerGraph) -> list:
    seen, out = set(), []
    for start in range(len(g.vertices)):
        if start in seen:
            continue
        cyc, i = [], start
        while i not in seen:
            seen.add(i)
            cyc.append(i)
            i = g.succ[i][0]
        out.append(cyc)
    return out


def classify(a: NearAction, near_free_length: int = 0) -> Z2Class:
    """Ends, winding numbers and holonomies of a near Z^2 action.

    ``near_free_length`` > 0 first runs the bounded near-freeness check.
    """
    if near_free_length:
        ok, witness = near_free_check(a, near_free_length)
        if not ok:
            raise GraphError(f"element {witness} has an infinite fixed set")
    g = glue_strips(corner_graph(corner_decomposition(a)))
    check_graph(g)
    comps = []
    for cyc in cycles_of(g):
        if len(cyc) % 4:
            raise GraphError("corner cycle length is not a multiple of 4")
        sx = -sum(g.succ[i][1][0] for i in cyc)
        sy = -sum(g.succ[i][1][1] for i in cyc)
        ur = min((i for i in cyc if g.vertices[i].label == "UR"),
                 key=lambda i: a.carrier.order(g.vertices[i].cell))
        k = cyc.index(ur)
        comps.append(Z2Component(len(cyc) // 4, (sx, sy),
                                 tuple(g.vertices[i].name() for i in cyc[k:] + cyc[:k])))
    comps.sort(key=lambda c: c.cycle)
    return Z2Class(len(comps), tuple(comps))


# ------------------------------------------------------------------ parity

def kapoudjian_parity(a: NearAction) -> int:
    """Sign (0 even, 1 odd) of the commutator of the two lifts."""
    M = _four_maps(a)
    try:
        return parity(commutator(M["u"], M["v"]))
    except NearMapError as e:
        raise ActionError(f"commutator is not a finitely supported permutation: {e}") from e


# ------------------------------------------------------------------ swaps

def _swap_rect(r: Rect) -> Rect:
    return Rect(r.cell, (r.axes[1], r.axes[0]))


def _swap_point(p: Optional[Point]):
    return None if p is None else Point(p.cell, (p.coords[1], p.coords[0]))


def _swap_map(f: NearMap, carrier: Carrier) -> NearMap:
    S = Transform((1, 0), (1, 1), (0, 0))
    pieces = [Piece(_swap_rect(p.source), p.target, S.compose(p.transform.compose(S)))
              for p in f.pieces]
    exc = {_swap_point(k): _swap_point(v) for k, v in f.exceptions.items()}
    return NearMap(carrier, carrier, pieces, exc)


def swap_basis(a: NearAction) -> NearAction:
    """Exchange the two generators, conjugating by the coordinate swap.

    The result is isomorphic to the same near action read in the basis (v, u).
    """
    for c in a.carrier.cells:
        if c.dim != 2:
            raise AtlasError("swap_basis needs two-dimensional cells")
    X = Carrier(tuple(Cell(c.id, (c.axes[1], c.axes[0])) for c in a.carrier.cells))
    g1, g2 = a.generators
    lifts = {g1: _swap_map(a.lifts[g2], X), g2: _swap_map(a.lifts[g1], X)}
    return NearAction(X, a.spec, lifts, name=(a.name or "action") + " swapped")


# -------------------------------------------------------------------- ends

def _ray_germ_ends(a: NearAction) -> int:
    maps = []
    for g in a.generators:
        maps += [a.lifts[g], a.inverse_lift(g)]
    L, bound = 1, 0
    for f in maps:
        for p in f.pieces:
            for ax in p.source.axes:
                L = math.lcm(L, ax.q)
                for v in (ax.lo, ax.hi):
                    if v is not None:
                        bound = max(bound, abs(v))
            for c in p.transform.t:
                if c:
                    L = math.lcm(L, abs(c))
                bound = max(bound, abs(c))
        for k in f.exceptions:
            bound = max(bound, max(abs(c) for c in k.coords))
    far = (bound // L + 4) * L
    germs = []
    for c in a.carrier.cells:
        unb = [i for i, dom in enumerate(c.axes) if dom.kind != "bounded"]
        if not unb:
            continue
        k = unb[0]
        sides = [s for s in (-1, 1) if (c.axes[k].lo is None or s > 0)]
        bounded = [range(dom.n) for i, dom in enumerate(c.axes) if i != k]
        for s in sides:
            for r in range(L):
                for rest in itertools.product(*bounded):
                    germs.append((c.id, s, r, rest))
    parent = {gm: gm for gm in germs}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def germ_of(p: Point):
        c = a.carrier.cell(p.cell)
        k = next(i for i, dom in enumerate(c.axes) if dom.kind != "bounded")
        x = p.coords[k]
        rest = tuple(v for i, v in enumerate(p.coords) if i != k)
        return (p.cell, 1 if x > 0 else -1, x % L, rest)

    for gm in germs:
        cid, s, r, rest = gm
        c = a.carrier.cell(cid)
        k = next(i for i, dom in enumerate(c.axes) if dom.kind != "bounded")
        coords = list(rest)
        coords.insert(k, s * far + r if s > 0 else -far + r)
        x = Point(cid, tuple(coords))
        for f in maps:
            y = f.evaluate(x)
            if y is None:
                raise ActionError(f"lift undefined far out at {x}")
            ra, rb = find(gm), find(germ_of(y))
            if ra != rb:
                parent[ra] = rb
    return len({find(g) for g in germs})


def ends(a: NearAction) -> int:
    """Number of ends.

    Cells with at most one unbounded axis are handled by ray germs (any group
    rank); two-dimensional graded atlases by counting corner cycles.
    """
    unbounded = [sum(1 for dom in c.axes if dom.kind != "bounded") for c in a.carrier.cells]
    if all(u <= 1 for u in unbounded):
        return _ray_germ_ends(a)
    if all(c.dim == 2 for c in a.carrier.cells) and len(a.generators) == 2:
        return classify(a).ends
    raise ActionError("ends: only rays or two-dimensional atlases are supported")
