"""Constructors for the standard example near actions.

Every builder returns a validated :class:`NearAction` (or, for the Houghton
generators and the Scott tower, plain near maps on a shared carrier).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict

from .carrier import AxisDomain, Carrier, Cell, Point, RectSet, make_rect, point_rect
from .nearaction import GroupSpec, NearAction, parse_word
from .nearmap import NearMap, Piece, Transform, cycle_type

AXIS_NAMES = ("u", "v", "w", "x")


def gen_names(d: int) -> tuple:
    return AXIS_NAMES[:d] if d <= len(AXIS_NAMES) else tuple(f"e{i + 1}" for i in range(d))


def _unit(d, i, sign=1):
    t = [0] * d
    t[i] = sign
    return tuple(t)


def assemble(carrier: Carrier, overrides=(), default=None, undefined=(), exceptions=None) -> NearMap:
    """Near map built from override pieces on top of per-cell translations.

    ``overrides`` holds ``(cell, bounds, target_cell, t)`` entries (bounds as
    in :func:`make_rect`).  Everything else in a cell is translated by
    ``default[cell]`` (identity when absent); points pushed out of their cell
    and the listed ``undefined`` points become undefined.
    """
    default = default or {}
    pieces, exc = [], {}
    for p in undefined:
        exc[p] = None
    exc.update(exceptions or {})
    taken = {c.id: [] for c in carrier.cells}
    for cell, bounds, target, t in overrides:
        r = make_rect(carrier, cell, *bounds)
        if r is None:
            continue
        pieces.append(Piece(r, target, Transform.translation(t)))
        taken[cell].append(r)
    for c in carrier.cells:
        t = tuple(default.get(c.id, (0,) * c.dim))
        rest = RectSet(carrier, [c.full_rect()]).diff(RectSet(carrier, taken[c.id]))
        rest = rest.diff(RectSet(carrier, [point_rect(p) for p in exc if p.cell == c.id]))
        tr = Transform.translation(t)
        back = tr.inverse().image(c.full_rect(), c.id)
        ok = rest.intersect(RectSet(carrier, [back]))
        for r in ok.rects:
            pieces.append(Piece(r, c.id, tr))
        for p in rest.diff(ok).points():
            exc[p] = None
    return NearMap(carrier, carrier, pieces, exc)


def plane_carrier(names, dim=2) -> Carrier:
    return Carrier(tuple(Cell(str(n), (AxisDomain.full(),) * dim) for n in names))


# ------------------------------------------------------------------ basics

def build_shift_N() -> NearAction:
    """Z near acting on N through n -> n+1."""
    X = Carrier((Cell("N", (AxisDomain.half(),)),))
    t = assemble(X, default={"N": (1,)})
    return NearAction(X, GroupSpec.free_abelian(("t",)), {"t": t}, name="shift_N")


def build_free_orbits(d: int, k: int) -> NearAction:
    """k disjoint copies of Z^d acting on itself by translation."""
    if d < 1 or k < 1:
        raise ValueError("need d >= 1 and k >= 1")
    X = plane_carrier(range(k), d)
    gens = gen_names(d)
    lifts = {g: assemble(X, default={c.id: _unit(d, i) for c in X.cells}) for i, g in enumerate(gens)}
    return NearAction(X, GroupSpec.free_abelian(gens), lifts, name=f"free_orbits(d={d},k={k})")


def build_simply_transitive(d: int) -> NearAction:
    a = build_free_orbits(d, 1)
    a.name = f"simply_transitive(d={d})"
    return a


def build_exzz2() -> NearAction:
    """Z x Z/2 near acting on Z x {+1,-1}: a translates, b swaps the sheets on n >= 0."""
    X = Carrier((Cell("+1", (AxisDomain.full(),)), Cell("-1", (AxisDomain.full(),))))
    a = assemble(X, default={"+1": (1,), "-1": (1,)})
    b = assemble(X, [("+1", [(0, None)], "-1", (0,)), ("-1", [(0, None)], "+1", (0,))])
    spec = GroupSpec(("a", "b"), (parse_word("b^2"), parse_word("a b a^-1 b^-1")))
    return NearAction(X, spec, {"a": a, "b": b}, name="exzz2")


# ---------------------------------------------------------------- Houghton

def _ray_carrier(k):
    return Carrier(tuple(Cell(str(i), (AxisDomain.half(),)) for i in range(1, k + 1)))


def _houghton_map(X, i, last):
    """Ray i moves out by one, ray ``last`` moves in, (0,last) jumps to (0,i)."""
    return assemble(X, [(last, [(1, None)], last, (-1,))],
                    default={str(i): (1,)},
                    exceptions={Point(last, (0,)): Point(str(i), (0,))})


def build_houghton_gens():
    """The two Houghton permutations f1, f2 of N x {1,2,3}."""
    X = _ray_carrier(3)
    return X, {"f1": _houghton_map(X, 1, "3"), "f2": _houghton_map(X, 2, "3")}


def build_houghton_near_zd(d: int) -> NearAction:
    """Z^d near acting on d+1 rays; generator i pushes along ray i and pulls ray d+1."""
    if d < 1:
        raise ValueError("d must be positive")
    X = _ray_carrier(d + 1)
    gens = gen_names(d)
    lifts = {g: _houghton_map(X, i + 1, str(d + 1)) for i, g in enumerate(gens)}
    return NearAction(X, GroupSpec.free_abelian(gens), lifts, name=f"houghton(d={d})")


# --------------------------------------------------------- Z^2 constructions

def build_X_ms(m: int, s=(0, 0)) -> NearAction:
    """m plane sheets glued along the ray {x >= 1, y = 0}, returning with shift s.

    v carries (x,0) on sheet k to (x,1) on sheet k+1, and from the last sheet
    to (x - s1, 1) on sheet 0.  u is standard except on the column x = 0,
    y >= 1 of sheet 0, which it sends to (1, y + s2).  Points with no room
    left on a seam are undefined, so the index character is (s2, -s1).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    s1, s2 = (int(c) for c in s)
    names = [str(k) for k in range(m)]
    X = plane_carrier(names)
    last = names[-1]
    v_over, v_undef = [], []
    for k in range(m - 1):
        v_over.append((names[k], [(1, None), (0, 0)], names[k + 1], (0, 1)))
    v_over.append((last, [(max(1, 1 + s1), None), (0, 0)], names[0], (-s1, 1)))
    v_undef += [Point(last, (x, 0)) for x in range(1, s1 + 1)]
    u_over = [(names[0], [(0, 0), (max(1, 1 - s2), None)], names[0], (1, s2))]
    u_undef = [Point(names[0], (0, y)) for y in range(1, -s2 + 1)]
    u = assemble(X, u_over, {n: (1, 0) for n in names}, u_undef)
    v = assemble(X, v_over, {n: (0, 1) for n in names}, v_undef)
    return NearAction(X, GroupSpec.free_abelian(("u", "v")), {"u": u, "v": v},
                      name=f"X_ms(m={m},s=({s1},{s2}))")


def build_K(l: int) -> NearAction:
    """Plane where v sends (x,0) to (x+l,1) for x <= -l and is undefined on (-l,0]."""
    if l < 0:
        raise ValueError("l must be >= 0")
    X = plane_carrier(["0"])
    u = assemble(X, default={"0": (1, 0)})
    v = assemble(X, [("0", [(None, -l), (0, 0)], "0", (l, 1))], {"0": (0, 1)},
                 [Point("0", (x, 0)) for x in range(-l + 1, 1)])
    return NearAction(X, GroupSpec.free_abelian(("u", "v")), {"u": u, "v": v}, name=f"K({l})")


def build_plane_split_pair() -> NearAction:
    """Genuine Z^2 action: the plane with (0,0) and (1,0) fixed.

    It is the simply transitive action plus two fixed points, transported
    back to the plane by pushing the ray {x >= 0, y = 0} two steps right.
    The u-lift is near equal to the standard one; the v-lift is not.
    """
    X = plane_carrier(["0"])
    fixed = {Point("0", (0, 0)): Point("0", (0, 0)), Point("0", (1, 0)): Point("0", (1, 0))}
    u = assemble(X, [("0", [(-1, -1), (0, 0)], "0", (3, 0))], {"0": (1, 0)}, exceptions=fixed)
    v = assemble(X, [("0", [(2, None), (0, 0)], "0", (-2, 1)),
                     ("0", [(0, None), (-1, -1)], "0", (2, 1))], {"0": (0, 1)}, exceptions=fixed)
    return NearAction(X, GroupSpec.free_abelian(("u", "v")), {"u": u, "v": v},
                      name="plane_split_pair")


# --------------------------------------------------------------- Scott tower

def scott_carrier(n_max: int) -> Carrier:
    return Carrier(tuple(Cell(f"B{n}", (AxisDomain.bounded(2 ** n),)) for n in range(n_max + 1)))


def _block_add(X, n_max, shift_of):
    table = {}
    for n in range(n_max + 1):
        c = shift_of(n) % (2 ** n)
        for x in range(2 ** n):
            table[Point(f"B{n}", (x,))] = Point(f"B{n}", ((x + c) % 2 ** n,))
    return NearMap(X, X, [], table)


def build_scott_tower(n_max: int) -> list:
    """``[f_0, ..., f_{n_max}]`` on the blocks Z/2^n, n <= n_max.

    f_0 adds 1 on every block; for k >= 1, f_k adds 2^(n-k) on blocks with
    n > k and is the identity on the others.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    X = scott_carrier(n_max)
    fs = [_block_add(X, n_max, lambda n: 1)]
    for k in range(1, n_max + 1):
        fs.append(_block_add(X, n_max, lambda n, k=k: 2 ** (n - k) if n > k else 0))
    return fs


def scott_action(n_max: int) -> NearAction:
    fs = build_scott_tower(n_max)
    gens = tuple(f"f{k}" for k in range(n_max + 1))
    rels = tuple(((f"f{k}", 2), (f"f{k - 1}", -1)) for k in range(1, n_max + 1))
    return NearAction(fs[0].src, GroupSpec(gens, rels), dict(zip(gens, fs)),
                      name=f"scott_tower(n_max={n_max})")


def root_obstruction(p: NearMap, k: int) -> bool:
    """True when the finite permutation p has a 2^k-th root.

    Criterion: for every even m the number of m-cycles is a multiple of 2^k.
    Despite the name, ``False`` is the obstructed case.
    """
    counts = Counter(cycle_type(p))
    return all(c % (2 ** k) == 0 for m, c in counts.items() if m % 2 == 0)


# ------------------------------------------------------------------ D_infty

def build_dinfty_on_Z(perturbed: bool = False) -> NearAction:
    """D_infty near acting on Z by the two parity-swapping involutions.

    With ``perturbed`` u_eo fixes 0 and 1, splitting Z into two orbits.
    """
    X = Carrier((Cell("Z", (AxisDomain.full(),)),))
    eo = assemble(X, [("Z", [(None, None, 0, 2)], "Z", (1,)), ("Z", [(None, None, 1, 2)], "Z", (-1,))])
    oe = assemble(X, [("Z", [(None, None, 1, 2)], "Z", (1,)), ("Z", [(None, None, 0, 2)], "Z", (-1,))])
    if perturbed:
        fix = {Point("Z", (0,)): Point("Z", (0,)), Point("Z", (1,)): Point("Z", (1,))}
        eo = NearMap(X, X, eo.pieces, fix)
    spec = GroupSpec(("u_eo", "u_oe"), (parse_word("u_eo^2"), parse_word("u_oe^2")))
    return NearAction(X, spec, {"u_eo": eo, "u_oe": oe},
                      name="dinfty_on_Z" + ("_perturbed" if perturbed else ""))


# ----------------------------------------------------------------- registry

@dataclass
class CatalogEntry:
    name: str
    params: Dict[str, tuple]  # name -> (type, default, help)
    builder: Callable
    description: str

    def build(self, **kw) -> NearAction:
        args = {k: kw.get(k, spec[1]) for k, spec in self.params.items()}
        return self.builder(**args)


def _houghton_z2():
    X, fs = build_houghton_gens()
    return NearAction(X, GroupSpec.free_abelian(("u", "v")), {"u": fs["f1"], "v": fs["f2"]},
                      name="houghton_gens")


CATALOG = {e.name: e for e in [
    CatalogEntry("shift_N", {}, build_shift_N, "Z on N by n -> n+1; index character (1)."),
    CatalogEntry("simply_transitive", {"d": (int, 2, "rank")}, build_simply_transitive,
                 "Z^d acting on itself by translation."),
    CatalogEntry("free_orbits", {"d": (int, 1, "rank"), "k": (int, 2, "number of copies")},
                 build_free_orbits, "k disjoint copies of the simply transitive Z^d action."),
    CatalogEntry("exzz2", {}, build_exzz2,
                 "Z x Z/2 on Z x {+1,-1}: balanced, commutator a single transposition."),
    CatalogEntry("houghton_gens", {}, _houghton_z2,
                 "Houghton permutations f1, f2 on three rays, as a near Z^2 action."),
    CatalogEntry("houghton", {"d": (int, 2, "rank")}, build_houghton_near_zd,
                 "Balanced near Z^d action on d+1 rays with d+1 ends."),
    CatalogEntry("X_ms", {"m": (int, 1, "winding"), "s": (tuple, (0, 0), "holonomy")}, build_X_ms,
                 "One-ended near Z^2 set with winding m and holonomy s."),
    CatalogEntry("plane_split_pair", {}, build_plane_split_pair,
                 "Genuine Z^2 action on the plane with two fixed points; not near the standard one."),
    CatalogEntry("K", {"l": (int, 1, "seam shift")}, build_K,
                 "Plane with a sheared seam; classifies as winding 1, holonomy (l,0)."),
    CatalogEntry("scott_tower", {"n_max": (int, 8, "largest block exponent")}, scott_action,
                 "Halving tower f_k on the blocks Z/2^n; f_k^2 and f_(k-1) agree off one block."),
    CatalogEntry("dinfty_on_Z", {"perturbed": (bool, False, "fix 0 and 1 under u_eo")},
                 build_dinfty_on_Z, "Infinite dihedral group on Z by parity swaps."),
]}


def build(name: str, **params) -> NearAction:
    if name not in CATALOG:
        raise KeyError(f"unknown catalog entry {name!r}")
    return CATALOG[name].build(**params)
