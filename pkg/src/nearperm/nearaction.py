"""Near actions of finitely generated groups on presented carriers.

A :class:`NearAction` assigns to each generator a closely bijective self
:class:`~nearperm.nearmap.NearMap` of the carrier; relators must evaluate to
maps that agree with the identity off a finite set.  This module also hosts
the index character, commensurated subsets, truncated Schreier graphs, ball
growth, Foelner ratios and the conjugator search for perturbed free Z^2
actions.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence

import numpy as np

from . import _kernels
from .carrier import INF, Carrier, Point, RectSet, enumerate_window, rect_intersect
from .nearmap import (
    InfiniteSetError,
    NearMap,
    NearMapError,
    compose,
    disagreement,
    fixed_set,
    graph_equal,
    index,
    invert,
    near_equal,
    support,
)


class ActionError(ValueError):
    """Invalid action data, or a relator that fails."""


class RigidityObstruction(RuntimeError):
    """No finitely supported conjugator was found."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report or {}


# ------------------------------------------------------------------- groups

def parse_word(text: str) -> tuple:
    """Parse ``"u v u^-1 V"`` into ``(("u",1),("v",1),("u",-1),("v",-1))``.

    A capitalised single letter means the inverse of its lower-case twin.
    """
    out = []
    for tok in text.split():
        m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?", tok)
        if not m:
            raise ActionError(f"bad word token {tok!r}")
        name, e = m.group(1), int(m.group(2) or 1)
        if len(name) == 1 and name.isupper():
            name, e = name.lower(), -e
        if e:
            out.append((name, e))
    return tuple(out)


def word_str(word) -> str:
    return " ".join(g if e == 1 else f"{g}^{e}" for g, e in word)


@dataclass(frozen=True)
class GroupSpec:
    generators: tuple
    relators: tuple = ()
    abelian_rank: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "relators", tuple(tuple((g, int(e)) for g, e in w)
                                                   for w in self.relators))
        if len(set(self.generators)) != len(self.generators):
            raise ActionError("duplicate generator names")
        for w in self.relators:
            for g, _ in w:
                if g not in self.generators:
                    raise ActionError(f"relator uses unknown generator {g!r}")

    @classmethod
    def free_abelian(cls, generators):
        gens = tuple(generators)
        rels = [((a, 1), (b, 1), (a, -1), (b, -1)) for a, b in itertools.combinations(gens, 2)]
        return cls(gens, tuple(rels), abelian_rank=len(gens))

    def to_json(self):
        d = {"generators": list(self.generators),
             "relators": [[[g, e] for g, e in w] for w in self.relators]}
        if self.abelian_rank is not None:
            d["abelian_rank"] = self.abelian_rank
        return d

    @classmethod
    def from_json(cls, d):
        gens = tuple(d["generators"])
        if "relators" not in d and d.get("abelian_rank") is not None:
            return cls.free_abelian(gens)
        rels = tuple(tuple((g, int(e)) for g, e in w) for w in d.get("relators", []))
        return cls(gens, rels, d.get("abelian_rank"))


class NearAction:
    """Generator-indexed family of near maps of one carrier."""

    def __init__(self, carrier: Carrier, spec: GroupSpec, lifts: Dict[str, NearMap], name=None):
        self.carrier = carrier
        self.spec = spec
        self.lifts = dict(lifts)
        self.name = name
        if set(self.lifts) != set(spec.generators):
            raise ActionError("lifts must be given for exactly the declared generators")
        for g, f in self.lifts.items():
            if f.src != carrier or f.dst != carrier:
                raise ActionError(f"lift {g!r} is not a self-map of the carrier")
            if not (f.closely_injective() and f.closely_surjective()):
                raise ActionError(f"lift {g!r} is not closely bijective")
        self._inv = {}

    @property
    def generators(self):
        return self.spec.generators

    def inverse_lift(self, g) -> NearMap:
        if g not in self._inv:
            self._inv[g] = invert(self.lifts[g])
        return self._inv[g]

    def letter(self, g, e=1) -> NearMap:
        if e == 0:
            return NearMap.identity(self.carrier)
        base = self.lifts[g] if e > 0 else self.inverse_lift(g)
        out = base
        for _ in range(abs(e) - 1):
            out = compose(base, out)
        return out

    def word_map(self, word) -> NearMap:
        """Map of ``g1^e1 ... gk^ek`` (rightmost letter acts first)."""
        out = NearMap.identity(self.carrier)
        for g, e in reversed(list(word)):
            out = compose(self.letter(g, e), out)
        return out

    def neighbours(self, x: Point):
        """Points adjacent to x in the near Schreier graph (both directions)."""
        out = []
        for g in self.generators:
            f = self.lifts[g]
            y = f.evaluate(x)
            if y is not None:
                out.append((g, y))
            for z in f.preimages(x):
                out.append((g + "^-1", z))
        return out

    def to_json(self):
        d = {"schema": "nearperm/1", "kind": "near_action",
             "carrier": self.carrier.to_json(), "group": self.spec.to_json(),
             "lifts": {g: self.lifts[g].to_json() for g in self.generators}}
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_json(cls, d):
        if d.get("schema") != "nearperm/1":
            raise ActionError("missing or unknown schema field (expected nearperm/1)")
        carrier = Carrier.from_json(d["carrier"])
        spec = GroupSpec.from_json(d["group"])
        lifts = {}
        for g in spec.generators:
            if g not in d["lifts"]:
                raise ActionError(f"no lift for generator {g!r}")
            f = NearMap.from_json(d["lifts"][g])
            if f.src != carrier or f.dst != carrier:
                raise ActionError(f"lift {g!r} is not over the declared carrier")
            lifts[g] = f
        return cls(carrier, spec, lifts, name=d.get("name"))


# ------------------------------------------------------------ verification

@dataclass
class RelatorResult:
    word: tuple
    near_identity: bool
    support: list = field(default_factory=list)
    witness: Optional[str] = None

    def to_json(self):
        return {"relator": word_str(self.word), "near_identity": self.near_identity,
                "support_size": len(self.support) if self.near_identity else None,
                "support": [p.to_json() for p in self.support[:64]],
                "witness": self.witness}


@dataclass
class VerifyReport:
    ok: bool
    relators: list

    def to_json(self):
        return {"ok": self.ok, "relators": [r.to_json() for r in self.relators]}


def verify_near_action(a: NearAction) -> VerifyReport:
    """Each relator must be the identity off a finite set."""
    results = []
    for w in a.spec.relators:
        m = a.word_map(w)
        try:
            supp = support(m)
            results.append(RelatorResult(w, True, supp))
        except InfiniteSetError as e:
            results.append(RelatorResult(w, False, [], witness=str(e.witness)))
    return VerifyReport(all(r.near_identity for r in results), results)


def verify_genuine_action(a: NearAction) -> bool:
    """Every lift is a bijection and every relator is exactly the identity."""
    if not all(f.is_bijection() for f in a.lifts.values()):
        return False
    ident = NearMap.identity(a.carrier)
    return all(graph_equal(a.word_map(w), ident) for w in a.spec.relators)


# ----------------------------------------------------------- index character

def index_character(a: NearAction) -> tuple:
    out = []
    for g in a.generators:
        i = index(a.lifts[g])
        if i in (INF, -INF):
            raise ActionError(f"lift {g!r} has infinite index")
        out.append(int(i))
    return tuple(out)


def index_number(a: NearAction) -> int:
    return math.gcd(*index_character(a)) if a.generators else 0


def word_index(a: NearAction, word) -> int:
    return int(index(a.word_map(word)))


# ------------------------------------------------------ commensurated subsets

@dataclass
class CommReport:
    commensurated: bool
    boundary: Dict[str, Optional[int]]
    restricted_index: Optional[Dict[str, int]] = None
    witnesses: Dict[str, str] = field(default_factory=dict)

    def to_json(self):
        return {"commensurated": self.commensurated, "boundary": self.boundary,
                "restricted_index": self.restricted_index, "witnesses": self.witnesses}


def _piece_image(f: NearMap, Y: RectSet) -> RectSet:
    out = []
    for p in f.pieces:
        for r in Y.rects:
            m = rect_intersect(p.source, r)
            if m is not None:
                out.append(p.transform.image(m, p.target))
    return RectSet(f.dst, out)


def image_symdiff(f: NearMap, Y: RectSet) -> list:
    """Exact finite set f(Y) xor Y; raises InfiniteSetError when infinite."""
    A = _piece_image(f, Y)
    rough = A.diff(Y).union(Y.diff(A))
    if not rough.is_finite():
        raise InfiniteSetError(f"f(Y) and Y differ on {rough}", witness=rough)
    cand = set(rough.points()) | f._anomaly_candidates()
    out = []
    for y in cand:
        in_fy = any(Y.contains(x) for x in f.preimages(y))
        if in_fy != Y.contains(y):
            out.append(y)
    return sorted(out)


def restricted_index(f: NearMap, Y: RectSet) -> int:
    """Index of f restricted to a commensurated Y (as a partial map Y -> Y)."""
    sd = image_symdiff(f, Y)
    cand = set(f._anomaly_candidates()) | set(sd)
    total = 0
    for y in cand:
        if Y.contains(y):
            n = sum(1 for x in f.preimages(y) if Y.contains(x))
            total += 1 - n
    lost = sum(1 for k, v in f.exceptions.items() if v is None and Y.contains(k))
    for y in sd:
        if not Y.contains(y):
            lost += sum(1 for x in f.preimages(y) if Y.contains(x))
    return total - lost


def commensurated_test(a: NearAction, Y: RectSet) -> CommReport:
    boundary, witnesses = {}, {}
    for g in a.generators:
        try:
            boundary[g] = len(image_symdiff(a.lifts[g], Y))
        except InfiniteSetError as e:
            boundary[g] = None
            witnesses[g] = str(e.witness)
    comm = all(v is not None for v in boundary.values())
    ri = {g: restricted_index(a.lifts[g], Y) for g in a.generators} if comm else None
    return CommReport(comm, boundary, ri, witnesses)


# ----------------------------------------------------------- Schreier graphs

@dataclass
class SchreierTruncation:
    radius: int
    vertices: list
    edges: list  # (generator, from_index, to_index)
    boundary: list  # vertex indices

    def csr(self):
        n = len(self.vertices)
        adj = [[] for _ in range(n)]
        for _, i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        indptr = np.zeros(n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(x) for x in adj])
        indices = np.array([j for x in adj for j in x], dtype=np.int64)
        return indptr, indices

    def to_dot(self) -> str:
        lines = ["digraph schreier {"]
        bset = set(self.boundary)
        for i, v in enumerate(self.vertices):
            label = f"{v.cell}{list(v.coords)}"
            extra = ", shape=box" if i in bset else ""
            lines.append(f'  n{i} [label="{label}"{extra}];')
        for g, i, j in self.edges:
            lines.append(f'  n{i} -> n{j} [label="{g}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return {"radius": self.radius,
                "vertices": [v.to_json() for v in self.vertices],
                "edges": [[g, i, j] for g, i, j in self.edges],
                "boundary": self.boundary}


def schreier_truncation(a: NearAction, radius: int) -> SchreierTruncation:
    verts = enumerate_window(a.carrier, radius)
    idx = {v: i for i, v in enumerate(verts)}
    edges, boundary = [], set()
    for i, v in enumerate(verts):
        for g in a.generators:
            y = a.lifts[g].evaluate(v)
            if y is not None:
                if y in idx:
                    edges.append((g, i, idx[y]))
                else:
                    boundary.add(i)
            for z in a.lifts[g].preimages(v):
                if z not in idx:
                    boundary.add(i)
    return SchreierTruncation(radius, verts, edges, sorted(boundary))


def components(t: SchreierTruncation) -> list:
    """Connected components (as vertex lists) of a truncation."""
    n = len(t.vertices)
    indptr, indices = t.csr()
    comp = np.full(n, -1, dtype=np.int64)
    out = []
    for s in range(n):
        if comp[s] >= 0:
            continue
        dist = _kernels.bfs_distances(indptr, indices, s)
        members = np.nonzero(dist >= 0)[0]
        comp[members] = len(out)
        out.append([t.vertices[i] for i in members])
    return out


def _keyfob_links(a: NearAction, basepoint: Point, radius: int):
    comps = components(schreier_truncation(a, radius))
    links = {}
    for c in comps:
        if basepoint in c:
            continue
        rep = min(c, key=lambda p: (sum(abs(x) for x in p.coords), a.carrier.order(p.cell), p.coords))
        links.setdefault(basepoint, []).append(rep)
        links.setdefault(rep, []).append(basepoint)
    return links


def ball_distances(a: NearAction, basepoint: Point, rmax: int, keyfob_radius=None) -> dict:
    """Graph distance from the basepoint for every point within ``rmax``.

    When ``keyfob_radius`` is given, the components of the truncation at that
    radius are first joined to the basepoint by one extra edge each.
    """
    a.carrier.check_point(basepoint)
    links = _keyfob_links(a, basepoint, keyfob_radius) if keyfob_radius is not None else {}
    dist = {basepoint: 0}
    queue = deque([basepoint])
    while queue:
        x = queue.popleft()
        d = dist[x]
        if d == rmax:
            continue
        nbrs = [y for _, y in a.neighbours(x)] + links.get(x, [])
        for y in nbrs:
            if y not in dist:
                dist[y] = d + 1
                queue.append(y)
    return dist


def ball_growth(a: NearAction, basepoint: Point, rmax: int, keyfob_radius=None) -> list:
    """``[b(0), ..., b(rmax)]``, ball sizes in the (key-fob completed) Schreier graph."""
    dist = ball_distances(a, basepoint, rmax, keyfob_radius)
    counts = np.bincount(np.fromiter(dist.values(), dtype=np.int64), minlength=rmax + 1)
    return np.cumsum(counts).tolist()


def free_abelian_ball(d: int, r: int) -> int:
    """Size of the radius-r word ball of Z^d with standard generators."""
    if r < 0:
        return 0
    return sum(2 ** k * math.comb(d, k) * math.comb(r, k) for k in range(d + 1))


def exception_region(a: NearAction) -> list:
    """Points where relators or lift/inverse pairs are not the identity."""
    pts = set()
    ident = NearMap.identity(a.carrier)
    for w in a.spec.relators:
        pts.update(support(a.word_map(w)))
    for g in a.generators:
        f, fi = a.lifts[g], a.inverse_lift(g)
        pts.update(disagreement(compose(fi, f), ident))
        pts.update(disagreement(compose(f, fi), ident))
    return sorted(pts)


@dataclass
class GrowthReport:
    threshold: int
    rank: int
    rows: list  # (r, b(3r/2), b(r), b0(2r/3), holds)
    ok: bool

    def to_json(self):
        return {"threshold": self.threshold, "rank": self.rank, "ok": self.ok,
                "rows": [{"r": r, "b_3r2": lhs, "b_r": br, "b0_2r3": b0, "margin": rhs - lhs,
                          "holds": ok, "above_threshold": r >= self.threshold}
                         for r, lhs, br, b0, rhs, ok in self.rows]}


def growth_inequality_check(a: NearAction, basepoint: Point, r_samples: Sequence[int],
                            rank: Optional[int] = None, keyfob_radius: int = 6) -> GrowthReport:
    """Test b(3r/2) <= b(r) (1 + b0(2r/3)) at the sampled radii.

    The threshold is the least r whose r/3-ball contains the exception region;
    ``ok`` only looks at samples at or above it.
    """
    d = rank if rank is not None else (a.spec.abelian_rank or len(a.generators))
    rs = sorted(set(int(r) for r in r_samples))
    top = max((3 * r) // 2 for r in rs) if rs else 0
    region = exception_region(a)
    dist = ball_distances(a, basepoint, max(top, 1), keyfob_radius)
    far = 0
    for p in region:
        if p not in dist:
            far = max(far, top + 1)
        else:
            far = max(far, dist[p])
    threshold = 3 * far
    growth = np.cumsum(np.bincount(np.fromiter(dist.values(), dtype=np.int64), minlength=top + 1))
    rows, ok = [], True
    for r in rs:
        lhs = int(growth[(3 * r) // 2])
        br = int(growth[r])
        b0 = free_abelian_ball(d, (2 * r) // 3)
        rhs = br * (1 + b0)
        holds = lhs <= rhs
        if r >= threshold and not holds:
            ok = False
        rows.append((r, lhs, br, b0, rhs, holds))
    return GrowthReport(threshold, d, rows, ok)


# ------------------------------------------------------------- Foelner ratio

def folner_ratio(a: NearAction, F, symmetric: bool = False) -> Fraction:
    """``|boundary_S F| / |F|`` for S = lifts (plus their inverses when symmetric).

    Undefined images count as leaving F.
    """
    F = list(dict.fromkeys(F))
    if not F:
        raise ActionError("F must be nonempty")
    idx = {p: i for i, p in enumerate(F)}
    maps = [a.lifts[g] for g in a.generators]
    if symmetric:
        maps += [a.inverse_lift(g) for g in a.generators]
    nbr = np.full((len(F), len(maps)), -1, dtype=np.int64)
    for i, p in enumerate(F):
        for s, f in enumerate(maps):
            y = f.evaluate(p)
            if y is not None and y in idx:
                nbr[i, s] = idx[y]
    return Fraction(_kernels.boundary_count(nbr), len(F))


# ------------------------------------------------------------- near freeness

def near_free_check(a: NearAction, max_length: int = 6):
    """Fixed sets of all nontrivial elements of length <= L must be finite.

    Only implemented for free abelian presentations.  Returns ``(ok, witness)``.
    This is a bounded heuristic: passing does not certify near freeness.
    """
    if a.spec.abelian_rank is None:
        raise ActionError("near_free_check needs an abelian presentation")
    gens = a.generators
    d = len(gens)
    maps = {(0,) * d: NearMap.identity(a.carrier)}
    frontier = [(0,) * d]
    for _ in range(max_length):
        nxt = []
        for v in frontier:
            for k, g in enumerate(gens):
                for e in (1, -1):
                    w = list(v)
                    w[k] += e
                    w = tuple(w)
                    if w in maps:
                        continue
                    maps[w] = compose(a.letter(g, e), maps[v])
                    nxt.append(w)
        frontier = nxt
    for v, m in maps.items():
        if not any(v):
            continue
        try:
            fs = fixed_set(m)
        except NearMapError:
            return False, v
        if not fs.is_finite():
            return False, v
    return True, None


# ---------------------------------------------------------------- rigidity

def _apply_element(a: NearAction, h, x: Point) -> Optional[Point]:
    for g, e in zip(a.generators, h):
        f = a.lifts[g] if e > 0 else a.inverse_lift(g)
        for _ in range(abs(e)):
            if x is None:
                return None
            x = f.evaluate(x)
    return x


def rigidity_conjugator(alpha: NearAction, beta: NearAction, start_radius: int = 4,
                        max_radius: int = 64) -> NearMap:
    """Finitely supported sigma with sigma alpha(g) sigma^-1 = beta(g) for all g.

    ``alpha`` must be the simply transitive Z^2 action on a single plane cell.
    The displacement x -> sigma(x) - x is propagated along alpha-edges from a
    far basepoint where it is zero; the candidate is accepted once it is the
    identity on the window rim and conjugates every lift exactly.
    """
    if alpha.carrier != beta.carrier or alpha.generators != beta.generators:
        raise ActionError("alpha and beta must share carrier and generators")
    if len(alpha.carrier.cells) != 1 or alpha.carrier.cells[0].dim != 2 \
            or any(ax.kind != "full" for ax in alpha.carrier.cells[0].axes):
        raise ActionError("alpha must live on a single plane cell")
    if not verify_genuine_action(beta):
        raise RigidityObstruction("beta is not a genuine action", {"reason": "not_genuine"})
    for g in alpha.generators:
        if not near_equal(alpha.lifts[g], beta.lifts[g]):
            raise RigidityObstruction(f"beta({g}) is not near equal to alpha({g})",
                                      {"reason": "not_near_equal", "generator": g})
    cell = alpha.carrier.cells[0].id
    steps = []
    for g in alpha.generators:
        x0 = Point(cell, (0, 0))
        steps.append(np.subtract(alpha.lifts[g].evaluate(x0).coords, x0.coords))
    basis = np.array(steps)
    if abs(round(np.linalg.det(basis))) != 1:
        raise ActionError("alpha is not simply transitive")
    diff = set()
    for g in alpha.generators:
        diff.update(disagreement(alpha.lifts[g], beta.lifts[g]))
        diff.update(disagreement(alpha.inverse_lift(g), beta.inverse_lift(g)))
    reach = max((max(abs(c) for c in p.coords) for p in diff), default=0)
    radius = max(start_radius, reach + 2)
    inv_basis = np.linalg.inv(basis.T)
    history = []
    while radius <= max_radius:
        win = enumerate_window(alpha.carrier, radius)
        base = Point(cell, (radius, radius))
        sigma = {}
        ok = True
        for x in win:
            h = np.rint(inv_basis @ np.subtract(x.coords, base.coords)).astype(int)
            y = _apply_element(beta, h, base)
            if y is None:
                ok = False
                break
            sigma[x] = y
        rim = [x for x in win if max(abs(c) for c in x.coords) == radius]
        moved_rim = sum(1 for x in rim if sigma.get(x) != x)
        image_ok = ok and set(sigma.values()) == set(win)
        history.append({"radius": radius, "rim_moved": moved_rim, "bijective_on_window": image_ok})
        if ok and moved_rim == 0 and image_ok:
            s = NearMap.from_permutation(alpha.carrier, sigma)
            s_inv = invert(s)
            if all(graph_equal(compose(s, compose(alpha.lifts[g], s_inv)), beta.lifts[g])
                   for g in alpha.generators):
                return s
        radius *= 2
    raise RigidityObstruction("no finitely supported conjugator inside the search window",
                              {"reason": "window_exhausted", "attempts": history})
