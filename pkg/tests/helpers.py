"""Random instances and brute-force oracles shared by the tests."""

import random

from nearperm.carrier import AxisDomain, Carrier, Cell, Point, enumerate_window, make_rect
from nearperm.nearmap import NearMap, Piece, Transform

LINE = Carrier((Cell("A", (AxisDomain.full(),)), Cell("B", (AxisDomain.full(),)),
                Cell("C", (AxisDomain.half(),))))

GRID = Carrier((Cell("P", (AxisDomain.full(), AxisDomain.full())),
                Cell("Q", (AxisDomain.half(), AxisDomain.bounded(5)))))

_TAILS = [("A", -1), ("A", 1), ("B", -1), ("B", 1), ("C", 1)]


def random_line_map(rng: random.Random, extra=3) -> NearMap:
    """Closely bijective near map of LINE: tails go to tails, the middle is scrambled."""
    cut = {}
    for c in ("A", "B"):
        a = rng.randint(-4, 4)
        cut[c] = (a, a + rng.randint(0, 4))
    cut["C"] = (0, rng.randint(0, 4))
    targets = _TAILS[:]
    rng.shuffle(targets)
    pieces = []
    for (sc, side), (tc, tside) in zip(_TAILS, targets):
        a, b = cut[sc]
        bounds = (None, a - 1) if side < 0 else (b, None)
        sign = 1 if side == tside else -1
        t = rng.randint(-3, 3)
        if tc == "C":
            # image must stay inside N
            edge = b if side > 0 else a - 1
            t = max(t, -sign * edge)
        src = make_rect(LINE, sc, bounds)
        pieces.append(Piece(src, tc, Transform((0,), (sign,), (t,))))
    exc = {}
    middle = [Point(c, (x,)) for c, (a, b) in cut.items() for x in range(a, b)]
    pool = [p for p in enumerate_window(LINE, 6)]
    for p in middle + rng.sample(pool, extra):
        exc[p] = None if rng.random() < 0.25 else rng.choice(pool)
    return NearMap(LINE, LINE, pieces, exc)


def perturb(rng: random.Random, f: NearMap, k=4) -> NearMap:
    """Same map with k points redirected (or made undefined)."""
    pool = enumerate_window(f.src, 8)
    exc = dict(f.exceptions)
    for p in rng.sample(pool, k):
        exc[p] = None if rng.random() < 0.3 else rng.choice(pool)
    return NearMap(f.src, f.dst, f.pieces, exc)


def brute_index(f: NearMap, R=40, R2=70) -> int:
    """|W| - #{x : f(x) in W} - #{x : f(x) undefined}, W a window holding every defect."""
    W = set(enumerate_window(f.dst, R))
    hits = undefined = 0
    for x in enumerate_window(f.src, R2):
        y = f.evaluate(x)
        if y is None:
            undefined += 1
        elif y in W:
            hits += 1
    return len(W) - hits - undefined


def random_axis(rng: random.Random):
    lo = None if rng.random() < 0.3 else rng.randint(-25, 25)
    hi = None if rng.random() < 0.3 else (rng.randint(-25, 25) if lo is None else lo + rng.randint(0, 30))
    q = rng.choice([1, 1, 2, 3])
    return (lo, hi, rng.randrange(q), q)


def random_rect(rng: random.Random, carrier=GRID):
    while True:
        cell = rng.choice(carrier.cells)
        r = make_rect(carrier, cell.id, *[random_axis(rng) for _ in cell.axes])
        if r is not None:
            return r


def random_box_perm(rng: random.Random, carrier, cell="0", box=10, k=None) -> NearMap:
    """Random permutation of a few points of [0, box)^2, identity elsewhere."""
    k = rng.randint(2, 12) if k is None else k
    pts = rng.sample([Point(cell, (x, y)) for x in range(box) for y in range(box)], k)
    img = pts[:]
    rng.shuffle(img)
    return NearMap.from_permutation(carrier, dict(zip(pts, img)))


def conjugate_action(a, sigma):
    """Action g -> sigma a(g) sigma^-1."""
    from nearperm.nearaction import NearAction
    from nearperm.nearmap import compose, invert
    si = invert(sigma)
    lifts = {g: compose(sigma, compose(f, si)) for g, f in a.lifts.items()}
    return NearAction(a.carrier, a.spec, lifts, name="conjugate")


def has_square_root(perm) -> bool:
    """Exhaustive backtracking search for r with r(r(x)) = perm[x].

    Choosing r(x) = y forces r(perm^k x) = perm^k y and r(perm^k y) =
    perm^(k+1) x, so each branch fixes r on whole orbits at once.
    """
    n = len(perm)
    r = [-1] * n

    def assign(x, y, undo):
        while True:
            if r[x] == -1:
                r[x] = y
                undo.append(x)
            elif r[x] != y:
                return False
            else:
                return True
            # r(y) must be perm(x); then continue along the orbit of x
            x, y = y, perm[x]

    def solve():
        try:
            x = r.index(-1)
        except ValueError:
            return True
        for y in range(n):
            undo = []
            if assign(x, y, undo) and solve():
                return True
            for z in undo:
                r[z] = -1
        return False

    return solve()
