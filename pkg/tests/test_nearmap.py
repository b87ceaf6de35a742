import random

import pytest
from hypothesis import given, strategies as st

from helpers import LINE, brute_index, perturb, random_line_map
from nearperm.carrier import AxisDomain, Carrier, Cell, enumerate_window, pt
from nearperm.nearmap import (
    InfiniteSetError,
    NearMap,
    NearMapError,
    compose,
    cycle_type,
    cycles,
    disagreement,
    fixed_set,
    graph_equal,
    index,
    invert,
    near_equal,
    parity,
    power,
    support,
    translation_map,
)

N = Carrier((Cell("N", (AxisDomain.half(),)),))
Z = Carrier((Cell("Z", (AxisDomain.full(),)),))
seeds = st.integers(0, 10 ** 9)


def test_shift_on_N():
    s = translation_map(N, (1,))
    assert index(s) == 1
    assert index(power(s, 2)) == 2
    assert index(invert(s)) == -1
    assert fixed_set(s).card() == 0
    assert s.evaluate(pt("N", 0)) == pt("N", 1)


@given(seeds)
def test_index_matches_window_count(seed):
    f = random_line_map(random.Random(seed))
    assert index(f) == brute_index(f)


@given(seeds)
def test_compose_is_pointwise(seed):
    rng = random.Random(seed)
    f, g = random_line_map(rng), random_line_map(rng)
    h = compose(g, f)
    for x in enumerate_window(LINE, 15):
        y = f.evaluate(x)
        assert h.evaluate(x) == (None if y is None else g.evaluate(y))


@given(seeds)
def test_index_is_additive(seed):
    rng = random.Random(seed)
    f, g = random_line_map(rng), random_line_map(rng)
    assert index(compose(g, f)) == index(f) + index(g)


@given(seeds)
def test_invert_is_a_near_inverse(seed):
    f = random_line_map(random.Random(seed))
    fi = invert(f)
    ident = NearMap.identity(LINE)
    assert near_equal(compose(fi, f), ident)
    assert near_equal(compose(f, fi), ident)
    assert index(fi) == -index(f)
    for y in enumerate_window(LINE, 10):
        x = fi.evaluate(y)
        if x is not None:
            assert f.evaluate(x) == y


@given(seeds)
def test_index_invariant_under_near_equality(seed):
    rng = random.Random(seed)
    f = random_line_map(rng)
    g = perturb(rng, f)
    assert near_equal(f, g)
    assert index(f) == index(g)
    d = disagreement(f, g)
    for x in enumerate_window(LINE, 20):
        assert (f.evaluate(x) != g.evaluate(x)) == (x in d)


def test_infinite_disagreement_is_reported():
    a, b = translation_map(Z, (1,)), translation_map(Z, (2,))
    assert not near_equal(a, b)
    with pytest.raises(InfiniteSetError):
        disagreement(a, b)
    assert not graph_equal(a, b)


def test_cycles_and_parity():
    p = NearMap.from_permutation(Z, {pt("Z", 0): pt("Z", 1), pt("Z", 1): pt("Z", 2), pt("Z", 2): pt("Z", 0),
                                     pt("Z", 5): pt("Z", 6), pt("Z", 6): pt("Z", 5)})
    assert cycle_type(p) == {3: 1, 2: 1}
    assert parity(p) == 1
    assert cycles(p)[0] == [pt("Z", 0), pt("Z", 1), pt("Z", 2)]
    assert support(p) == [pt("Z", x) for x in (0, 1, 2, 5, 6)]


def test_cycle_type_rejects_non_permutations():
    with pytest.raises(NearMapError):
        cycle_type(translation_map(N, (1,)))


def test_fixed_sets():
    assert fixed_set(NearMap.identity(Z)).card() == float("inf")
    t = translation_map(Z, (3,))
    bumped = NearMap(Z, Z, t.pieces, {pt("Z", 4): pt("Z", 4)})
    fs = fixed_set(bumped)
    assert fs.is_finite() and fs.card() == 1 and fs.contains(pt("Z", 4))


@given(seeds)
def test_json_round_trip(seed):
    f = random_line_map(random.Random(seed))
    g = NearMap.from_json(f.to_json())
    assert graph_equal(f, g)


def test_validation_rejects_overlapping_sources():
    from nearperm.nearmap import Piece, Transform
    from nearperm.carrier import make_rect
    a = Piece(make_rect(Z, "Z", (0, None)), "Z", Transform.identity(1))
    b = Piece(make_rect(Z, "Z", (None, 0)), "Z", Transform.identity(1))
    with pytest.raises(NearMapError):
        NearMap(Z, Z, [a, b])
