import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import conjugate_action, perturb, random_box_perm
from nearperm import catalog
from nearperm.carrier import RectSet, make_rect, pt
from nearperm.nearaction import (
    ActionError,
    NearAction,
    RigidityObstruction,
    ball_growth,
    commensurated_test,
    components,
    folner_ratio,
    free_abelian_ball,
    growth_inequality_check,
    index_character,
    index_number,
    near_free_check,
    parse_word,
    rigidity_conjugator,
    schreier_truncation,
    verify_genuine_action,
    verify_near_action,
    word_index,
    word_str,
)
from nearperm.nearmap import NearMap, Piece, Transform, compose, graph_equal


def test_parse_word():
    assert parse_word("a b^-2 A") == (("a", 1), ("b", -2), ("a", -1))
    assert word_str(parse_word("u v U V")) == "u v u^-1 v^-1"


def test_exzz2_verifies_with_a_transposition():
    a = catalog.build_exzz2()
    rep = verify_near_action(a)
    assert rep.ok
    comm = [r for r in rep.relators if len(r.word) == 4][0]
    assert sorted(comm.support) == sorted([pt("+1", 0), pt("-1", 0)])
    assert index_character(a) == (0, 0)


def test_simply_transitive_is_genuine():
    a = catalog.build_simply_transitive(2)
    rep = verify_near_action(a)
    assert rep.ok and all(len(r.support) == 0 for r in rep.relators)
    assert verify_genuine_action(a)


def test_broken_lift_fails():
    a = catalog.build_simply_transitive(2)
    X = a.carrier
    # v^2 still commutes with u, so it does not break anything
    doubled = NearAction(X, a.spec, {"u": a.lifts["u"], "v": compose(a.lifts["v"], a.lifts["v"])})
    assert verify_near_action(doubled).ok
    flip = NearMap(X, X, [Piece(make_rect(X, "0", (None, None), (None, None)), "0",
                                Transform((0, 1), (-1, 1), (0, 1)))])
    rep = verify_near_action(NearAction(X, a.spec, {"u": a.lifts["u"], "v": flip}))
    assert not rep.ok and rep.relators[0].witness


@pytest.mark.parametrize("l", [1, 2, 3])
def test_index_character_of_K(l):
    a = catalog.build_K(l)
    assert index_character(a) == (0, -l)
    assert index_number(a) == l
    assert word_index(a, parse_word("u^3 v^2")) == -2 * l


@given(st.integers(1, 3), st.integers(-3, 3), st.integers(-3, 3))
@settings(max_examples=15)
def test_index_character_of_X_ms(m, s1, s2):
    assert index_character(catalog.build_X_ms(m, (s1, s2))) == (s2, -s1)


def test_index_zero_subsets_meeting_in_index_one():
    a = catalog.build_free_orbits(1, 2)
    X = a.carrier
    Y1 = RectSet(X, [make_rect(X, "0", (None, None))])
    Y2 = RectSet(X, [make_rect(X, "0", (0, None)), make_rect(X, "1", (None, -1))])
    r1, r2 = commensurated_test(a, Y1), commensurated_test(a, Y2)
    assert r1.commensurated and r1.restricted_index == {"u": 0}
    assert r2.commensurated and r2.restricted_index == {"u": 0}
    r3 = commensurated_test(a, Y1.intersect(Y2))
    assert r3.commensurated and r3.restricted_index == {"u": 1}


def test_even_columns_not_commensurated():
    a = catalog.build_simply_transitive(2)
    X = a.carrier
    Y = RectSet(X, [make_rect(X, "0", (None, None, 0, 2), (None, None))])
    rep = commensurated_test(a, Y)
    assert not rep.commensurated and rep.boundary["u"] is None and "u" in rep.witnesses


def test_schreier_truncations():
    t = schreier_truncation(catalog.build_simply_transitive(2), 2)
    assert len(t.vertices) == 25 and len(components(t)) == 1
    assert len(components(schreier_truncation(catalog.build_X_ms(2), 3))) == 1
    for R in (1, 3, 5):
        assert len(components(schreier_truncation(catalog.build_free_orbits(1, 2), R))) == 2
    assert len(components(schreier_truncation(catalog.build_dinfty_on_Z(True), 5))) == 2
    assert t.to_dot().startswith("digraph")


def test_schreier_is_deterministic():
    a = catalog.build_X_ms(2, (1, 0))
    assert schreier_truncation(a, 3).to_json() == schreier_truncation(a, 3).to_json()


def test_free_abelian_ball_formula():
    # brute force count of the l1 ball in Z^d
    import itertools
    for d in (1, 2, 3):
        for r in range(6):
            brute = sum(1 for v in itertools.product(range(-r, r + 1), repeat=d)
                        if sum(map(abs, v)) <= r)
            assert free_abelian_ball(d, r) == brute


def test_ball_growth_of_the_plane():
    a = catalog.build_simply_transitive(2)
    assert ball_growth(a, pt("0", 0, 0), 8) == [free_abelian_ball(2, r) for r in range(9)]


@pytest.mark.parametrize("name,params", [("X_ms", {"m": 2}), ("K", {"l": 1}), ("simply_transitive", {})])
def test_growth_inequality(name, params):
    a = catalog.build(name, **params)
    rep = growth_inequality_check(a, pt("0", 0, 0), range(1, 31))
    assert rep.ok
    assert all(row[-1] for row in rep.rows if row[0] >= rep.threshold)


def test_folner_ratios_of_a_box():
    a = catalog.build_simply_transitive(2)
    F = [pt("0", x, y) for x in range(10) for y in range(10)]
    assert folner_ratio(a, F) == Fraction(19, 100)
    assert folner_ratio(a, F, symmetric=True) == Fraction(9, 25)
    with pytest.raises(ActionError):
        folner_ratio(a, [])


def test_near_free_check():
    assert near_free_check(catalog.build_X_ms(2), 4)[0]
    ok, witness = near_free_check(catalog.build_free_orbits(1, 1), 3)
    assert ok and witness is None
    # the Houghton action fixes whole rays
    ok, witness = near_free_check(catalog.build_houghton_near_zd(2), 2)
    assert not ok and witness is not None


@given(st.integers(0, 10 ** 9))
@settings(max_examples=15)
def test_rigidity_recovers_the_conjugator(seed):
    alpha = catalog.build_simply_transitive(2)
    sigma = random_box_perm(random.Random(seed), alpha.carrier)
    s = rigidity_conjugator(alpha, conjugate_action(alpha, sigma))
    assert graph_equal(s, sigma)


def test_rigidity_rejects_a_far_action():
    alpha = catalog.build_simply_transitive(2)
    with pytest.raises(RigidityObstruction) as e:
        rigidity_conjugator(alpha, catalog.build_plane_split_pair())
    assert e.value.report["reason"] == "not_near_equal"
    with pytest.raises(RigidityObstruction) as e:
        rigidity_conjugator(alpha, catalog.build_K(1))
    assert e.value.report["reason"] == "not_genuine"


def test_action_json_round_trip():
    a = catalog.build_X_ms(3, (1, -2))
    b = NearAction.from_json(a.to_json())
    assert all(graph_equal(a.lifts[g], b.lifts[g]) for g in a.generators)
    with pytest.raises(ActionError):
        NearAction.from_json({**a.to_json(), "schema": "other"})


@given(st.integers(0, 10 ** 9))
@settings(max_examples=25)
def test_index_character_is_additive_on_words(seed):
    rng = random.Random(seed)
    a = catalog.build_X_ms(rng.randint(1, 3), (rng.randint(-3, 3), rng.randint(-3, 3)))
    chi = dict(zip(a.generators, index_character(a)))
    word = tuple((rng.choice(a.generators), rng.choice([-2, -1, 1, 2])) for _ in range(rng.randint(1, 6)))
    assert word_index(a, word) == sum(e * chi[g] for g, e in word)


def _random_ray_set(rng, X):
    rects = []
    for c in X.cells:
        dom = c.axes[0]
        kind = rng.choice(["none", "all", "tail", "head"])
        cut = rng.randint(-5, 5) if dom.kind == "full" else rng.randint(0, 5)
        if kind == "all":
            rects.append(make_rect(X, c.id, (None, None)))
        elif kind == "tail":
            rects.append(make_rect(X, c.id, (cut, None)))
        elif kind == "head":
            rects.append(make_rect(X, c.id, (None, cut)))
    return RectSet(X, [r for r in rects if r is not None])


@pytest.mark.parametrize("name,params", [("houghton", {"d": 3}), ("free_orbits", {"d": 1, "k": 2}),
                                         ("exzz2", {}), ("shift_N", {})])
@given(seed=st.integers(0, 10 ** 9))
@settings(max_examples=25)
def test_complements_and_restricted_indices(name, params, seed):
    rng = random.Random(seed)
    a = catalog.build(name, **params)
    Y = _random_ray_set(rng, a.carrier)
    Yc = a.carrier.full().diff(Y)
    r, rc = commensurated_test(a, Y), commensurated_test(a, Yc)
    assert r.commensurated == rc.commensurated
    if r.commensurated:
        total = index_character(a)
        for g, t in zip(a.generators, total):
            assert r.restricted_index[g] + rc.restricted_index[g] == t
        # replacing lifts by near equal ones keeps the subset commensurated
        lifts = {g: perturb(rng, f, k=3) for g, f in a.lifts.items()}
        b = NearAction(a.carrier, a.spec, lifts)
        assert commensurated_test(b, Y).commensurated


@pytest.mark.parametrize("name,params", [("dinfty_on_Z", {"perturbed": True}), ("houghton", {"d": 2}),
                                         ("X_ms", {"m": 2, "s": (1, -1)}), ("K", {"l": 2}),
                                         ("free_orbits", {"d": 1, "k": 3})])
def test_components_stop_growing(name, params):
    a = catalog.build(name, **params)
    counts = [len(components(schreier_truncation(a, R))) for R in range(4, 11)]
    assert all(x >= y for x, y in zip(counts, counts[1:]))


def test_folner_examples():
    a = catalog.build_simply_transitive(2)
    for n in (3, 7, 12):
        F = [pt("0", x, y) for x in range(n + 1) for y in range(n + 1)]
        assert folner_ratio(a, F) <= Fraction(4, n + 1)
    s = catalog.scott_action(3)
    assert folner_ratio(s, [pt("B0", 0)]) == 0
