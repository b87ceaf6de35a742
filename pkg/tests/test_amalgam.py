import random

import pytest
from hypothesis import given, settings, strategies as st

from nearperm.amalgam import (
    AmalgamError,
    FinPerm,
    _left_mult,
    amalgam_invariant,
    ball,
    build_amalgam_model,
    build_realizable_window,
    commensuration_evidence,
    disjoint_union,
    in_X,
    random_enlargement,
)

PARAMS = [(2, 2, 8), (3, 3, 6), (2, 4, 6), (5, 5, 4)]


def brute_pcycles(p, n, Y):
    """Count p-cycles of t^n on Y by multiplying group elements directly."""
    def tn(x):
        for _ in range(n):
            x = _left_mult(x, "t", p, n)
        return x
    seen, count = set(), 0
    for x in Y:
        if x in seen:
            continue
        orb, y = [x], tn(x)
        while y != x:
            orb.append(y)
            y = tn(y)
        seen.update(orb)
        count += len(orb) == p
    return count


def test_group_relations_hold_in_normal_form():
    for p, n in [(2, 2), (3, 3), (2, 4)]:
        for x in ball(p, n, 3):
            y = x
            for _ in range(n):
                y = _left_mult(y, "t", p, n)
            z = x
            for _ in range(p):
                z = _left_mult(z, "u", p, n)
            assert y == z


@pytest.mark.parametrize("p,n,L", [(2, 2, 5), (2, 4, 4), (3, 6, 3)])
def test_ball_sizes(p, n, L):
    # k-syllable reduced words alternate between t^a (n-1 choices) and u^b (p-1)
    T, U = n - 1, p - 1
    words = 1 + sum(T ** -(-k // 2) * U ** (k // 2) + U ** -(-k // 2) * T ** (k // 2)
                    for k in range(1, L + 1))
    B = ball(p, n, L)
    assert len(B) == len(set(B)) == p * words


@pytest.mark.parametrize("p,n,L", PARAMS)
def test_model_invariant_is_one(p, n, L):
    model = build_amalgam_model(p, n, L)
    assert model.margin_ok
    assert sorted(model.data.F()) == sorted(model.Y)
    assert model.invariant() == 1
    assert brute_pcycles(p, n, model.Y) % p == 1
    assert all(in_X(x) for x in model.data.points)


@pytest.mark.parametrize("p,n,L", PARAMS[:2])
def test_doubling_adds(p, n, L):
    model = build_amalgam_model(p, n, L)
    d, Y = disjoint_union(model.data, model.data, model.Y, model.Y)
    assert amalgam_invariant(d, Y) == 2 % p


@pytest.mark.parametrize("p,n,L", PARAMS[:2])
def test_union_with_realizable_window(p, n, L):
    model = build_amalgam_model(p, n, L)
    real = build_realizable_window(p, n, L - 2)
    d, Y = disjoint_union(model.data, real, model.Y, [])
    assert amalgam_invariant(d, Y) == 1


@given(st.integers(0, 10 ** 9))
@settings(max_examples=20)
def test_enlargements_do_not_change_the_invariant(seed):
    model = build_amalgam_model(2, 2, 8)
    Y = random_enlargement(model.data, model.Y, random.Random(seed))
    assert set(model.Y) <= set(Y)
    assert amalgam_invariant(model.data, Y) == 1


@pytest.mark.parametrize("p,n,L", [(2, 2, 6), (3, 3, 4)])
def test_realizable_window(p, n, L):
    d = build_realizable_window(p, n, L)
    assert d.F() == []
    assert amalgam_invariant(d, []) == 0
    Y = random_enlargement(d, [], random.Random(1))
    assert amalgam_invariant(d, Y) == 0


@pytest.mark.parametrize("p,n,L", [(2, 2, 8), (3, 3, 6)])
def test_commensuration_evidence_stabilizes(p, n, L):
    rows = commensuration_evidence(p, n, L)
    tail = [(r["t"], r["u"]) for r in rows if r["radius"] >= L - 2]
    assert len(set(tail)) == 1
    # brute force at one radius: tX equals X, uX and X differ on 2p points
    G = ball(p, n, 4)
    X = {x for x in G if in_X(x)}
    uX = {_left_mult(x, "u", p, n) for x in X}
    inside = {x for x in G if len(x[0]) <= 3}
    assert len((uX ^ X) & inside) == rows[2]["u"] == 2 * p
    assert rows[2]["t"] == 0


def test_invariant_errors():
    model = build_amalgam_model(2, 2, 6)
    with pytest.raises(AmalgamError):
        amalgam_invariant(model.data, [])
    x = next(x for x in model.data.points if model.data.u(x) != x)
    with pytest.raises(AmalgamError):
        amalgam_invariant(model.data, model.Y + [x])
    for bad in [(4, 4, 6), (3, 2, 6), (2, 2, 2)]:
        with pytest.raises(AmalgamError):
            build_amalgam_model(*bad)


def test_finperm():
    f = FinPerm(list("abcd"), [1, 2, 0, 3])
    assert f("a") == "b" and f.power(3).is_identity()
    assert f.cycle_type() == {3: 1, 1: 1}
    assert f.orbit("a") == ["a", "b", "c"]
    assert f.restrict("abc").points == ["a", "b", "c"]
    with pytest.raises(AmalgamError):
        f.restrict("ab")
    with pytest.raises(AmalgamError):
        FinPerm(list("ab"), [0, 0])
