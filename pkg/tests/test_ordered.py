from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, strategies as st

from lambdageq.ordered import (
    LambdaRational, LambdaScalar, RankMismatch, compare, halve, height, parse_vector, project,
)
from oracles import rlex_less, vec_height

S = LambdaScalar


@pytest.mark.parametrize("a, b, want", [
    ((1, 0), (0, 1), -1),
    ((5, 0), (5, 0), 0),
    ((-3, 2), (100, 1), 1),
])
def test_compare_examples(a, b, want):
    assert compare(S(a), S(b)) == want


@pytest.mark.parametrize("a, want", [((0, 0), 0), ((7, 0), 1), ((3, -2), 2)])
def test_height_examples(a, want):
    assert height(S(a)) == want


@pytest.mark.parametrize("k, want", [(1, (0, 5)), (0, (3, 5)), (2, (0, 0))])
def test_project_examples(k, want):
    assert project(S((3, 5)), k) == S(want)


@pytest.mark.parametrize("a, want", [
    ((2, 4), (1, 2)),
    ((1, 0), (Fraction(1, 2), 0)),
    ((0, 0), (0, 0)),
])
def test_halve_examples(a, want):
    assert halve(S(a)) == LambdaRational(want)


def test_rank_mismatch():
    with pytest.raises(RankMismatch):
        compare(S((1,)), S((1, 0)))
    with pytest.raises(RankMismatch):
        S((1,)) + S((1, 0))


def test_minimal_positive_and_parse():
    one = S.of_int(1, 3)
    assert one == S.unit(3, 1) and one > S.zero(3)
    assert parse_vector("[3, -2]") == S((3, -2))
    assert isinstance(parse_vector("[1/2,0]"), LambdaRational)
    with pytest.raises(ValueError):
        parse_vector("3,2")


SMALL = list(product(range(-2, 3), repeat=2))


def test_order_agrees_with_reversed_tuples_exhaustive():
    for a, b in product(SMALL, repeat=2):
        got = compare(S(a), S(b))
        want = -1 if rlex_less(a, b) else (1 if rlex_less(b, a) else 0)
        assert got == want


def test_order_axioms_exhaustive():
    zero = S.zero(2)
    for a, b in product(SMALL, repeat=2):
        x, y = S(a), S(b)
        assert compare(x, y) == -compare(y, x)
        assert (x + y >= x) == (y >= zero)
    for a, b, c in product(SMALL[::3], repeat=3):
        x, y, z = S(a), S(b), S(c)
        if x <= y and y <= z:
            assert x <= z


coords = st.lists(st.integers(-10**30, 10**30), min_size=3, max_size=3)


@given(coords, coords)
def test_height_of_sum(a, b):
    x, y = S(a), S(b)
    assert height(x) == vec_height(a)
    assert height(x + y) <= max(height(x), height(y))
    if height(x) != height(y):
        assert height(x + y) == max(height(x), height(y))


@given(coords, st.integers(0, 3))
def test_project_idempotent(a, k):
    x = S(a)
    assert project(project(x, k), k) == project(x, k)


@given(coords, coords, st.integers(0, 3))
def test_project_preserves_order_above_k(a, b, k):
    x, y = S(a), S(b)
    if height(x) > k and height(y) > k and height(x - y) > k:
        assert compare(project(x, k), project(y, k)) == compare(x, y)


@given(coords)
def test_halve_doubles_back(a):
    h = halve(S(a))
    assert h * 2 == LambdaRational(a)
