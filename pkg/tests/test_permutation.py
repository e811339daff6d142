from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import all_perms, permutations
from fixed_point_forest import (BasePermutationError, BudgetExceededError, InvalidBumpError,
                                Permutation, PermutationError, base_of, bump, children,
                                distance_to_base, exit_order, in_identity_tree,
                                is_derangement, is_leaf, parse_permutation,
                                random_permutation, separation_word, sort_step,
                                true_fixed_points)
from fixed_point_forest.permutation import base_from_exits, one_line

P = parse_permutation


def naive_base(pi):
    # direct list simulation of the sort step, written independently
    a = list(pi)
    steps = 0
    while a[0] != 1:
        v = a.pop(0)
        a.insert(v - 1, v)
        steps += 1
    return tuple(a), steps


class TestExamples:
    def test_separation_word(self):
        assert tuple(separation_word(P("32415"))) == (2, 0, 1, -3, 0)
        assert tuple(separation_word(Permutation.identity(4))) == (0, 0, 0, 0)
        assert tuple(separation_word(P("21"))) == (1, -1)

    def test_true_fixed_points(self):
        assert true_fixed_points(P("42135")) == [2, 5]
        assert true_fixed_points(P("32415")) == [2, 5]
        assert true_fixed_points(Permutation.identity(4)) == [2, 3, 4]

    def test_derangement_and_leaf(self):
        assert is_derangement(P("34521"))
        assert not is_derangement(P("1234"))
        assert is_derangement(P("231"))
        assert is_leaf(P("132")) and not is_derangement(P("132"))
        assert not is_leaf(P("1234"))
        assert is_leaf(P("2143"))

    def test_sort_step(self):
        assert sort_step(P("3142")) == P("1432")
        assert sort_step(P("4312")) == P("3124")
        assert sort_step(P("21")) == P("12")
        with pytest.raises(BasePermutationError):
            sort_step(P("123"))

    def test_bump(self):
        assert bump(P("32415"), 2) == P("23415")
        assert bump(P("32415"), 5) == P("53241")
        assert bump(P("12"), 2) == P("21")
        with pytest.raises(InvalidBumpError):
            bump(P("32415"), 3)
        with pytest.raises(InvalidBumpError):
            bump(P("123"), 1)

    def test_children(self):
        assert children(P("42135")) == {P("24135"), P("54213")}
        assert children(P("3124")) == {P("4312")}
        assert children(P("2143")) == set()

    def test_distance_to_base(self):
        assert distance_to_base(P("3142")) == 1
        assert distance_to_base(P("4312")) == 2
        assert distance_to_base(P("132")) == 0

    def test_identity_tree(self):
        assert in_identity_tree(P("4312"))
        assert not in_identity_tree(P("2143"))
        assert in_identity_tree(Permutation.identity(7))

    def test_random_permutation(self):
        pi = random_permutation(5, np.random.default_rng(3))
        assert sorted(pi) == [1, 2, 3, 4, 5]
        assert random_permutation(9, np.random.default_rng(8)) == \
            random_permutation(9, np.random.default_rng(8))

    def test_random_permutation_uniform(self):
        rng = np.random.default_rng(99)
        counts = Counter(random_permutation(3, rng) for _ in range(60000))
        assert len(counts) == 6
        for c in counts.values():
            assert abs(c / 60000 - 1 / 6) <= 0.01


class TestParsing:
    @pytest.mark.parametrize("text,expected", [
        ("3 2 4 1 5", (3, 2, 4, 1, 5)), ("3,1,4,2", (3, 1, 4, 2)),
        ("32415", (3, 2, 4, 1, 5)), (" 1 ", (1,)), ("10 9 8 7 6 5 4 3 2 1", tuple(range(10, 0, -1))),
    ])
    def test_accepts(self, text, expected):
        assert parse_permutation(text).values == expected

    @pytest.mark.parametrize("text,fragment", [
        ("1 1 2", "duplicate value 1 at position 2"),
        ("1 2 4", "value 4 at position 3"),
        ("", "empty"),
        ("1 a", "not an integer"),
    ])
    def test_rejects(self, text, fragment):
        with pytest.raises(PermutationError, match=fragment):
            parse_permutation(text)

    @given(permutations(max_n=15))
    def test_round_trip(self, pi):
        assert parse_permutation(one_line(pi)) == pi


class TestProperties:
    @given(permutations(), st.data())
    def test_bump_then_sort(self, pi, data):
        fps = true_fixed_points(pi)
        if fps:
            i = data.draw(st.sampled_from(fps))
            assert sort_step(bump(pi, i)) == pi

    @given(permutations(min_n=2))
    def test_sort_then_bump(self, pi):
        if pi.is_base():
            return
        parent = sort_step(pi)
        assert bump(parent, pi[1]) == pi

    @given(permutations())
    def test_children_distinct_and_map_back(self, pi):
        kids = [bump(pi, i) for i in true_fixed_points(pi)]
        assert len(set(kids)) == len(kids)
        assert all(sort_step(c) == pi for c in kids)

    @pytest.mark.parametrize("n", range(1, 8))
    def test_exhaustive_small(self, n):
        for pi in all_perms(n):
            word = separation_word(pi)
            assert sum(word) == 0
            assert all(1 - i <= e <= n - i for i, e in enumerate(word, start=1))
            assert is_leaf(pi) == (not children(pi))


@pytest.mark.parametrize("n", range(1, 9))
def test_base_routes_agree(n):
    # three routes to the base: naive simulation, memoised step count, exit order
    ident = tuple(range(1, n + 1))
    for pi in all_perms(n):
        base, steps = naive_base(pi.values)
        assert base_of(pi).values == base
        assert distance_to_base(pi) == steps
        assert base_from_exits(pi).values == base
        assert in_identity_tree(pi) == (base == ident)


def test_exit_order():
    # 43521: the cards 4, 3, 5, 2 sit in front of 1
    pi = P("43521")
    order = exit_order(pi.values[:4])
    assert sorted(order) == [2, 3, 4, 5]
    a = list(pi)
    passed = []
    while a[0] != 1:
        v = a.pop(0)
        if v > a.index(1) + 1:
            passed.append(v)
        a.insert(v - 1, v)
    assert order == passed
    with pytest.raises(PermutationError):
        exit_order([4, 3, 1, 2])


def _solver_bound(rng, n, q):
    # q cards in front of 1, increasing tail behind it, big front cards decreasing
    front = sorted(rng.choice(np.arange(2, n + 1), size=q, replace=False).tolist())
    tail = sorted(set(range(2, n + 1)) - set(front))
    small = [v for v in front if v <= q]
    big = sorted((v for v in front if v > q), reverse=True)
    rng.shuffle(small)
    slots = sorted(rng.choice(q, size=len(small), replace=False).tolist())
    deck, si, bi = [], 0, 0
    for k in range(q):
        if si < len(small) and slots[si] == k:
            deck.append(small[si])
            si += 1
        else:
            deck.append(big[bi])
            bi += 1
    return Permutation(deck + [1] + tail)


def test_identity_tree_budget():
    rng = np.random.default_rng(5)
    hits = 0
    for _ in range(200):
        pi = _solver_bound(rng, 300, 150)
        try:
            got = in_identity_tree(pi, budget=2)
        except BudgetExceededError as exc:
            assert exc.budget == 2
            hits += 1
        else:
            assert got == in_identity_tree(pi)
    assert hits > 0


def test_identity_tree_agrees_with_simulation():
    rng = np.random.default_rng(6)
    for _ in range(300):
        pi = _solver_bound(rng, 40, int(rng.integers(1, 30)))
        assert in_identity_tree(pi) == (naive_base(pi.values)[0] == tuple(range(1, 41)))
