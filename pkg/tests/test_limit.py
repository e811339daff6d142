import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fixed_point_forest import (CoincidentPointError, NotAnAtomError, PointProcessFamily,
                                UniformStream, backward_map, build_r_ball_limit,
                                descend_tree, forward_map, limit_bumped_scan,
                                limit_farthest_leaf, limit_nearest_leaf, sample_limit_ball,
                                sample_limit_statistic, sample_ppp, yule_count)
from fixed_point_forest.acceptance import window_mutation_failures
from fixed_point_forest.forest import LEAF_TOKEN
from fixed_point_forest.limit import poisson1_from_uniform, sample_window
from fixed_point_forest.stats import EmpiricalDistribution, GeometricLaw, PoissonLaw, tv_distance


@st.composite
def families(draw, lo=-3, hi=3):
    # distinct points spread over the levels lo..hi
    pts = draw(st.lists(st.floats(0.001, 0.999), unique=True, max_size=14))
    levels = {k: [] for k in range(lo, hi + 1)}
    for p in pts:
        levels[draw(st.integers(lo, hi))].append(p)
    return PointProcessFamily({k: sorted(v) for k, v in levels.items()})


def same(a, b, lo=-6, hi=6):
    return a.window(lo, hi) == b.window(lo, hi)


class TestSamplePpp:
    def test_moments(self):
        rng = np.random.default_rng(2024)
        counts = [len(sample_ppp(rng)) for _ in range(10**6)]
        assert abs(np.mean(counts) - 1.0) <= 0.01
        assert abs(np.mean(np.array(counts) == 0) - math.exp(-1)) <= 0.005

    def test_deterministic_and_sorted(self):
        a = [sample_ppp(np.random.default_rng(4)) for _ in range(3)]
        b = [sample_ppp(np.random.default_rng(4)) for _ in range(3)]
        assert a == b
        rng = np.random.default_rng(5)
        for _ in range(1000):
            pts = sample_ppp(rng)
            assert list(pts) == sorted(set(pts))
            assert all(0 < p < 1 for p in pts)

    def test_inverse_cdf(self):
        assert poisson1_from_uniform(0.0) == 0
        assert poisson1_from_uniform(math.exp(-1) - 1e-12) == 0
        assert poisson1_from_uniform(math.exp(-1) + 1e-12) == 1
        assert poisson1_from_uniform(0.999999) >= 5


class TestMaps:
    def test_forward_single_atom(self):
        fam = PointProcessFamily({0: [0.4]})
        assert all(v == () for v in forward_map(fam, 0.4).window(-4, 4).values())

    def test_forward_example(self):
        fam = PointProcessFamily({0: [0.2, 0.5], 1: [0.1, 0.8]})
        out = forward_map(fam, 0.5)
        assert out.level(0) == (0.1,)
        assert out.level(1) == (0.8,)
        # the atom left of x drops one level
        assert out.level(-1) == (0.2,)

    def test_backward_examples(self):
        assert backward_map(PointProcessFamily(), 0.5).window(-3, 3) == \
            {k: ((0.5,) if k == 0 else ()) for k in range(-3, 4)}
        fam = PointProcessFamily({0: [0.7], -1: [0.3]})
        assert backward_map(fam, 0.5).level(0) == (0.3, 0.5, 0.7)

    def test_errors(self):
        fam = PointProcessFamily({0: [0.2], 1: [0.6]})
        with pytest.raises(NotAnAtomError):
            forward_map(fam, 0.6)
        with pytest.raises(CoincidentPointError):
            backward_map(fam, 0.2)
        with pytest.raises(CoincidentPointError):
            PointProcessFamily({0: [0.2], 1: [0.2]})
        with pytest.raises(CoincidentPointError):
            PointProcessFamily({0: [0.3, 0.3]})
        with pytest.raises(ValueError):
            PointProcessFamily({0: [1.0]})

    @given(families(), st.data())
    def test_round_trip(self, fam, data):
        if fam.atoms:
            x = data.draw(st.sampled_from(fam.atoms))
            assert same(backward_map(forward_map(fam, x), x), fam)

    @given(families(), st.floats(0.001, 0.999))
    def test_forward_undoes_backward(self, fam, u):
        if any(u in pts for pts in fam.window(-4, 4).values()):
            return
        assert same(forward_map(backward_map(fam, u), u), fam)

    @given(families())
    def test_point_count_preserved(self, fam):
        if fam.atoms:
            before = sum(len(v) for v in fam.window(-8, 8).values())
            after = sum(len(v) for v in forward_map(fam, fam.atoms[0]).window(-9, 9).values())
            assert after == before - 1

    def test_lazy_poisson_family(self):
        a = PointProcessFamily.poisson(11)
        b = PointProcessFamily.poisson(11)
        forward = [a.level(k) for k in range(-5, 6)]
        backward = [b.level(k) for k in range(5, -6, -1)][::-1]
        assert forward == backward


class TestTrees:
    def test_descend_word_0210(self):
        # separation word 0 2 1 0 rescaled to four points in (0, 1)
        fam = PointProcessFamily({0: [0.125, 0.875], 2: [0.375], 1: [0.625]})
        assert descend_tree(fam, 3).level_sizes() == [1, 2, 2, 2]

    def test_descend_trivial(self):
        assert descend_tree(PointProcessFamily(), 5).level_sizes() == [1]
        assert descend_tree(PointProcessFamily({0: [0.5]}), 5).level_sizes() == [1, 1]

    def test_empty_ball_is_spine(self):
        ball = build_r_ball_limit([0.3, 0.6], PointProcessFamily(), 2)
        assert len(ball) == 3
        assert ball.shape.code == b"((()))"
        assert sorted(ball.edges) == [(0, 1), (1, 2)]

    def test_one_atom_ball(self):
        ball = build_r_ball_limit([0.3], PointProcessFamily({0: [0.7]}), 1)
        assert len(ball) == 3 and ball.shape.code == b"(()())"

    def test_ball_needs_spine(self):
        with pytest.raises(ValueError):
            build_r_ball_limit([0.3], PointProcessFamily(), 2)

    def test_radius_zero(self):
        rng = np.random.default_rng(0)
        assert all(sample_limit_ball(0, rng).code == LEAF_TOKEN for _ in range(100))

    def test_root_degree_and_void(self):
        rng = np.random.default_rng(77)
        trials = 10**6
        degree = Counter()
        for _ in range(trials):
            degree[sample_limit_ball(1, rng).vertex_count - 1] += 1
        # one parent plus Poi(1) children
        shifted = EmpiricalDistribution({d - 1: c for d, c in degree.items()}, trials)
        assert tv_distance(shifted, PoissonLaw(1.0)) <= 0.005
        assert abs(degree[1] / trials - math.exp(-1)) <= 0.005

    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_order_invariance(self, r):
        rng = np.random.default_rng(r)
        for _ in range(300):
            fam, us = sample_window(r, rng)
            warped = PointProcessFamily(
                {k: [p**3 for p in pts] for k, pts in fam.window(-r + 1, r - 1).items()})
            a = build_r_ball_limit(us, fam, r).shape
            b = build_r_ball_limit([u**3 for u in us], warped, r).shape
            assert a == b
            assert descend_tree(fam, r).shape() == descend_tree(warped, r).shape()

    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_window_sufficiency(self, r):
        assert window_mutation_failures(300, r, np.random.default_rng(40 + r)) == 0


WALKS = {"nearest": limit_nearest_leaf, "farthest": limit_farthest_leaf,
         "scan": limit_bumped_scan, "yule": lambda s: yule_count(1.0, s)}


class TestWalks:
    @pytest.mark.parametrize("name", sorted(WALKS))
    def test_kernel_matches_mechanical_walk(self, name):
        fast = sample_limit_statistic(name, 3000, np.random.default_rng(9))
        stream = UniformStream(np.random.default_rng(9))
        slow = [WALKS[name](stream) for _ in range(3000)]
        assert fast.tolist() == slow

    def test_empty_start(self):
        class Zeros(UniformStream):
            # every level is drawn empty
            def __init__(self):
                pass

            def next(self):
                return 0.0
        assert limit_nearest_leaf(Zeros()) == 0
        assert limit_farthest_leaf(Zeros()) == 0
        assert limit_bumped_scan(Zeros()) == 0
        assert yule_count(0.0, np.random.default_rng(1)) == 0

    def test_index_consumption(self):
        stream = UniformStream(np.random.default_rng(3))
        for _ in range(2000):
            m, used = limit_nearest_leaf(stream, return_levels=True)
            assert m == used

    def test_nearest_counts_single_process(self):
        rng = np.random.default_rng(8)
        walks = EmpiricalDistribution.from_samples(sample_limit_statistic("nearest", 10**5, rng))
        arrivals = EmpiricalDistribution.from_samples(len(sample_ppp(rng)) for _ in range(10**5))
        assert tv_distance(walks, arrivals) <= 0.01

    def test_means(self):
        rng = np.random.default_rng(10)
        far = sample_limit_statistic("farthest", 10**6, rng)
        yule = sample_limit_statistic("yule", 10**6, rng, t=1.0)
        assert abs(far.mean() - (math.e - 1)) <= 0.01
        assert abs(yule.mean() - (math.e - 1)) <= 0.01

    def test_yule_other_time(self):
        rng = np.random.default_rng(12)
        draws = EmpiricalDistribution.from_samples(sample_limit_statistic("yule", 10**5, rng, t=2.0))
        assert tv_distance(draws, GeometricLaw(math.exp(-2.0))) <= 0.01

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            sample_limit_statistic("other", 10, np.random.default_rng(0))
        with pytest.raises(ValueError):
            yule_count(-1.0, np.random.default_rng(0))
