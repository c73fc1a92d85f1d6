"""Emptiness, membership, support, hulls, leaves, reduction and grids."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hzreach import query, sets, sos
from hzreach.errors import CapExceeded, Indeterminate
from hzreach.sets import HybridZonotope, Interval

from oracles import (
    contains_by_leaves,
    count_leaves_highs,
    nonempty_leaf_count,
    random_hz,
    support_by_leaves,
    zonotope_support,
)


def _hz(seed, **kw):
    return HybridZonotope(*random_hz(np.random.default_rng(seed), **kw))


class TestEmptiness:
    def test_random_sets_nonempty(self):
        for seed in range(5):
            assert not query.is_empty(_hz(seed))

    def test_canonical_empty(self):
        assert query.is_empty(query.empty_set(3))

    def test_binary_infeasible(self):
        z = HybridZonotope.build(gb=[[1.0, 1.0]], c=[0.0], ab=[[1.0, 1.0]], b=[1.0])
        assert query.is_empty(z)

    def test_support_of_empty(self):
        assert query.support(query.empty_set(2), [1.0, 0.0]) == -np.inf


class TestMembership:
    @pytest.mark.parametrize("seed", range(6))
    def test_agrees_with_leaf_oracle(self, seed):
        rng = np.random.default_rng(seed)
        z = HybridZonotope(*random_hz(rng, ng=4, nb=3, nc=2))
        for _ in range(4):
            x = rng.normal(size=2) * 2
            assert query.contains_point(z, x) == contains_by_leaves(z, x, tol=1e-6)

    def test_witness_reproduces_point(self, rng):
        z = _hz(11, ng=5, nb=3, nc=2)
        x = query.support(z, [1.0, 0.5], return_result=True)[1]
        xi = x.witness
        p = z.point_from_factors(xi[: z.ng], xi[z.ng :])
        inside, w = query.contains_point(z, p, return_witness=True)
        assert inside
        np.testing.assert_allclose(z.point_from_factors(w[: z.ng], w[z.ng :]), p, atol=1e-6)

    def test_tolerance_widens(self):
        z = sets.point([0.0, 0.0])
        assert not query.contains_point(z, [1e-3, 0.0], tol=1e-6)
        assert query.contains_point(z, [1e-3, 0.0], tol=1e-2)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            query.contains_point(sets.point([0.0]), [0.0, 1.0])

    def test_node_limit_is_indeterminate(self):
        f = sos.enclose_1d(np.sin, np.linspace(-4, 4, 81), delta=0.0)
        z = f.graph_set
        # a point just off the graph needs branching to refute
        with pytest.raises(Indeterminate):
            query.contains_point(z, (0.05, np.sin(0.05) + 0.01), tol=0.0, node_limit=1)


class TestSupport:
    @given(st.integers(0, 5000))
    def test_zonotope_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        g = rng.normal(size=(3, 5))
        c = rng.normal(size=3)
        d = rng.normal(size=3)
        z = HybridZonotope.build(gc=g, c=c)
        assert query.support(z, d) == pytest.approx(zonotope_support(g, c, d), abs=1e-8)

    @pytest.mark.parametrize("seed", range(8))
    def test_leaf_oracle(self, seed):
        z = _hz(seed + 20, ng=5, nb=4, nc=2)
        d = np.random.default_rng(seed).normal(size=2)
        assert query.support(z, d) == pytest.approx(support_by_leaves(z, d), abs=1e-6)

    def test_support_bound_decides(self):
        z = _hz(3)
        s = support_by_leaves(z, [1.0, 0.0])
        assert query.support_bound(z, [1.0, 0.0], s + 1e-6)
        assert not query.support_bound(z, [1.0, 0.0], s - 1e-3)

    def test_interval_hull_of_box(self):
        z = HybridZonotope.build(gc=np.diag([np.pi, 0.1]), c=[0.0, 0.0])
        h = query.interval_hull(z)
        np.testing.assert_allclose(h.lo, [-np.pi, -0.1])
        np.testing.assert_allclose(h.hi, [np.pi, 0.1])

    def test_hull_within(self):
        z = HybridZonotope.build(gc=np.diag([np.pi, 0.1]), c=[0.0, 0.0])
        assert query.hull_within(z, Interval([-4, -8], [4, 8]))
        assert not query.hull_within(z, Interval([-1, -1], [1, 1]))


class TestLeaves:
    @pytest.mark.parametrize("seed", range(5))
    def test_count_matches_oracle(self, seed):
        z = _hz(seed + 40, ng=4, nb=5, nc=3)
        n = nonempty_leaf_count(z)
        assert query.count_nonempty_leaves(z) == n
        assert len(query.leaf_enumerate(z)) == n

    def test_enumerated_leaves_nonempty(self):
        z = _hz(2, ng=4, nb=4, nc=2)
        for leaf in query.leaf_enumerate(z):
            assert leaf.set.nb == 0
            assert not query.is_empty(leaf.set)

    def test_cap(self):
        z = sets.cartesian_product(*(HybridZonotope.build(gb=[[1.0]], c=[0.0]) for _ in range(2)))
        z = sets.cartesian_product(z, HybridZonotope.build(gb=[[1.0]], c=[0.0]))
        with pytest.raises(CapExceeded) as info:
            query.count_nonempty_leaves(z, cap=5)
        assert info.value.lower_bound > 5

    def test_continuous_only(self):
        assert query.count_nonempty_leaves(HybridZonotope.build(gc=np.eye(2), c=[0, 0])) == 1
        assert query.count_nonempty_leaves(query.empty_set(2)) == 0

    def test_reach_leaves_by_independent_walk(self, pendulum_records):
        for k in (1, 2):
            z = pendulum_records[k].set
            assert query.count_nonempty_leaves(z) == count_leaves_highs(z)


class TestReduction:
    def test_drops_zero_columns_and_duplicate_rows(self):
        z = HybridZonotope.build(gc=[[1.0, 0.0, 1.0]], c=[0.0], ac=[[1.0, 0.0, -1.0], [2.0, 0.0, -2.0]], b=[0.0, 0.0])
        r = query.reduce_trivial(z)
        assert r.complexity == (2, 0, 1)
        for d in ([1.0], [-1.0]):
            assert query.support(r, d) == pytest.approx(query.support(z, d))

    def test_inconsistent_rows(self):
        z = HybridZonotope.build(gc=[[1.0, 1.0]], c=[0.0], ac=[[1.0, 1.0], [1.0, 1.0]], b=[0.0, 1.0])
        assert query.is_empty(query.reduce_trivial(z))

    @pytest.mark.parametrize("seed", range(4))
    def test_support_preserved(self, seed):
        z = _hz(seed, ng=4, nb=3, nc=2)
        z = sets.generalized_intersection(z, z, np.eye(2))
        r = query.reduce_trivial(z)
        d = np.random.default_rng(seed).normal(size=2)
        assert query.support(r, d) == pytest.approx(query.support(z, d), abs=1e-7)


class TestGrid:
    def test_sin_band(self):
        xs_bp = np.linspace(-4, 4, 21)
        f = sos.enclose_1d(np.sin, xs_bp, name="sin")
        xs, ys, status = query.grid_membership_export(f.graph_set, (0, 1), Interval([-4, -1.2], [4, 1.2]), 0.4)
        for i, y in enumerate(ys):
            for j, x in enumerate(xs):
                gap = abs(y - np.interp(x, xs_bp, np.sin(xs_bp)))
                if gap > f.error_bound + 1e-6:
                    assert status[i, j] == "out"
                elif gap < f.error_bound - 1e-6:
                    assert status[i, j] == "in"
        # a fine grid resolves the band: "in" cells sit within delta of the interpolant
        xs, ys, status = query.grid_membership_export(f.graph_set, (0, 1), Interval([1.0, 0.7], [1.1, 1.0]), 0.01)
        for j, x in enumerate(xs):
            inside = ys[status[:, j] == "in"]
            assert inside.size
            assert np.abs(inside - np.interp(x, xs_bp, np.sin(xs_bp))).max() <= f.error_bound + 1e-9

    def test_csv(self):
        text = query.grid_to_csv(np.array([0.5]), np.array([1.5, 2.5]), np.array([["in"], ["out"]], dtype=object))
        assert text.splitlines() == ["x,y,status", "0.5,1.5,in", "0.5,2.5,out"]

    def test_bad_dims(self):
        with pytest.raises(ValueError):
            query.grid_membership_export(sets.point([0.0, 0.0]), (0, 2))
