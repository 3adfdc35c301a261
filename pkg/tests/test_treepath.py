import numpy as np
import pytest

from extractlab.core import Categorical, Continuous, FeatureSpace, r_unif
from extractlab.harness import gen_random_tree, tree_complexity_bound
from extractlab.models import DecisionTree, Internal, Leaf, ThresholdSplit
from extractlab.oracle import DisclosurePolicy, Oracle, node_id
from extractlab.treepath import (
    Interval,
    category_split,
    line_search,
    path_find,
    ruleset_to_tree,
    top_down_find,
    UncoveredRegionError,
)

from conftest import R, B, G, Y, O


def _oracle(tree, space, partial=False, fields=False):
    policy = DisclosurePolicy(outputs="probs", allow_partial=partial, reveal_fields=fields)
    return Oracle(tree, space, policy)


def _chain_tree(thresholds, lo=0.0, hi=1.0):
    """1-D tree splitting at each threshold, distinct leaf identities."""
    leaves = [Leaf(i % 2, round(0.6 + 0.02 * i, 5)) for i in range(len(thresholds) + 1)]
    node = leaves[-1]
    for j, t in enumerate(reversed(thresholds)):
        node = Internal(0, ThresholdSplit(t), (leaves[len(thresholds) - 1 - j], node),
                        0, round(0.9 + 0.001 * j, 5))
    return DecisionTree(node, 2)


class TestLineSearch:
    def test_toy_tree_size_intervals(self, toy_tree, toy_space):
        o = _oracle(toy_tree, toy_space)
        segs = line_search(o, np.array([50.0, float(R)]), 0, eps=1.0)
        bounds = [(s.lo, s.hi) for s, _ in segs]
        assert bounds == [(0.0, 40.0), (40.0, 60.0), (60.0, 100.0)]
        assert segs[0][0].left_open is False and segs[1][0].left_open is True

    def test_unsplit_context_single_interval(self, toy_tree, toy_space):
        # with Color = Y the whole Size range stays in one leaf
        o = _oracle(toy_tree, toy_space)
        segs = line_search(o, np.array([50.0, float(Y)]), 0, eps=1.0)
        assert len(segs) == 1
        assert (segs[0][0].lo, segs[0][0].hi) == (0.0, 100.0)

    def test_thresholds_recovered_exactly_vs_grid_oracle(self):
        eps = 1e-3
        tree = _chain_tree([0.25, 0.5, 0.75])
        space = FeatureSpace((Continuous(0.0, 1.0),))
        o = _oracle(tree, space)
        segs = line_search(o, np.array([0.1]), 0, eps=eps)
        got = [s.hi for s, _ in segs[:-1]]
        assert np.allclose(got, [0.25, 0.5, 0.75], atol=1e-12)
        # exhaustive sweep at step eps as the independent reference
        sweep_o = _oracle(tree, space)
        grid = np.arange(0, 1 + eps / 2, eps)
        ids = [node_id(sweep_o.query(np.array([v]))) for v in grid]
        changes = [grid[i] for i in range(1, len(grid)) if ids[i] != ids[i - 1]]
        assert np.allclose(got, [c - eps for c in changes], atol=1e-9)

    def test_result_independent_of_start_within_interval(self, toy_tree, toy_space):
        o1 = _oracle(toy_tree, toy_space)
        o2 = _oracle(toy_tree, toy_space)
        a = line_search(o1, np.array([45.0, float(R)]), 0, eps=1.0)
        b = line_search(o2, np.array([59.0, float(R)]), 0, eps=1.0)
        assert [(s.lo, s.hi, i) for s, i in a] == [(s.lo, s.hi, i) for s, i in b]


class TestCategorySplit:
    def test_toy_tree_color_groups(self, toy_tree, toy_space):
        o = _oracle(toy_tree, toy_space)
        x = np.array([50.0, float(R)])
        current = node_id(o.query(x))
        S, reps = category_split(o, x, 1, current)
        assert S == frozenset({R})
        assert len(reps) == 3  # one for B's leaf, one for G's, one for {Y,O}'s
        assert B in reps and G in reps and (Y in reps or O in reps)

    def test_unsplit_feature(self):
        space = FeatureSpace((Continuous(0, 1), Categorical(4)))
        tree = DecisionTree(
            Internal(0, ThresholdSplit(0.5), (Leaf(0, 0.7), Leaf(1, 0.8)), 0, 0.6), 2
        )
        o = _oracle(tree, space)
        x = np.array([0.2, 1.0])
        S, reps = category_split(o, x, 1, node_id(o.query(x)))
        assert S == frozenset({0, 1, 2, 3}) and reps == []

    def test_binary_arity_root(self):
        from extractlab.models import PartitionSplit

        space = FeatureSpace((Categorical(2),))
        tree = DecisionTree(
            Internal(0, PartitionSplit(frozenset({0}), frozenset({1})),
                     (Leaf(0, 0.7), Leaf(1, 0.8)), 0, 0.6),
            2,
        )
        o = _oracle(tree, space)
        x = np.array([0.0])
        S, reps = category_split(o, x, 0, node_id(o.query(x)))
        assert len(S) == 1 and len(reps) == 1


class TestPathFind:
    def test_single_leaf_tree(self):
        space = FeatureSpace((Continuous(0, 1), Categorical(3)))
        tree = DecisionTree(Leaf(1, 0.9), 2)
        o = _oracle(tree, space)
        rs = path_find(o, space, eps=1e-2, seed=0)
        assert len(rs.leaves) == 1
        pred = rs.leaves[0].predicates
        assert pred[0].lo == 0 and pred[0].hi == 1 and pred[1] == frozenset({0, 1, 2})

    def test_toy_tree_six_leaves_perfect(self, toy_tree, toy_space):
        o = _oracle(toy_tree, toy_space)
        rs = path_find(o, toy_space, eps=1.0, seed=1)
        assert len(rs.leaves) == 6
        assert r_unif(toy_tree, rs, toy_space, n=5000, seed=2) == 0.0

    def test_random_unique_id_trees_extract_exactly(self):
        space = FeatureSpace(
            (Continuous(0.0, 1.0), Continuous(-1.0, 1.0), Categorical(4))
        )
        for seed in range(5):
            tree = gen_random_tree(space, classes=3, seed=seed, n_leaves=12)
            o = _oracle(tree, space)
            rs = path_find(o, space, eps=1e-3, seed=seed, classes=3)
            assert r_unif(tree, rs, space, n=3000, seed=seed + 10) == 0.0

    def test_duplicate_ids_with_predicate_refinement(self):
        # diagonal quadrants share an identity; every axis-parallel crossing
        # still changes ids, so only the visited-check could lose a leaf
        left = Internal(1, ThresholdSplit(0.5), (Leaf(1, 0.8), Leaf(0, 0.6)), 0, 0.41)
        right = Internal(1, ThresholdSplit(0.5), (Leaf(0, 0.7), Leaf(1, 0.8)), 0, 0.42)
        t = DecisionTree(Internal(0, ThresholdSplit(0.5), (left, right), 0, 0.4), 2)
        space = FeatureSpace((Continuous(0.0, 1.0), Continuous(0.0, 1.0)))
        o = _oracle(t, space)
        rs = path_find(o, space, eps=1e-3, seed=3)
        assert len(rs.leaves) == 4
        assert r_unif(t, rs, space, n=3000, seed=11) == 0.0

    def test_leaf_regions_answer_their_own_id(self, toy_tree, toy_space):
        o = _oracle(toy_tree, toy_space)
        rs = path_find(o, toy_space, eps=1.0, seed=4)
        check = _oracle(toy_tree, toy_space)
        gen = np.random.default_rng(0)
        for rec in rs.leaves:
            for _ in range(100):
                x = _sample_inside(rec, toy_space, gen)
                assert node_id(check.query(x)) == rec.id

    def test_coverage_check(self, toy_tree, toy_space):
        o = _oracle(toy_tree, toy_space)
        rs = path_find(o, toy_space, eps=1.0, seed=5)
        assert rs.coverage_check(n=500, seed=6)

    def test_ruleset_json(self, toy_tree, toy_space, tmp_path):
        o = _oracle(toy_tree, toy_space)
        rs = path_find(o, toy_space, eps=1.0, seed=7)
        blob = rs.to_json()
        assert len(blob) == 6
        assert all({"id", "constraints"} <= set(e) for e in blob)
        rs.save(tmp_path / "rules.json")
        assert (tmp_path / "rules.json").exists()


def _sample_inside(rec, space, gen):
    x = np.empty(space.d)
    for i, kind in enumerate(space.dims):
        c = rec.predicates[i]
        if isinstance(c, Interval):
            width = c.hi - c.lo
            x[i] = c.lo + (0.05 + 0.9 * gen.random()) * width
        else:
            x[i] = float(gen.choice(sorted(c)))
    return x


class TestTopDown:
    def test_root_split_identification(self, toy_tree, toy_space):
        # all-missing halts at the root; only specifying Color moves past it
        o = _oracle(toy_tree, toy_space, partial=True, fields=False)
        empty = np.array([np.nan, np.nan])
        base = node_id(o.query(empty))
        with_size = empty.copy()
        with_size[0] = 50.0
        assert node_id(o.query(with_size)) == base
        with_color = empty.copy()
        with_color[1] = float(R)
        assert node_id(o.query(with_color)) != base

    def test_extracts_toy_tree(self, toy_tree, toy_space):
        for fields in (False, True):
            o = _oracle(toy_tree, toy_space, partial=True, fields=fields)
            rs = top_down_find(o, toy_space, eps=1.0)
            assert r_unif(toy_tree, rs, toy_space, n=5000, seed=3) == 0.0

    def test_depth_zero_tree(self):
        space = FeatureSpace((Continuous(0, 1),))
        tree = DecisionTree(Leaf(0, 0.8), 2)
        o = _oracle(tree, space, partial=True)
        rs = top_down_find(o, space, eps=1e-2)
        assert len(rs.leaves) == 1
        assert o.ledger.total == 1  # one probe, no split searches

    def test_fewer_queries_than_path_find(self, toy_tree, toy_space):
        o_pf = _oracle(toy_tree, toy_space)
        path_find(o_pf, toy_space, eps=1e-3, seed=8)
        o_td = _oracle(toy_tree, toy_space, partial=True, fields=True)
        top_down_find(o_td, toy_space, eps=1e-3)
        assert o_td.ledger.total < o_pf.ledger.total

    def test_random_trees_with_partial_queries(self):
        space = FeatureSpace((Continuous(0.0, 1.0), Categorical(3), Continuous(-1.0, 1.0)))
        for seed in range(4):
            tree = gen_random_tree(space, classes=3, seed=100 + seed, n_leaves=10)
            o = _oracle(tree, space, partial=True, fields=True)
            rs = top_down_find(o, space, eps=1e-3, classes=3)
            assert r_unif(tree, rs, space, n=3000, seed=seed) == 0.0

    def test_requires_partial_policy(self, toy_tree, toy_space):
        o = _oracle(toy_tree, toy_space, partial=False)
        from extractlab.oracle import PartialQueryError

        with pytest.raises(PartialQueryError):
            top_down_find(o, toy_space, eps=1.0)


class TestComplexity:
    def test_measured_queries_within_bound(self):
        space = FeatureSpace((Continuous(0.0, 1.0), Categorical(4)))
        for seed in range(3):
            tree = gen_random_tree(space, classes=3, seed=seed + 20, n_leaves=14)
            o = _oracle(tree, space)
            path_find(o, space, eps=1e-3, seed=seed)
            bound = tree_complexity_bound(tree, space, eps=1e-3)
            assert o.ledger.total <= 4 * bound


class TestRulesetToTree:
    def test_toy_tree_rebuilt(self, toy_tree, toy_space):
        o = _oracle(toy_tree, toy_space)
        rs = path_find(o, toy_space, eps=1.0, seed=9)
        rebuilt = ruleset_to_tree(rs)
        assert len(rebuilt.leaves()) == 6
        assert r_unif(toy_tree, rebuilt, toy_space, n=5000, seed=4) == 0.0

    def test_single_rule_constant(self):
        space = FeatureSpace((Continuous(0, 1),))
        tree = DecisionTree(Leaf(1, 0.9), 2)
        o = _oracle(tree, space)
        rebuilt = ruleset_to_tree(path_find(o, space, eps=1e-2, seed=0))
        assert isinstance(rebuilt.root, Leaf)
        assert rebuilt.predict_class(np.array([0.5])) == 1

    def test_rebuild_equals_rules_on_random_trees(self):
        space = FeatureSpace((Continuous(0, 1), Categorical(3)))
        tree = gen_random_tree(space, classes=2, seed=77, n_leaves=9)
        o = _oracle(tree, space)
        rs = path_find(o, space, eps=1e-3, seed=1)
        rebuilt = ruleset_to_tree(rs)
        X = space.uniform(2000, 5)
        assert np.array_equal(rebuilt.predict_class(X), rs.predict_class(X))

    def test_uncovered_region_raises(self, toy_space):
        from extractlab.treepath import ExtractedRuleSet, LeafRecord

        rec = LeafRecord((1, 0.8), {0: Interval(0.0, 50.0, False), 1: frozenset({0, 1})})
        rs = ExtractedRuleSet((rec,), 1e-3, toy_space, 2)
        with pytest.raises(UncoveredRegionError):
            rs.predict_class(np.array([80.0, 4.0]))
