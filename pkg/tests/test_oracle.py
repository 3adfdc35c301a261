import numpy as np
import pytest

from extractlab.core import Continuous, FeatureSpace
from extractlab.models import (
    RBF,
    SVM,
    BinaryLR,
    DecisionTree,
    Leaf,
    NoProbabilitiesError,
    ThresholdSplit,
    Internal,
)
from extractlab.oracle import (
    DisclosurePolicy,
    Oracle,
    PartialQueryError,
    ReplayOracle,
    node_id,
)

from conftest import LEAF2, R, Y


@pytest.fixture
def tree_oracle(toy_tree, toy_space):
    policy = DisclosurePolicy(outputs="probs", allow_partial=True, reveal_fields=True)
    return Oracle(toy_tree, toy_space, policy)


class TestQuery:
    def test_full_policy_tree_response(self, tree_oracle):
        resp = tree_oracle.query(np.array([50.0, float(R)]))
        assert resp.label == LEAF2.label
        assert resp.confidence == pytest.approx(LEAF2.confidence)
        assert resp.halted_at == "leaf"
        assert {0, 1} <= set(resp.fields)

    def test_labels_only_carries_label_alone(self, unit_square):
        model = BinaryLR(np.array([1.0, -1.0]), 0.0)
        o = Oracle(model, unit_square, DisclosurePolicy(outputs="labels"))
        resp = o.query(np.array([0.5, 0.1]))
        assert resp.probs is None
        assert resp.confidence is None
        assert resp.fields is None

    def test_round_half_even_at_three_decimals(self, unit_square):
        # sigmoid output engineered to 0.876544...: rounds to 0.877 / 0.123
        beta = float(np.log(0.876544 / (1 - 0.876544)))
        model = BinaryLR(np.array([0.0, 0.0]), beta)
        o = Oracle(model, unit_square, DisclosurePolicy(rounding=3))
        resp = o.query(np.array([0.0, 0.0]))
        assert np.allclose(resp.probs, [0.123, 0.877])

    def test_partial_forbidden_by_policy(self, toy_tree, toy_space):
        o = Oracle(toy_tree, toy_space, DisclosurePolicy(allow_partial=False))
        with pytest.raises(PartialQueryError):
            o.query(np.array([np.nan, 1.0]))

    def test_partial_rejected_for_flat_models(self, unit_square):
        model = BinaryLR(np.array([1.0, 1.0]), 0.0)
        o = Oracle(model, unit_square, DisclosurePolicy(allow_partial=True))
        with pytest.raises(PartialQueryError):
            o.query(np.array([np.nan, 0.0]))

    def test_out_of_range_rejected(self, tree_oracle):
        with pytest.raises(ValueError):
            tree_oracle.query(np.array([150.0, 0.0]))

    def test_partial_tree_halting(self, tree_oracle, toy_tree):
        resp = tree_oracle.query(np.array([np.nan, np.nan]))
        assert resp.halted_at == "internal"
        assert resp.label == toy_tree.root.label
        # fields names the split feature of the halting node
        assert resp.fields == frozenset({1})

    def test_svm_cannot_back_probability_oracle(self, unit_square):
        svm = SVM(RBF(1.0), 0.0, dual_alphas=np.ones(1), support_vectors=np.zeros((1, 2)))
        with pytest.raises(NoProbabilitiesError):
            Oracle(svm, unit_square, DisclosurePolicy(outputs="probs"))
        Oracle(svm, unit_square, DisclosurePolicy(outputs="labels"))  # fine


class TestRounding:
    def test_rounded_probs_have_k_decimals(self, unit_square):
        model = BinaryLR(np.array([0.7, -0.3]), 0.1)
        o = Oracle(model, unit_square, DisclosurePolicy(rounding=4))
        for x in unit_square.uniform(50, 1):
            p = o.query(x).probs
            assert np.allclose(p, np.round(p, 4))

    def test_rounded_probs_sum_near_one(self, unit_square):
        from extractlab.core import rng
        from extractlab.models import SoftmaxLR

        gen = rng(3)
        model = SoftmaxLR(gen.normal(size=(4, 2)), gen.normal(size=4))
        o = Oracle(model, unit_square, DisclosurePolicy(rounding=2))
        for x in unit_square.uniform(50, 2):
            p = o.query(x).probs
            assert abs(p.sum() - 1.0) <= 4 * 10**-2


class TestLedger:
    def test_counts_every_query(self, tree_oracle, toy_space):
        X = toy_space.uniform(17, 5)
        tree_oracle.query_batch(X, tag="probe")
        tree_oracle.query(X[0], tag="other")
        assert tree_oracle.ledger.total == 18
        assert tree_oracle.ledger.by_tag == {"probe": 17, "other": 1}

    def test_concurrent_increments_are_atomic(self, toy_tree, toy_space):
        from concurrent.futures import ThreadPoolExecutor

        o = Oracle(toy_tree, toy_space, DisclosurePolicy())
        X = toy_space.uniform(400, 9)
        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(lambda x: o.query(x, tag="w"), X))
        assert o.ledger.total == 400
        assert o.ledger.by_tag == {"w": 400}


class TestNodeId:
    def test_duplicate_identities_compare_equal(self):
        t = DecisionTree(
            Internal(0, ThresholdSplit(0.0), (Leaf(1, 0.8), Leaf(1, 0.8)), 1, 0.8), 2
        )
        space = FeatureSpace((Continuous(-1, 1),))
        o = Oracle(t, space, DisclosurePolicy())
        a = node_id(o.query(np.array([-0.5])))
        b = node_id(o.query(np.array([0.5])))
        assert a == b

    def test_regression_outputs_distinguish(self):
        t = DecisionTree(
            Internal(
                0,
                ThresholdSplit(0.0),
                (Leaf(0, 0.9, value=12.5), Leaf(0, 0.9, value=3.25)),
                0,
                0.9,
            ),
            2,
        )
        space = FeatureSpace((Continuous(-1, 1),))
        o = Oracle(t, space, DisclosurePolicy())
        assert node_id(o.query(np.array([-0.5]))) != node_id(o.query(np.array([0.5])))

    def test_same_leaf_twice_identical(self, tree_oracle):
        x = np.array([50.0, float(R)])
        assert node_id(tree_oracle.query(x)) == node_id(tree_oracle.query(x))

    def test_needs_confidence(self, toy_tree, toy_space):
        o = Oracle(toy_tree, toy_space, DisclosurePolicy(outputs="labels"))
        with pytest.raises(ValueError):
            node_id(o.query(np.array([50.0, float(R)])))


class TestTranscripts:
    def test_record_and_replay(self, toy_tree, toy_space, tmp_path):
        path = tmp_path / "transcript.jsonl"
        policy = DisclosurePolicy(outputs="probs", allow_partial=True, reveal_fields=True)
        o = Oracle(toy_tree, toy_space, policy, record_path=path)
        queries = [
            np.array([50.0, float(R)]),
            np.array([np.nan, float(Y)]),
            np.array([10.0, np.nan]),
        ]
        live = [o.query(q) for q in queries]
        replay = ReplayOracle(path)
        for q, expected in zip(queries, live):
            got = replay.query(q)
            assert got.label == expected.label
            assert got.halted_at == expected.halted_at
            assert np.allclose(got.probs, expected.probs)
        with pytest.raises(KeyError):
            replay.query(np.array([99.0, 0.0]))
