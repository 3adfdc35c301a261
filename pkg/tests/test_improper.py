import numpy as np
import pytest

from extractlab.core import Continuous, FeatureSpace, r_unif, rng
from extractlab.eqsolve import BudgetSpec, extract_by_loss_min, param_count
from extractlab.improper import improper_extract
from extractlab.models import MLP, SoftmaxLR
from extractlab.oracle import DisclosurePolicy, Oracle


def _space(d):
    return FeatureSpace(tuple(Continuous(-1.0, 1.0) for _ in range(d)))


class TestParameterBookkeeping:
    def test_mlp_unknowns_formula(self):
        # d*h + h*c + h + c
        assert param_count("mlp", 105, classes=5, hidden=20) == 2225
        assert param_count("mlp", 2, classes=2, hidden=50) == 100 + 100 + 50 + 2

    def test_result_carries_ratio(self):
        gen = rng(0)
        space = _space(2)
        target = SoftmaxLR(gen.normal(size=(3, 2)), gen.normal(size=3))
        o = Oracle(target, space, DisclosurePolicy())
        k = param_count("softmax", 2, 3)
        model, info = improper_extract(o, space, classes=3, hidden_nodes=5,
                                       budget=BudgetSpec(2.0, k), seed=0)
        assert isinstance(model, MLP)
        assert info.surrogate_params == param_count("mlp", 2, 3, hidden=5)
        assert info.param_ratio == info.surrogate_params / k
        assert info.queries_used == BudgetSpec(2.0, k).m

    def test_zero_hidden_nodes_rejected(self):
        space = _space(2)
        o = Oracle(SoftmaxLR(np.zeros((3, 2)), np.zeros(3)), space, DisclosurePolicy())
        with pytest.raises(ValueError):
            improper_extract(o, space, classes=3, hidden_nodes=0, budget=BudgetSpec(1.0, 9))


class TestComparativeOrdering:
    def test_proper_beats_wide_surrogate(self):
        gen = rng(1)
        space = _space(2)
        target = SoftmaxLR(gen.normal(0, 1.5, size=(2, 2)), gen.normal(size=2))
        k = param_count("softmax", 2, 2)

        o_proper = Oracle(target, space, DisclosurePolicy())
        proper, _, _ = extract_by_loss_min(
            "softmax", o_proper, space, BudgetSpec(1.0, k), classes=2, seed=1
        )
        o_improper = Oracle(target, space, DisclosurePolicy())
        surrogate, info = improper_extract(
            o_improper, space, classes=2, hidden_nodes=50, budget=BudgetSpec(20.0, k), seed=1
        )
        tv_proper = r_unif(target, proper, space, n=5000, seed=2, mode="tv")
        tv_improper = r_unif(target, surrogate, space, n=5000, seed=2, mode="tv")
        agree_improper = 1 - r_unif(target, surrogate, space, n=5000, seed=2)
        assert agree_improper >= 0.99
        assert tv_improper >= 10 * tv_proper
