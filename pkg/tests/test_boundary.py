import numpy as np
import pytest

from extractlab.boundary import (
    BoundarySearchError,
    RetrainConfig,
    extract_and_test,
    lowd_meek,
    lowd_meek_poly,
    retrain,
)
from extractlab.core import Continuous, FeatureSpace, r_unif, rng
from extractlab.harness import gen_synthetic
from extractlab.models import RBF, BinaryLR, SoftmaxLR
from extractlab.oracle import DisclosurePolicy, Oracle
from extractlab.training import OptimizerConfig, fit_svm, fit_svm_samples

LABELS = DisclosurePolicy(outputs="labels")


def _space(d):
    return FeatureSpace(tuple(Continuous(-1.0, 1.0) for _ in range(d)))


def _angular_error(w_got, w_true):
    cos = abs(w_got @ w_true) / (np.linalg.norm(w_got) * np.linalg.norm(w_true))
    return float(np.arccos(np.clip(cos, -1, 1)))


class TestLowdMeek:
    def test_diagonal_boundary(self):
        space = _space(2)
        target = BinaryLR(np.array([1.0, 1.0]), -1.0)
        o = Oracle(target, space, LABELS)
        got = lowd_meek(o, space, eps=1e-6, seed=0)
        assert _angular_error(got.w, np.array([1.0, 1.0])) < 1e-3
        assert got.beta == pytest.approx(-1.0 / np.sqrt(2), abs=1e-3)

    def test_axis_aligned_boundary(self):
        space = _space(2)
        target = BinaryLR(np.array([0.0, 5.0]), 0.0)
        o = Oracle(target, space, LABELS)
        got = lowd_meek(o, space, eps=1e-6, seed=1)
        assert abs(got.w[1]) > 0.999
        assert abs(got.beta) < 1e-3

    def test_scale_invariance(self):
        space = _space(3)
        w = np.array([0.8, -0.5, 0.3])
        runs = []
        for scale in (1.0, 7.0):
            o = Oracle(BinaryLR(scale * w, scale * 0.2), space, LABELS)
            got = lowd_meek(o, space, eps=1e-6, seed=2)
            runs.append(np.append(got.w, got.beta))
        assert np.allclose(runs[0], runs[1], atol=1e-6)

    def test_boundary_points_sit_on_the_boundary(self):
        from extractlab.boundary import _bisect_boundary

        space = _space(2)
        target = BinaryLR(np.array([2.0, -1.0]), 0.3)
        o = Oracle(target, space, LABELS)
        gen = rng(3)
        for _ in range(5):
            pos = _find_with_label(o, space, gen, 1)
            neg = _find_with_label(o, space, gen, 0)
            b = _bisect_boundary(o, pos, neg, 1e-6, "t")
            assert abs(target.w @ b + target.beta) < 1e-5 * np.linalg.norm(target.w) * 10

    def test_budget_well_under_cap(self):
        data = gen_synthetic("moons", 300, seed=4)
        from extractlab.training import fit_logistic_family

        target, _ = fit_logistic_family("binary_lr", data, OptimizerConfig(method="lbfgs"))
        o = Oracle(target, data.space, LABELS)
        got = lowd_meek(o, data.space, eps=1e-6, seed=5)
        assert o.ledger.total < 3000
        assert 1 - r_unif(target, got, data.space, n=10_000, seed=6) >= 0.99

    def test_constant_target_fails_loudly(self):
        space = _space(2)
        o = Oracle(BinaryLR(np.zeros(2), 5.0), space, LABELS)  # always class 1
        with pytest.raises(BoundarySearchError):
            lowd_meek(o, space, seed=7)


class TestLowdMeekPoly:
    def test_circle_boundary(self):
        # quadratic target: inside/outside a circle of radius 0.7
        space = _space(2)
        target = _CircleTarget(0.7)
        o = Oracle(target, space, LABELS)
        got = lowd_meek_poly(o, space, degree=2, eps=1e-6, seed=0)
        X = space.uniform(10_000, 1)
        agree = np.mean(got.predict_class(X) == target.predict_class(X))
        assert agree >= 0.99

    def test_1d_quadratic_threshold(self):
        space = _space(1)
        target = _CircleTarget(0.6)  # |x| <= 0.6 -> class 1
        o = Oracle(target, space, LABELS)
        got = lowd_meek_poly(o, space, degree=2, eps=1e-6, seed=1)
        for v in (0.59, 0.61, -0.59, -0.61):
            assert got.predict_class(np.array([v])) == target.predict_class(np.array([v]))

    def test_linear_target_still_works(self):
        space = _space(2)
        target = BinaryLR(np.array([1.0, -0.5]), 0.2)
        o = Oracle(target, space, LABELS)
        got = lowd_meek_poly(o, space, degree=2, eps=1e-6, seed=2)
        X = space.uniform(10_000, 3)
        assert np.mean(got.predict_class(X) == target.predict_class(X)) >= 0.99


class _CircleTarget:
    """Class 1 inside the circle of the given radius."""

    def __init__(self, radius):
        self.r2 = radius * radius
        self.classes = 2

    def predict_class(self, X):
        X = np.asarray(X, dtype=float)
        labels = ((np.atleast_2d(X) ** 2).sum(axis=1) <= self.r2).astype(int)
        return int(labels[0]) if X.ndim == 1 else labels


class TestRetrain:
    @pytest.mark.parametrize("strategy", ["uniform", "line_search", "adaptive"])
    def test_ledger_equals_budget_exactly(self, strategy):
        space = _space(2)
        target = BinaryLR(np.array([1.5, -1.0]), 0.1)
        o = Oracle(target, space, LABELS)
        rc = RetrainConfig(
            strategy=strategy,
            budget=60,
            surrogate_kind="binary_lr",
            cfg=OptimizerConfig(method="lbfgs", l2_lambda=1e-5),
            rounds=3,
        )
        retrain(o, space, rc, seed=0, classes=2)
        assert o.ledger.total == 60

    def test_uniform_fits_linear_target(self):
        space = _space(2)
        target = BinaryLR(np.array([1.0, 2.0]), -0.2)
        o = Oracle(target, space, LABELS)
        rc = RetrainConfig("uniform", 150, "binary_lr", OptimizerConfig(method="lbfgs", l2_lambda=1e-5))
        got = retrain(o, space, rc, seed=1, classes=2)
        assert 1 - r_unif(target, got, space, n=5000, seed=2) >= 0.97

    def test_adaptive_svm_surrogate(self):
        data = gen_synthetic("circles", 300, seed=3)
        target = fit_svm(RBF(2.0), data, OptimizerConfig(l2_lambda=1e-4))
        o = Oracle(target, data.space, LABELS)
        rc = RetrainConfig(
            "adaptive", 200, "svm_rbf",
            OptimizerConfig(l2_lambda=1e-4), rounds=4, surrogate_args={"gamma": 2.0},
        )
        got = retrain(o, data.space, rc, seed=4, classes=2)
        assert 1 - r_unif(target, got, data.space, n=5000, seed=5) >= 0.90

    def test_multiclass_adaptive(self):
        gen = rng(6)
        space = _space(2)
        target = SoftmaxLR(gen.normal(0, 2, size=(3, 2)), gen.normal(size=3))
        o = Oracle(target, space, LABELS)
        rc = RetrainConfig("adaptive", 240, "softmax", OptimizerConfig(method="lbfgs", l2_lambda=1e-5), rounds=4)
        got = retrain(o, space, rc, seed=7, classes=3)
        assert 1 - r_unif(target, got, space, n=5000, seed=8) >= 0.95

    def test_budget_below_rounds_rejected(self):
        space = _space(2)
        o = Oracle(BinaryLR(np.ones(2), 0.0), space, LABELS)
        rc = RetrainConfig("adaptive", 3, "binary_lr", rounds=4)
        with pytest.raises(ValueError):
            retrain(o, space, rc, seed=0, classes=2)


class TestExtractAndTest:
    def test_gamma_grid_prefers_true_gamma(self):
        data = gen_synthetic("circles", 300, seed=9)
        target = fit_svm(RBF(1.0), data, OptimizerConfig(l2_lambda=1e-4))
        o = Oracle(target, data.space, LABELS)
        cfg = OptimizerConfig(l2_lambda=1e-4)

        def fitter(gamma):
            return lambda X, y, c: fit_svm_samples(RBF(gamma), X, y, cfg)

        candidates = [(f"gamma={g}", fitter(g)) for g in (0.01, 1.0, 100.0)]
        best, scoreboard = extract_and_test(
            o, data.space, candidates, probe_set_size=400, sample_size=300, seed=0
        )
        scores = dict(scoreboard)
        assert scores["gamma=1.0"] == min(scores.values())

    def test_single_candidate_returned(self):
        space = _space(2)
        target = BinaryLR(np.array([1.0, 0.5]), 0.0)
        o = Oracle(target, space, LABELS)
        model, scoreboard = extract_and_test(
            o,
            space,
            [("only", lambda X, y, c: BinaryLR(np.array([9.9, 9.9]), 0.0))],
            probe_set_size=10,
            sample_size=10,
            seed=1,
        )
        assert scoreboard[0][0] == "only" and isinstance(model, BinaryLR)

    def test_oracle_queried_once_for_shared_sets(self):
        space = _space(2)
        target = BinaryLR(np.array([1.0, 0.5]), 0.0)
        o = Oracle(target, space, LABELS)
        fitters = [(str(i), lambda X, y, c: BinaryLR(np.ones(2), 0.0)) for i in range(5)]
        extract_and_test(o, space, fitters, probe_set_size=50, sample_size=30, seed=2)
        assert o.ledger.total == 80  # not multiplied by the candidate count

    def test_softmax_and_ovr_labels_indistinguishable(self):
        # identical label behavior: both surrogates fit labels-only samples
        # from a softmax target about equally well
        gen = rng(10)
        space = _space(2)
        target = SoftmaxLR(gen.normal(0, 2, size=(3, 2)), gen.normal(size=3))
        o = Oracle(target, space, LABELS)
        cfg = OptimizerConfig(method="lbfgs", l2_lambda=1e-5)
        from extractlab.training import fit_from_samples

        candidates = [
            ("softmax", lambda X, y, c: fit_from_samples("softmax", X, y, c, cfg)[0]),
            ("ovr", lambda X, y, c: fit_from_samples("ovr", X, y, c, cfg)[0]),
        ]
        _, scoreboard = extract_and_test(
            o, space, candidates, probe_set_size=1000, sample_size=400, seed=3
        )
        scores = dict(scoreboard)
        assert abs(scores["softmax"] - scores["ovr"]) <= 0.05


def _find_with_label(oracle, space, gen, wanted):
    for _ in range(200):
        x = space.uniform(1, gen)[0]
        if oracle.query(x, tag="t").label == wanted:
            return x
    raise AssertionError("label not found")
