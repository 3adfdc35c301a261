"""Equation-solving extraction from probability outputs.

Every (query, probability-vector) response is an equation in the target's
parameters.  Binary logistic regression falls to a single linear solve of
d+1 non-adaptive queries; the softmax / one-vs-rest / perceptron / kernel
families are recovered by minimizing cross-entropy against the returned
probability vectors.  Kernel-regression extraction additionally recovers the
representer points themselves, which are training data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import FeatureSpace, rng
from .models import BinaryLR
from .training import LossReport, OptimizerConfig, fit_from_samples

__all__ = [
    "BudgetSpec",
    "EquationSet",
    "param_count",
    "default_extraction_config",
    "extract_binary_lr",
    "extract_by_loss_min",
    "extract_klr_representers",
    "representer_leakage",
    "SingularSystemError",
]

_LOGIT_CLAMP = 1e-12


class SingularSystemError(RuntimeError):
    """The collected equations were linearly dependent after all retries."""


@dataclass(frozen=True)
class BudgetSpec:
    """Query budget of the form m = ceil(alpha * unknown-parameter-count)."""

    alpha: float
    k_unknowns: int

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def m(self) -> int:
        return math.ceil(self.alpha * self.k_unknowns)


@dataclass(frozen=True)
class EquationSet:
    """Samples (x, f(x)) collected from a probability oracle."""

    X: np.ndarray
    P: np.ndarray


def param_count(kind: str, d: int, classes: int = 2, hidden: int = 20, s: int | None = None) -> int:
    """Number of unknown parameters an extraction has to solve for."""
    if kind == "binary_lr":
        return d + 1
    if kind in ("softmax", "ovr"):
        return classes * (d + 1)
    if kind == "mlp":
        return d * hidden + hidden * classes + hidden + classes
    if kind == "klr":
        if s is None:
            raise ValueError("klr parameter count needs the representer count s")
        return s * classes + classes + s * d
    raise ValueError(f"unknown kind {kind!r}")


def default_extraction_config(kind: str, seed: int = 0) -> OptimizerConfig:
    """Solver defaults per model family: quasi-Newton for the convex fits,
    minibatch SGD for the non-convex perceptron / kernel systems.  Extraction
    uses no L2 penalty; even a tiny one biases the recovered model measurably.
    """
    if kind in ("softmax", "ovr", "binary_lr"):
        return OptimizerConfig(
            max_epochs=5000, tolerance=1e-12, l2_lambda=0.0, seed=seed, method="lbfgs"
        )
    if kind == "mlp":
        return OptimizerConfig(
            max_epochs=600, tolerance=1e-7, l2_lambda=0.0, seed=seed, method="lbfgs"
        )
    if kind == "klr":
        return OptimizerConfig(
            learning_rate=1.0,
            max_epochs=1500,
            batch_size=32,
            tolerance=1e-10,
            l2_lambda=0.0,
            seed=seed,
        )
    raise ValueError(f"unknown kind {kind!r}")


def logit(p: np.ndarray) -> np.ndarray:
    """Inverse sigmoid with clamping so rounded 0/1 responses stay finite."""
    p = np.clip(np.asarray(p, dtype=float), _LOGIT_CLAMP, 1.0 - _LOGIT_CLAMP)
    return np.log(p / (1.0 - p))


def _basis_queries(space: FeatureSpace) -> np.ndarray:
    """d+1 non-adaptive queries: the box center plus one corner step per
    dimension; linearly independent in homogeneous coordinates."""
    mid = np.array([(k.lo + k.hi) / 2.0 for k in space.dims])
    Q = [mid]
    for i, kind in enumerate(space.dims):
        x = mid.copy()
        x[i] = kind.hi
        Q.append(x)
    return np.asarray(Q)


def extract_binary_lr(
    oracle,
    space: FeatureSpace,
    seed: int = 0,
    max_retries: int = 3,
    tag: str = "eqsolve",
) -> BinaryLR:
    """Recover a binary logistic regression exactly from d+1 queries.

    The query set is fixed before any response is read.  Each response turns
    into the linear equation w.x + beta = logit(f1(x)); the system is solved
    by LU elimination with partial pivoting.  Singular systems retry with
    fresh uniform queries, at most ``max_retries`` times.
    """
    if any(not space.is_continuous(i) for i in range(space.d)):
        raise ValueError("binary-LR equation solving expects continuous features")
    policy = getattr(oracle, "policy", None)
    if policy is not None and policy.rounding is not None and policy.rounding < 6:
        warnings.warn(
            "oracle rounds below 6 decimals; recovered parameters are approximate",
            stacklevel=2,
        )
    gen = rng(seed)
    queries = _basis_queries(space)
    for attempt in range(max_retries + 1):
        responses = oracle.query_batch(queries, tag=tag)
        probs = [r.probs for r in responses]
        if any(p is None for p in probs):
            raise ValueError("binary-LR equation solving needs a probability oracle")
        rhs = logit(np.asarray([p[1] for p in probs]))
        A = np.column_stack([queries, np.ones(len(queries))])
        try:
            theta = np.linalg.solve(A, rhs)
            return BinaryLR(theta[:-1], float(theta[-1]))
        except np.linalg.LinAlgError:
            queries = space.uniform(space.d + 1, gen)
    raise SingularSystemError(f"no independent query set found in {max_retries} retries")


def collect_equations(
    oracle, space: FeatureSpace, m: int, seed: int, tag: str = "eqsolve"
) -> EquationSet:
    """Issue m uniform queries as one non-adaptive batch and keep the
    returned probability vectors."""
    X = space.uniform(m, seed)
    responses = oracle.query_batch(X, tag=tag)
    if any(r.probs is None for r in responses):
        raise ValueError("equation solving needs a probability oracle")
    return EquationSet(X, np.asarray([r.probs for r in responses]))


def extract_by_loss_min(
    kind: str,
    oracle,
    space: FeatureSpace,
    budget: BudgetSpec,
    cfg: OptimizerConfig | None = None,
    *,
    classes: int,
    hidden: int = 20,
    s: int | None = None,
    gamma: float | None = None,
    seed: int = 0,
    tag: str = "eqsolve",
):
    """Extract a logistic-family model by loss minimization over uniform
    queries.  Returns (model, LossReport, EquationSet)."""
    if budget.m < 1:
        raise ValueError("budget must allow at least one query")
    if cfg is None:
        cfg = default_extraction_config(kind, seed)
    eqs = collect_equations(oracle, space, budget.m, seed, tag)
    kw: dict = {}
    if kind == "mlp":
        kw["hidden"] = hidden
    if kind == "klr":
        if s is None or gamma is None:
            raise ValueError("klr extraction needs s (assumed representers) and gamma")
        kw.update(s=s, gamma=gamma, space=space)
    model, report = fit_from_samples(kind, eqs.X, eqs.P, classes, cfg, **kw)
    return model, report, eqs


def extract_klr_representers(
    oracle,
    space: FeatureSpace,
    s_assumed: int,
    gamma: float,
    budget: BudgetSpec,
    cfg: OptimizerConfig | None = None,
    *,
    classes: int,
    seed: int = 0,
    restarts: int = 3,
    polish: bool = True,
    tag: str = "eqsolve",
):
    """Jointly optimize kernel weights and representer coordinates.

    The extracted representers start uniformly at random in the feature
    space (no knowledge of the training distribution) and are pulled toward
    the target's actual representers by the fit.  The system is non-convex,
    so the solve runs ``restarts`` times from fresh random initializations
    against the *same* collected equations (extra restarts cost no queries)
    and keeps the lowest-loss solution; stochastic descent does the global
    exploration and a quasi-Newton pass tightens the coordinates.  Returns
    (model, LossReport, extracted representer array).
    """
    from dataclasses import replace as _replace

    from .training import _init_model, minimize_loss

    eqs = collect_equations(oracle, space, budget.m, seed, tag)
    polish_cfg = OptimizerConfig(
        max_epochs=2000, tolerance=1e-10, l2_lambda=0.0, seed=seed, method="lbfgs"
    )
    best: tuple | None = None
    for r in range(max(restarts, 1)):
        rcfg = (
            default_extraction_config("klr", seed + 1009 * r)
            if cfg is None
            else _replace(cfg, seed=cfg.seed + 1009 * r)
        )
        init = _init_model("klr", space.d, classes, rcfg, s=s_assumed, gamma=gamma, space=space)
        model, report = minimize_loss(init, eqs.X, eqs.P, rcfg)
        if polish and rcfg.method != "lbfgs":
            model, report = minimize_loss(model, eqs.X, eqs.P, polish_cfg)
        if best is None or report.final_loss < best[1].final_loss:
            best = (model, report)
    model, report = best
    return model, report, model.representers


@dataclass(frozen=True)
class LeakageReport:
    """Per true representer: its l1-nearest extracted point and distance."""

    nearest_index: np.ndarray
    nearest_l1: np.ndarray

    @property
    def mean_l1(self) -> float:
        return float(self.nearest_l1.mean())


def representer_leakage(true_representers: np.ndarray, extracted: np.ndarray) -> LeakageReport:
    """How close the extracted representers come to each true training point,
    measured in l1 norm."""
    T = np.atleast_2d(true_representers)
    E = np.atleast_2d(extracted)
    D = np.abs(T[:, None, :] - E[None, :, :]).sum(axis=2)
    idx = D.argmin(axis=1)
    return LeakageReport(idx, D[np.arange(len(T)), idx])
