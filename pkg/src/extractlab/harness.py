"""Dataset generators, experiment orchestration, and report emission.

Synthetic benchmark generators (concentric circles, interleaved moons,
Gaussian blobs in 2-D, and 5 Gaussian clusters in 20-D) produce datasets
whose numeric features already lie in [-1, 1]; external CSV datasets can be
rescaled with ``scale_dataset``.  ``run_experiment`` trains a target, wraps
it in an oracle, executes an attack per (seed, budget factor) cell, and
aggregates an ``ExperimentReport`` that serializes deterministically: the
same config always yields byte-identical CSV.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import boundary, eqsolve, treepath
from .core import Categorical, Continuous, Dataset, FeatureSpace, rng, split_indices
from .models import (
    RBF,
    DecisionTree,
    Internal,
    KArySplit,
    Leaf,
    Linear,
    PartitionSplit,
    ThresholdSplit,
)
from .oracle import DisclosurePolicy, Oracle
from .training import OptimizerConfig, fit_logistic_family, fit_svm, fit_tree

__all__ = [
    "gen_synthetic",
    "scale_dataset",
    "gen_random_tree",
    "tree_complexity_bound",
    "ExperimentConfig",
    "CellResult",
    "ExperimentReport",
    "run_experiment",
    "emit_report",
    "load_config",
]

_DEFAULT_SIZES = {"circles": 5000, "moons": 5000, "blobs": 5000, "five_class": 1000, "blobs_binary": 5000}


def _clip_unit(X: np.ndarray) -> np.ndarray:
    return np.clip(X, -1.0, 1.0)


def gen_synthetic(name: str, n: int, seed: int, noise: float | None = None) -> Dataset:
    """Deterministic synthetic benchmark datasets, features scaled to [-1, 1].

    circles      two concentric noisy rings, 2 classes, 2 features
    moons        two interleaved half-circles, 2 classes, 2 features
    blobs        3 Gaussian clusters, 3 classes, 2 features
    blobs_binary 2 Gaussian clusters, 2 classes, 2 features
    five_class   5 Gaussian clusters, 5 classes, 20 features
    """
    if n < 10:
        raise ValueError("need n >= 10")
    gen = rng(seed)
    if name == "circles":
        noise = 0.04 if noise is None else noise
        y = np.arange(n) % 2
        radius = np.where(y == 0, 0.85, 0.45)
        theta = gen.uniform(0, 2 * math.pi, size=n)
        X = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
        X += gen.normal(0, noise, size=X.shape)
        classes = 2
    elif name == "moons":
        noise = 0.06 if noise is None else noise
        y = np.arange(n) % 2
        t = gen.uniform(0, math.pi, size=n)
        X = np.where(
            (y == 0)[:, None],
            np.column_stack([np.cos(t), np.sin(t)]),
            np.column_stack([1.0 - np.cos(t), 0.35 - np.sin(t)]),
        )
        X += gen.normal(0, noise, size=X.shape)
        X = (X - np.array([0.5, 0.175])) / np.array([1.6, 1.0])
        classes = 2
    elif name in ("blobs", "blobs_binary"):
        noise = 0.12 if noise is None else noise
        centers = np.array([[-0.6, -0.6], [0.6, -0.2], [0.0, 0.7]])
        classes = 3 if name == "blobs" else 2
        y = np.arange(n) % classes
        X = centers[y] + gen.normal(0, noise, size=(n, 2))
    elif name == "five_class":
        noise = 0.14 if noise is None else noise
        d, classes = 20, 5
        centers = rng(seed + 1).uniform(-0.75, 0.75, size=(classes, d))
        y = np.arange(n) % classes
        X = centers[y] + gen.normal(0, noise, size=(n, d))
    else:
        raise ValueError(f"unknown synthetic dataset {name!r}")
    X = _clip_unit(X)
    perm = gen.permutation(n)
    X, y = X[perm], np.asarray(y)[perm]
    space = FeatureSpace(tuple(Continuous(-1.0, 1.0) for _ in range(X.shape[1])))
    tr, te = split_indices(n, 0.7, seed)
    return Dataset(space, classes, X, y, tr, te)


def scale_dataset(ds: Dataset) -> Dataset:
    """Affinely map every continuous feature onto [-1, 1] (categorical dims
    pass through).  Use this on external CSV data before training targets."""
    X = ds.X.copy()
    dims = []
    for i, kind in enumerate(ds.space.dims):
        if isinstance(kind, Categorical):
            dims.append(kind)
            continue
        lo, hi = X[:, i].min(), X[:, i].max()
        if hi <= lo:
            hi = lo + 1.0
        X[:, i] = 2.0 * (X[:, i] - lo) / (hi - lo) - 1.0
        dims.append(Continuous(-1.0, 1.0))
    return Dataset(FeatureSpace(tuple(dims)), ds.classes, X, ds.y, ds.train_idx, ds.test_idx)


# ---------------------------------------------------------------------------
# Random tree targets
# ---------------------------------------------------------------------------


def gen_random_tree(
    space: FeatureSpace,
    classes: int,
    seed: int,
    n_leaves: int = 16,
    grid: float = 0.05,
    unique_ids: bool = True,
) -> DecisionTree:
    """Random decision tree with every leaf reachable.

    Continuous thresholds land on multiples of ``grid`` (so every region is
    at least ``grid`` wide); with ``unique_ids`` every node carries a
    distinct (label, confidence) identity at 5-decimal precision, otherwise
    confidences are drawn from a small pool to force duplicates.
    """
    gen = rng(seed)
    counter = [0]

    def next_identity():
        label = int(gen.integers(0, classes))
        if unique_ids:
            conf = round(0.5 + (counter[0] * 0.00137) % 0.49, 5)
        else:
            conf = round(0.5 + 0.1 * int(gen.integers(0, 3)), 5)
        counter[0] += 1
        return label, conf

    # region: per-feature available range (continuous) or value set (categorical)
    def initial_region():
        region = []
        for kind in space.dims:
            if isinstance(kind, Continuous):
                region.append((kind.lo, kind.hi))
            else:
                region.append(tuple(range(kind.arity)))
        return region

    def splittable(region, i):
        kind = space.dims[i]
        if isinstance(kind, Continuous):
            lo, hi = region[i]
            return math.floor(hi / grid) - math.ceil(lo / grid) >= 2
        return len(region[i]) >= 2

    def grow(region, budget: int):
        label, conf = next_identity()
        options = [i for i in range(space.d) if splittable(region, i)]
        if budget <= 1 or not options:
            return Leaf(label, conf), 1
        i = int(options[gen.integers(0, len(options))])
        kind = space.dims[i]
        if isinstance(kind, Continuous):
            lo, hi = region[i]
            klo, khi = math.ceil(lo / grid), math.floor(hi / grid)
            k = int(gen.integers(klo + 1, khi))  # interior grid point
            t = k * grid
            split = ThresholdSplit(round(t, 10))
            sub_regions = [
                [*region[:i], (lo, t), *region[i + 1 :]],
                [*region[:i], (t, hi), *region[i + 1 :]],
            ]
        else:
            values = list(region[i])
            if len(values) == kind.arity and len(values) > 2 and gen.random() < 0.4:
                split = KArySplit(kind.arity)
                sub_regions = [[*region[:i], (v,), *region[i + 1 :]] for v in range(kind.arity)]
            else:
                gen.shuffle(values)
                cut = int(gen.integers(1, len(values)))
                left, right = frozenset(values[:cut]), frozenset(values[cut:])
                split = PartitionSplit(left, right)
                sub_regions = [
                    [*region[:i], tuple(sorted(left)), *region[i + 1 :]],
                    [*region[:i], tuple(sorted(right)), *region[i + 1 :]],
                ]
        n_children = len(sub_regions)
        # spread the leaf budget across children, each getting at least 1
        base, extra = divmod(max(budget, n_children), n_children)
        shares = [base + (1 if j < extra else 0) for j in range(n_children)]
        children, total = [], 0
        for sub, share in zip(sub_regions, shares):
            child, leaves = grow(sub, share)
            children.append(child)
            total += leaves
        return Internal(i, split, tuple(children), label, conf), total

    root, _ = grow(initial_region(), n_leaves)
    return DecisionTree(root, classes)


def tree_complexity_bound(tree: DecisionTree, space: FeatureSpace, eps: float) -> float:
    """Worst-case query count of path finding on this tree's shape:
    m * (d_cat * k + d_cont * m * log2(range/eps)) for m leaves."""
    m = len(tree.leaves())
    cat_cost = sum(k.arity for k in space.dims if isinstance(k, Categorical))
    cont_cost = 0.0
    for kind in space.dims:
        if isinstance(kind, Continuous):
            cont_cost += m * math.log2((kind.hi - kind.lo) / eps)
    return m * (cat_cost + cont_cost)


# ---------------------------------------------------------------------------
# Experiment orchestration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one attack sweep.

    ``alphas`` scales the query budget as a multiple of the number of
    unknown target parameters (attacks with fixed query counts ignore it).
    ``measure_time`` is off by default so reports stay byte-reproducible.
    """

    dataset: dict
    target: dict
    attack: dict
    oracle: dict = field(default_factory=dict)
    alphas: tuple = (1.0,)
    seeds: tuple = (0,)
    eval_n: int = 10_000
    measure_time: bool = False

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("need at least one seed")
        if any(a <= 0 for a in self.alphas):
            raise ValueError("budget factors must be positive")
        object.__setattr__(self, "alphas", tuple(self.alphas))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


@dataclass(frozen=True)
class CellResult:
    seed: int
    alpha: float
    queries: int
    r_test: float
    r_unif: float
    r_test_tv: float  # NaN when either side lacks probabilities
    r_unif_tv: float
    ms: float
    error: str | None = None


@dataclass(frozen=True)
class ExperimentReport:
    attack: str
    target_kind: str
    cells: tuple[CellResult, ...]

    def aggregates(self) -> dict:
        ok = [c for c in self.cells if c.error is None]
        if not ok:
            return {"mean_r_test": math.nan, "mean_r_unif": math.nan}
        return {
            "mean_r_test": float(np.mean([c.r_test for c in ok])),
            "mean_r_unif": float(np.mean([c.r_unif for c in ok])),
            "std_r_unif": float(np.std([c.r_unif for c in ok])),
            "mean_queries": float(np.mean([c.queries for c in ok])),
        }

    def to_json(self) -> dict:
        cells = []
        for c in self.cells:
            cells.append(
                {
                    "seed": c.seed,
                    "alpha": c.alpha,
                    "queries_used": c.queries,
                    "r_test": c.r_test,
                    "r_unif": c.r_unif,
                    "r_test_tv": c.r_test_tv,
                    "r_unif_tv": c.r_unif_tv,
                    "wall_time_ms": c.ms,
                    "error": c.error,
                }
            )
        return {
            "kind": self.attack,
            "target_kind": self.target_kind,
            "cells": cells,
            "aggregates": self.aggregates(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentReport":
        cells = tuple(
            CellResult(
                seed=c["seed"],
                alpha=c["alpha"],
                queries=c["queries_used"],
                r_test=c["r_test"],
                r_unif=c["r_unif"],
                r_test_tv=c["r_test_tv"],
                r_unif_tv=c["r_unif_tv"],
                ms=c["wall_time_ms"],
                error=c.get("error"),
            )
            for c in obj["cells"]
        )
        return cls(obj["kind"], obj["target_kind"], cells)


def _build_dataset(spec: dict) -> Dataset:
    if "csv" in spec:
        from .core import load_dataset_csv

        return scale_dataset(load_dataset_csv(spec["csv"]))
    return gen_synthetic(
        spec["name"], spec.get("n", _DEFAULT_SIZES.get(spec["name"], 1000)), spec.get("seed", 0),
        spec.get("noise"),
    )


def _train_target(spec: dict, data: Dataset):
    kind = spec["kind"]
    cfg = OptimizerConfig(**spec.get("optimizer", {}))
    if kind == "tree":
        return fit_tree(data, spec.get("max_depth", 8), spec.get("min_leaf", 1)), kind
    if kind == "random_tree":
        tree = gen_random_tree(
            data.space,
            data.classes,
            spec.get("seed", 0),
            spec.get("n_leaves", 16),
            unique_ids=spec.get("unique_ids", True),
        )
        return tree, "tree"
    if kind in ("svm_linear", "svm_rbf", "svm_poly"):
        if kind == "svm_linear":
            kernel = Linear()
        elif kind == "svm_rbf":
            kernel = RBF(spec.get("gamma", 1.0))
        else:
            from .models import Poly

            kernel = Poly(spec.get("degree", 2))
        return fit_svm(kernel, data, cfg), kind
    extra = {k: v for k, v in spec.items() if k in ("hidden", "s", "gamma")}
    model, _ = fit_logistic_family(kind, data, cfg, **extra)
    return model, kind


def _policy(spec: dict) -> DisclosurePolicy:
    return DisclosurePolicy(
        outputs=spec.get("outputs", "probs"),
        rounding=spec.get("rounding"),
        allow_partial=spec.get("allow_partial", False),
        reveal_fields=spec.get("reveal_fields", False),
    )


def _target_params(kind: str, target, d: int, classes: int) -> int:
    if kind in ("binary_lr", "softmax", "ovr"):
        return eqsolve.param_count(kind, d, classes)
    if kind == "mlp":
        return eqsolve.param_count("mlp", d, classes, hidden=target.hidden)
    if kind == "klr":
        return eqsolve.param_count("klr", d, classes, s=target.s)
    return d + 1  # SVMs and trees: budget scales with the input dimension


def _run_attack(attack: dict, oracle, data: Dataset, target_kind, target, alpha, seed):
    name = attack["name"]
    d, c = data.space.d, data.classes
    if name == "eqsolve_binary":
        return eqsolve.extract_binary_lr(oracle, data.space, seed=seed)
    if name == "eqsolve":
        kind = attack.get("surrogate", target_kind)
        k = _target_params(kind, target, d, c)
        budget = eqsolve.BudgetSpec(alpha, k)
        model, _, _ = eqsolve.extract_by_loss_min(
            kind,
            oracle,
            data.space,
            budget,
            classes=c,
            hidden=attack.get("hidden", getattr(target, "hidden", 20)),
            s=attack.get("s", getattr(target, "s", None)),
            gamma=attack.get("gamma", getattr(target, "gamma", None)),
            seed=seed,
        )
        return model
    if name == "path_find":
        return treepath.path_find(
            oracle, data.space, attack.get("eps", 1e-3), seed=seed, classes=c
        )
    if name == "top_down":
        return treepath.top_down_find(oracle, data.space, attack.get("eps", 1e-3), classes=c)
    if name == "lowd_meek":
        return boundary.lowd_meek(oracle, data.space, attack.get("eps", 1e-6), seed=seed)
    if name == "retrain":
        k = _target_params(target_kind, target, d, c)
        rc = boundary.RetrainConfig(
            strategy=attack.get("strategy", "adaptive"),
            budget=max(int(math.ceil(alpha * k)), attack.get("min_budget", 10)),
            surrogate_kind=attack.get("surrogate", target_kind),
            cfg=OptimizerConfig(**attack.get("optimizer", {})),
            rounds=attack.get("rounds", 5),
            surrogate_args=attack.get("surrogate_args", {}),
        )
        return boundary.retrain(oracle, data.space, rc, seed=seed, classes=c)
    if name == "improper":
        from .improper import improper_extract

        k = _target_params(target_kind, target, d, c)
        model, _ = improper_extract(
            oracle,
            data.space,
            classes=c,
            hidden_nodes=attack.get("hidden", 20),
            budget=eqsolve.BudgetSpec(alpha, k),
            seed=seed,
        )
        return model
    raise ValueError(f"unknown attack {name!r}")


def _tv_metrics(target, extracted, data: Dataset, eval_n: int):
    try:
        from .core import r_test as _rt, r_unif as _ru

        tv_test = _rt(target, extracted, data, mode="tv")
        tv_unif = _ru(target, extracted, data.space, n=eval_n, seed=1, mode="tv")
        return tv_test, tv_unif
    except Exception:
        return math.nan, math.nan


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Train the target once, then run the attack per (seed, alpha) cell.

    Attack or training failures inside a cell are recorded on that cell and
    the sweep continues.  Cells are evaluated in (seed, alpha) order, which
    fixes the report layout regardless of timing.
    """
    from .core import r_test as _rt, r_unif as _ru

    data = _build_dataset(cfg.dataset)
    target, target_kind = _train_target(cfg.target, data)
    cells = []
    for seed in cfg.seeds:
        for alpha in cfg.alphas:
            oracle = Oracle(target, data.space, _policy(cfg.oracle))
            t0 = time.perf_counter()
            try:
                extracted = _run_attack(
                    cfg.attack, oracle, data, target_kind, target, alpha, seed
                )
                ms = (time.perf_counter() - t0) * 1000.0 if cfg.measure_time else 0.0
                tv_test, tv_unif = _tv_metrics(target, extracted, data, cfg.eval_n)
                cells.append(
                    CellResult(
                        seed=seed,
                        alpha=alpha,
                        queries=oracle.ledger.total,
                        r_test=_rt(target, extracted, data),
                        r_unif=_ru(target, extracted, data.space, n=cfg.eval_n, seed=1),
                        r_test_tv=tv_test,
                        r_unif_tv=tv_unif,
                        ms=ms,
                    )
                )
            except Exception as exc:  # noqa: BLE001 - cell errors are data
                ms = (time.perf_counter() - t0) * 1000.0 if cfg.measure_time else 0.0
                cells.append(
                    CellResult(seed, alpha, oracle.ledger.total, math.nan, math.nan,
                               math.nan, math.nan, ms, error=f"{type(exc).__name__}: {exc}")
                )
    return ExperimentReport(cfg.attack["name"], target_kind, tuple(cells))


_CSV_HEADER = "seed,alpha,queries,r_test,r_unif,r_test_tv,r_unif_tv,ms"


def _fmt(v: float) -> str:
    return "nan" if isinstance(v, float) and math.isnan(v) else repr(float(v))


def emit_report(report: ExperimentReport, path: str | Path, fmt: str = "csv") -> Path:
    """Serialize a report; byte output is a pure function of the report."""
    path = Path(path)
    if fmt == "csv":
        lines = [_CSV_HEADER]
        for c in report.cells:
            lines.append(
                ",".join(
                    [str(c.seed), _fmt(c.alpha), str(c.queries), _fmt(c.r_test),
                     _fmt(c.r_unif), _fmt(c.r_test_tv), _fmt(c.r_unif_tv), _fmt(c.ms)]
                )
            )
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an ExperimentConfig from a TOML file mirroring its field names."""
    try:
        import tomllib
    except ImportError:  # Python 3.10
        import tomli as tomllib

    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return ExperimentConfig(
        dataset=raw["dataset"],
        target=raw["target"],
        attack=raw["attack"],
        oracle=raw.get("oracle", {}),
        alphas=tuple(raw.get("alphas", [1.0])),
        seeds=tuple(raw.get("seeds", [0])),
        eval_n=raw.get("eval_n", 10_000),
        measure_time=raw.get("measure_time", False),
    )
