"""Feature spaces, queries, datasets, and extraction error measures.

Conventions used throughout the library:

- A query is a 1-D float64 array of length ``d``.  Categorical features are
  stored as integral floats in ``{0, ..., arity-1}``.  A missing entry is
  encoded as ``MISSING`` (NaN); a query with no missing entries is *complete*.
- A probability vector is a 1-D float64 array of length ``c`` whose entries
  are in [0, 1] and sum to 1.
- All randomness flows through explicit integer seeds.  ``rng(seed)`` returns
  a PCG64 generator, so every sampled quantity is reproducible bit-for-bit
  across runs and platforms.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

MISSING = math.nan

__all__ = [
    "MISSING",
    "Continuous",
    "Categorical",
    "FeatureSpace",
    "Dataset",
    "rng",
    "is_missing",
    "is_complete",
    "validate_prob_vector",
    "zero_one_distance",
    "tv_distance",
    "r_test",
    "r_unif",
    "uniform_queries",
    "split_indices",
    "save_dataset_csv",
    "load_dataset_csv",
]


def rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; the single source of randomness everywhere."""
    return np.random.Generator(np.random.PCG64(seed))


def is_missing(value: float) -> bool:
    return math.isnan(value)


def is_complete(x: np.ndarray) -> bool:
    return not np.any(np.isnan(x))


@dataclass(frozen=True)
class Continuous:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("continuous bounds must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"continuous dimension needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Categorical:
    arity: int

    def __post_init__(self):
        if self.arity < 2:
            raise ValueError(f"categorical arity must be >= 2, got {self.arity}")


FeatureKind = Union[Continuous, Categorical]


@dataclass(frozen=True)
class FeatureSpace:
    """Ordered product of continuous intervals and finite categorical sets."""

    dims: tuple[FeatureKind, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        if len(self.dims) < 1:
            raise ValueError("feature space needs at least one dimension")
        for kind in self.dims:
            if not isinstance(kind, (Continuous, Categorical)):
                raise TypeError(f"bad dimension descriptor: {kind!r}")

    @property
    def d(self) -> int:
        return len(self.dims)

    def is_continuous(self, i: int) -> bool:
        return isinstance(self.dims[i], Continuous)

    def validate_query(self, x: np.ndarray, allow_missing: bool = False) -> np.ndarray:
        """Check a query against the space and return it as a float64 array."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"query has shape {x.shape}, expected ({self.d},)")
        for i, kind in enumerate(self.dims):
            v = x[i]
            if math.isnan(v):
                if not allow_missing:
                    raise ValueError(f"feature {i} is missing in a complete-query context")
                continue
            if isinstance(kind, Continuous):
                if not (kind.lo - 1e-9 <= v <= kind.hi + 1e-9):
                    raise ValueError(f"feature {i}={v} outside [{kind.lo}, {kind.hi}]")
            else:
                if v != int(v) or not (0 <= v < kind.arity):
                    raise ValueError(f"feature {i}={v} not a category in 0..{kind.arity - 1}")
        return x

    def uniform(self, n: int, seed: int | np.random.Generator) -> np.ndarray:
        """n queries sampled uniformly per dimension (continuous range or arity)."""
        gen = seed if isinstance(seed, np.random.Generator) else rng(seed)
        cols = []
        for kind in self.dims:
            if isinstance(kind, Continuous):
                cols.append(gen.uniform(kind.lo, kind.hi, size=n))
            else:
                cols.append(gen.integers(0, kind.arity, size=n).astype(float))
        return np.column_stack(cols)

    def to_json(self) -> list[dict]:
        out = []
        for kind in self.dims:
            if isinstance(kind, Continuous):
                out.append({"kind": "continuous", "lo": kind.lo, "hi": kind.hi})
            else:
                out.append({"kind": "categorical", "arity": kind.arity})
        return out

    @classmethod
    def from_json(cls, dims: Iterable[dict]) -> "FeatureSpace":
        parsed = []
        for entry in dims:
            if entry["kind"] == "continuous":
                parsed.append(Continuous(float(entry["lo"]), float(entry["hi"])))
            elif entry["kind"] == "categorical":
                parsed.append(Categorical(int(entry["arity"])))
            else:
                raise ValueError(f"unknown dimension kind {entry['kind']!r}")
        return cls(tuple(parsed))


def uniform_queries(space: FeatureSpace, n: int, seed: int | np.random.Generator) -> np.ndarray:
    return space.uniform(n, seed)


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


def split_indices(n: int, train_frac: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint covering train/test index split from a seeded shuffle."""
    perm = rng(seed).permutation(n)
    cut = int(round(train_frac * n))
    return np.sort(perm[:cut]), np.sort(perm[cut:])


@dataclass(frozen=True)
class Dataset:
    """Labeled rows over a feature space with a fixed train/test partition.

    The default partition is 70/30.  Rows are complete queries; labels are
    class indices below ``classes``.
    """

    space: FeatureSpace
    classes: int
    X: np.ndarray
    y: np.ndarray
    train_idx: np.ndarray = field(default=None)
    test_idx: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=int)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2 or X.shape[1] != self.space.d:
            raise ValueError("X must be (n, d) over the declared space")
        if y.shape != (X.shape[0],):
            raise ValueError("y must be (n,)")
        if self.classes < 2:
            raise ValueError("need at least 2 classes")
        if y.size and (y.min() < 0 or y.max() >= self.classes):
            raise ValueError("labels out of range")
        if np.any(np.isnan(X)):
            raise ValueError("dataset rows must be complete queries")
        if self.train_idx is None or self.test_idx is None:
            tr, te = split_indices(len(y), 0.7, seed=0)
            object.__setattr__(self, "train_idx", tr)
            object.__setattr__(self, "test_idx", te)
        else:
            tr = np.asarray(self.train_idx, dtype=int)
            te = np.asarray(self.test_idx, dtype=int)
            object.__setattr__(self, "train_idx", tr)
            object.__setattr__(self, "test_idx", te)
            merged = np.concatenate([tr, te])
            if len(np.intersect1d(tr, te)) != 0 or len(np.union1d(tr, te)) != len(y):
                raise ValueError("train/test partition must be disjoint and cover all rows")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def train_X(self) -> np.ndarray:
        return self.X[self.train_idx]

    @property
    def train_y(self) -> np.ndarray:
        return self.y[self.train_idx]

    @property
    def test_X(self) -> np.ndarray:
        return self.X[self.test_idx]

    @property
    def test_y(self) -> np.ndarray:
        return self.y[self.test_idx]


def save_dataset_csv(ds: Dataset, path: str | Path) -> Path:
    """Write rows as ``f0,...,f{d-1},label`` plus a sidecar JSON schema.

    The schema file sits next to the CSV with a ``.schema.json`` suffix and
    records the feature space and class count.
    """
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(ds.space.d)] + ["label"])
        for row, label in zip(ds.X, ds.y):
            cells = [
                int(v) if isinstance(ds.space.dims[i], Categorical) else repr(float(v))
                for i, v in enumerate(row)
            ]
            writer.writerow(cells + [int(label)])
    schema_path = path.with_suffix(".schema.json")
    schema = {"dims": ds.space.to_json(), "classes": ds.classes}
    schema_path.write_text(json.dumps(schema, indent=2) + "\n")
    return schema_path


def load_dataset_csv(
    path: str | Path,
    schema_path: str | Path | None = None,
    train_frac: float = 0.7,
    split_seed: int = 0,
) -> Dataset:
    path = Path(path)
    if schema_path is None:
        schema_path = path.with_suffix(".schema.json")
    schema = json.loads(Path(schema_path).read_text())
    space = FeatureSpace.from_json(schema["dims"])
    rows, labels = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "label":
            raise ValueError("last CSV column must be 'label'")
        for rec in reader:
            rows.append([float(v) for v in rec[:-1]])
            labels.append(int(rec[-1]))
    X = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=int)
    tr, te = split_indices(len(y), train_frac, split_seed)
    return Dataset(space, int(schema["classes"]), X, y, tr, te)


# ---------------------------------------------------------------------------
# Error measures
# ---------------------------------------------------------------------------


def validate_prob_vector(p: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("probability vector must be 1-D")
    if np.any(p < -atol) or np.any(p > 1 + atol):
        raise ValueError("probabilities must lie in [0, 1]")
    if abs(p.sum() - 1.0) > atol:
        raise ValueError(f"probabilities sum to {p.sum()}, expected 1")
    return p


def zero_one_distance(y: int, y2: int) -> float:
    """0 if the class indices agree, 1 otherwise."""
    return 0.0 if y == y2 else 1.0


def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    """Total variation distance between two probability vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def _disagreement(f, fhat, X: np.ndarray, mode: str) -> float:
    if mode == "labels":
        return float(np.mean(f.predict_class(X) != fhat.predict_class(X)))
    if mode == "tv":
        P = f.predict_proba(X)
        Q = fhat.predict_proba(X)
        return float(np.mean(0.5 * np.abs(P - Q).sum(axis=1)))
    raise ValueError(f"unknown mode {mode!r}")


def r_test(f, fhat, test: Dataset, mode: str = "labels") -> float:
    """Mean disagreement between two predictors over the test partition."""
    X = test.test_X
    if len(X) == 0:
        raise ValueError("empty test set")
    return _disagreement(f, fhat, X, mode)


def r_unif(
    f,
    fhat,
    space: FeatureSpace,
    n: int = 10_000,
    seed: int = 0,
    mode: str = "labels",
) -> float:
    """Mean disagreement over ``n`` uniform samples of the feature space.

    Estimates the fraction of the space where the predictors differ; 10,000
    samples give stable estimates for the model sizes used here.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    X = space.uniform(n, seed)
    return _disagreement(f, fhat, X, mode)
