"""Reverse engineering of service-side feature extraction.

Services often expand raw inputs before the model sees them: categorical
values become one-hot indicators and numeric values become quantile-bin
indicators.  Crucially, a feature omitted from a query maps to all-zero
indicators.  That zeroing rule lets an attacker (1) recover bin boundaries by
line search with every other input missing, and (2) build one-unknown logit
equations by activating a single expanded coordinate per query, recovering
the downstream linear model exactly.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import MISSING, Categorical, Continuous, FeatureSpace
from .eqsolve import logit
from .models import BinaryLR, SoftmaxLR
from .treepath import _scan_thresholds

__all__ = [
    "Identity",
    "OneHot",
    "QuantileBin",
    "FeatureExtractor",
    "ComposedTarget",
    "fit_quantile_bins",
    "apply_extractor",
    "recover_bins",
    "extract_composed_linear",
    "reverse_engineer_linear",
    "QueryCache",
]


@dataclass(frozen=True)
class Identity:
    def width(self) -> int:
        return 1


@dataclass(frozen=True)
class OneHot:
    arity: int

    def __post_init__(self):
        if self.arity < 2:
            raise ValueError("one-hot arity must be >= 2")

    def width(self) -> int:
        return self.arity


@dataclass(frozen=True)
class QuantileBin:
    """Bin indicators for a numeric input; ``boundaries`` are the interior
    cut points, strictly increasing.  A value exactly on a boundary falls in
    the bin to its left (intervals are closed on the right)."""

    boundaries: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(v) for v in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise ValueError("bin boundaries must be strictly increasing")

    def width(self) -> int:
        return len(self.boundaries) + 1

    def bin_index(self, v: float) -> int:
        return bisect.bisect_left(self.boundaries, v)


DimExtractor = Union[Identity, OneHot, QuantileBin]


def fit_quantile_bins(values: np.ndarray, k: int) -> QuantileBin:
    """Boundaries at the k-quantiles of observed values (k equal-count bins)."""
    qs = np.quantile(np.asarray(values, dtype=float), np.linspace(0, 1, k + 1)[1:-1])
    return QuantileBin(tuple(np.unique(qs)))


@dataclass(frozen=True)
class FeatureExtractor:
    """Per-dimension expansion of an input space into model feature space."""

    dims: tuple[DimExtractor, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))

    @property
    def width(self) -> int:
        return sum(d.width() for d in self.dims)

    def offsets(self) -> list[int]:
        out, pos = [], 0
        for d in self.dims:
            out.append(pos)
            pos += d.width()
        return out

    def output_space(self) -> FeatureSpace:
        kinds = []
        for d in self.dims:
            if isinstance(d, Identity):
                kinds.append(Continuous(-1.0, 1.0))
            else:
                kinds.extend(Continuous(0.0, 1.0) for _ in range(d.width()))
        return FeatureSpace(tuple(kinds))

    def to_json(self) -> list[dict]:
        out = []
        for d in self.dims:
            if isinstance(d, Identity):
                out.append({"kind": "identity"})
            elif isinstance(d, OneHot):
                out.append({"kind": "one_hot", "arity": d.arity})
            else:
                out.append({"kind": "quantile_bin", "boundaries": list(d.boundaries)})
        return out

    @classmethod
    def from_json(cls, dims) -> "FeatureExtractor":
        parsed: list[DimExtractor] = []
        for entry in dims:
            if entry["kind"] == "identity":
                parsed.append(Identity())
            elif entry["kind"] == "one_hot":
                parsed.append(OneHot(int(entry["arity"])))
            elif entry["kind"] == "quantile_bin":
                parsed.append(QuantileBin(tuple(entry["boundaries"])))
            else:
                raise ValueError(f"unknown extractor kind {entry['kind']!r}")
        return cls(tuple(parsed))


def apply_extractor(ex: FeatureExtractor, m: np.ndarray) -> np.ndarray:
    """Expand an input-space query; missing inputs expand to all zeros."""
    m = np.asarray(m, dtype=float)
    single = m.ndim == 1
    M = np.atleast_2d(m)
    if M.shape[1] != len(ex.dims):
        raise ValueError(f"query has {M.shape[1]} dims, extractor expects {len(ex.dims)}")
    out = np.zeros((len(M), ex.width))
    pos = 0
    for j, dim in enumerate(ex.dims):
        col = M[:, j]
        present = ~np.isnan(col)
        if isinstance(dim, Identity):
            out[present, pos] = col[present]
        elif isinstance(dim, OneHot):
            vals = col[present].astype(int)
            if vals.size and (vals.min() < 0 or vals.max() >= dim.arity):
                raise ValueError(f"dim {j}: category outside 0..{dim.arity - 1}")
            out[np.flatnonzero(present), pos + vals] = 1.0
        else:
            idx = np.asarray([dim.bin_index(v) for v in col[present]], dtype=int)
            out[np.flatnonzero(present), pos + idx] = 1.0
        pos += dim.width()
    return out[0] if single else out


class ComposedTarget:
    """A model served behind a feature extractor: f(ex(m)).

    Accepts partial input-space queries (missing dims expand to zeros), which
    is exactly the behavior the attack exploits.
    """

    accepts_partial = True

    def __init__(self, extractor: FeatureExtractor, inner):
        self.extractor = extractor
        self.inner = inner

    @property
    def classes(self) -> int:
        return self.inner.classes

    def predict_proba(self, m: np.ndarray):
        return self.inner.predict_proba(apply_extractor(self.extractor, m))

    def predict_class(self, m: np.ndarray):
        return self.inner.predict_class(apply_extractor(self.extractor, m))


class QueryCache:
    """Memoizes oracle responses so re-used queries are only charged once."""

    def __init__(self, oracle, tag: str):
        self.oracle = oracle
        self.tag = tag
        self._seen: dict[tuple, object] = {}

    def query(self, x: np.ndarray):
        key = tuple(None if math.isnan(v) else float(v) for v in x)
        if key not in self._seen:
            self._seen[key] = self.oracle.query(np.asarray(x, dtype=float), tag=self.tag)
        return self._seen[key]


def _single_dim_query(d: int, dim: int, value: float) -> np.ndarray:
    x = np.full(d, MISSING)
    x[dim] = value
    return x


def recover_bins(
    oracle,
    dim: int,
    lo: float,
    hi: float,
    eps: float = 1e-3,
    cache: QueryCache | None = None,
    tag: str = "featrev",
) -> list[float]:
    """Recover the quantile-bin boundaries of one numeric input dimension.

    Line-searches [lo, hi] with every other input missing (so only this
    dimension's coefficients move the output) and returns each threshold
    where the response changes, at granularity eps.  Boundaries between bins
    whose learned coefficients coincide are invisible and simply absent.
    """
    cache = cache or QueryCache(oracle, tag)
    d = oracle.space.d

    def probe(v: float):
        resp = cache.query(_single_dim_query(d, dim, v))
        if resp.probs is not None:
            return tuple(np.asarray(resp.probs).tolist())
        return resp.label

    segments = _scan_thresholds(probe, lo, hi, eps)
    return [seg.hi for seg, _ in segments[:-1]]


def _logit_of(resp) -> float:
    if resp.probs is None:
        raise ValueError("missing-feature equation solving needs probabilities")
    return float(logit(np.asarray(resp.probs)[1]))


def _log_probs(resp) -> np.ndarray:
    if resp.probs is None:
        raise ValueError("missing-feature equation solving needs probabilities")
    return np.log(np.clip(np.asarray(resp.probs, dtype=float), 1e-300, None))


def extract_composed_linear(
    oracle,
    ex: FeatureExtractor,
    classes: int = 2,
    cache: QueryCache | None = None,
    input_ranges: dict[int, tuple[float, float]] | None = None,
    tag: str = "featrev",
):
    """Recover the linear model behind a known (or recovered) extractor.

    One all-missing query pins the intercepts; for every expanded coordinate
    a single-feature query activates just that coordinate, giving an equation
    with one unknown.  Binary targets are recovered exactly (up to response
    precision); multiclass softmax targets are recovered up to the usual
    shift invariance, which leaves the predictions unchanged.
    """
    cache = cache or QueryCache(oracle, tag)
    d = len(ex.dims)
    input_ranges = input_ranges or {}
    empty = cache.query(np.full(d, MISSING))
    offsets = ex.offsets()
    width = ex.width

    def activation_value(j: int, dim: DimExtractor, local: int) -> float:
        # input value that turns on expanded coordinate (offset + local) alone
        if isinstance(dim, OneHot):
            return float(local)
        bounds = dim.boundaries
        lo, hi = input_ranges.get(j, (bounds[0] - 1.0, bounds[-1] + 1.0))
        left = bounds[local - 1] if local > 0 else lo
        right = bounds[local] if local < len(bounds) else hi
        return 0.5 * (left + right)

    if classes == 2:
        beta = _logit_of(empty)
        w = np.zeros(width)
        for j, dim in enumerate(ex.dims):
            for local in range(dim.width()):
                if isinstance(dim, Identity):
                    lo, hi = input_ranges.get(j, (-1.0, 1.0))
                    v = hi if abs(hi) >= abs(lo) and hi != 0 else lo
                    resp = cache.query(_single_dim_query(d, j, v))
                    w[offsets[j]] = (_logit_of(resp) - beta) / v
                else:
                    v = activation_value(j, dim, local)
                    resp = cache.query(_single_dim_query(d, j, v))
                    w[offsets[j] + local] = _logit_of(resp) - beta
        return BinaryLR(w, beta)

    # multiclass: log-probabilities determine logits up to a per-query shift
    betas = _log_probs(empty)
    W = np.zeros((classes, width))
    for j, dim in enumerate(ex.dims):
        for local in range(dim.width()):
            if isinstance(dim, Identity):
                lo, hi = input_ranges.get(j, (-1.0, 1.0))
                v = hi if abs(hi) >= abs(lo) and hi != 0 else lo
                resp = cache.query(_single_dim_query(d, j, v))
                W[:, offsets[j]] = (_log_probs(resp) - betas) / v
            else:
                v = activation_value(j, dim, local)
                resp = cache.query(_single_dim_query(d, j, v))
                W[:, offsets[j] + local] = _log_probs(resp) - betas
    return SoftmaxLR(W, betas)


def reverse_engineer_linear(
    oracle,
    input_space: FeatureSpace,
    classes: int = 2,
    eps: float = 1e-3,
    assume_binned: bool = True,
    tag: str = "featrev",
):
    """Full pipeline: recover the extractor, then the model behind it.

    Categorical input dims are assumed one-hot encoded; continuous dims are
    probed for quantile-bin boundaries (an empty boundary list means the dim
    passes through unbinned).  Returns (extractor, model, queries_spent).
    The line-search responses are re-used as equations, so they are only
    charged once.
    """
    start = oracle.ledger.total
    cache = QueryCache(oracle, tag)
    dims: list[DimExtractor] = []
    ranges: dict[int, tuple[float, float]] = {}
    for j, kind in enumerate(input_space.dims):
        if isinstance(kind, Categorical):
            dims.append(OneHot(kind.arity))
            continue
        ranges[j] = (kind.lo, kind.hi)
        boundaries = recover_bins(oracle, j, kind.lo, kind.hi, eps, cache, tag) if assume_binned else []
        dims.append(QuantileBin(tuple(boundaries)) if boundaries else Identity())
    extractor = FeatureExtractor(tuple(dims))
    model = extract_composed_linear(oracle, extractor, classes, cache, ranges, tag)
    return extractor, model, oracle.ledger.total - start
