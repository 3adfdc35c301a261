"""Decision-tree extraction via adaptive path finding.

The oracle's (prediction, confidence) pair acts as a pseudo-identifier for
the tree node an input reaches.  ``path_find`` explores the tree with
complete queries: for each newly discovered leaf it scans every feature for
the predicates that keep an input inside that leaf, and queues probes into
the neighboring regions.  ``top_down_find`` exploits incomplete queries to
extract the tree layer by layer from the root, which usually costs far fewer
queries.  Both return a rule set; ``ruleset_to_tree`` rebuilds an equivalent
tree from it.

Continuous thresholds are located by binary search on a grid of step ``eps``
and reported as the largest grid multiple on the low side, so a recovered
split is equivalent to the true one for all inputs of granularity ``eps``.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .core import MISSING, Categorical, Continuous, FeatureSpace, rng
from .models import DecisionTree, Internal, Leaf, PartitionSplit, ThresholdSplit
from .oracle import node_id

__all__ = [
    "Interval",
    "LeafRecord",
    "ExtractedRuleSet",
    "line_search",
    "category_split",
    "path_find",
    "top_down_find",
    "ruleset_to_tree",
    "UncoveredRegionError",
    "TopDownError",
    "BudgetExceededError",
]

Id = tuple


class UncoveredRegionError(RuntimeError):
    """A query fell outside every extracted rule's region."""


class TopDownError(RuntimeError):
    """The split feature of a halting node could not be identified."""


class BudgetExceededError(RuntimeError):
    """The configured query cap was reached before exploration finished."""


@dataclass(frozen=True)
class Interval:
    """(lo, hi] when left_open, [lo, hi] otherwise (the range's left edge)."""

    lo: float
    hi: float
    left_open: bool = True

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi}]")

    def contains(self, v: float) -> bool:
        if self.left_open:
            return self.lo < v <= self.hi
        return self.lo <= v <= self.hi

    def contains_array(self, vals: np.ndarray) -> np.ndarray:
        vals = np.asarray(vals)
        left = vals > self.lo if self.left_open else vals >= self.lo
        return left & (vals <= self.hi)


Constraint = Union[Interval, frozenset]


@dataclass(frozen=True)
class LeafRecord:
    """An extracted leaf: its id plus one constraint per feature."""

    id: Id
    predicates: dict[int, Constraint]

    def matches(self, x: np.ndarray) -> bool:
        for i, c in self.predicates.items():
            v = x[i]
            if isinstance(c, Interval):
                if not c.contains(v):
                    return False
            elif int(v) not in c:
                return False
        return True


def _full_predicates(partial: dict[int, Constraint], space: FeatureSpace) -> dict[int, Constraint]:
    out = {}
    for i, kind in enumerate(space.dims):
        if i in partial:
            out[i] = partial[i]
        elif isinstance(kind, Continuous):
            out[i] = Interval(kind.lo, kind.hi, left_open=False)
        else:
            out[i] = frozenset(range(kind.arity))
    return out


@dataclass(frozen=True)
class ExtractedRuleSet:
    """Disjoint leaf regions covering the feature space, each with an id.

    Doubles as a predictor: a query is answered by the first rule whose
    predicates it satisfies.
    """

    leaves: tuple[LeafRecord, ...]
    epsilon: float
    space: FeatureSpace
    classes: int = 2

    def __post_init__(self):
        object.__setattr__(self, "leaves", tuple(self.leaves))

    def _match_matrix(self, X: np.ndarray) -> np.ndarray:
        n = len(X)
        labels = np.full(n, -1, dtype=float)
        confs = np.empty(n)
        unmatched = np.ones(n, dtype=bool)
        for rec in self.leaves:
            mask = unmatched.copy()
            for i, c in rec.predicates.items():
                if not mask.any():
                    break
                if isinstance(c, Interval):
                    mask &= c.contains_array(X[:, i])
                else:
                    mask &= np.isin(X[:, i].astype(int), sorted(c))
            labels[mask] = rec.id[0]
            confs[mask] = rec.id[1]
            unmatched &= ~mask
        if unmatched.any():
            raise UncoveredRegionError(f"{int(unmatched.sum())} queries matched no rule")
        return labels, confs

    def predict_class(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        labels, _ = self._match_matrix(np.atleast_2d(x))
        labels = labels.astype(int)
        return int(labels[0]) if x.ndim == 1 else labels

    def predict_proba(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        X = np.atleast_2d(x)
        labels, confs = self._match_matrix(X)
        labels = labels.astype(int)
        P = np.tile(((1.0 - confs) / (self.classes - 1))[:, None], (1, self.classes))
        P[np.arange(len(X)), labels] = confs
        return P[0] if x.ndim == 1 else P

    def coverage_check(self, n: int = 1000, seed: int = 0) -> bool:
        """Probabilistic disjointness + cover check: every sampled point must
        satisfy exactly one rule."""
        X = self.space.uniform(n, seed)
        for x in X:
            if sum(rec.matches(x) for rec in self.leaves) != 1:
                return False
        return True

    def to_json(self) -> list[dict]:
        out = []
        for rec in self.leaves:
            constraints = []
            for i, c in sorted(rec.predicates.items()):
                if isinstance(c, Interval):
                    constraints.append(
                        {"feature": i, "interval": {"lo": c.lo, "hi": c.hi, "left_open": c.left_open}}
                    )
                else:
                    constraints.append({"feature": i, "set": sorted(c)})
            out.append({"id": list(rec.id), "constraints": constraints})
        return out

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Threshold scanning
# ---------------------------------------------------------------------------


def _scan_thresholds(
    probe: Callable[[float], Id], lo: float, hi: float, eps: float
) -> list[tuple[Interval, Id]]:
    """Find every value change of ``probe`` along [lo, hi] on the eps grid.

    Assumes each distinct response occupies one contiguous interval (true
    for unique node ids); a change bracketed between adjacent grid points is
    reported at the lower point.  Cost per threshold is log2(range/eps).
    """
    kmax = int(math.floor((hi - lo) / eps + 1e-9))
    # snap grid points to a decimal resolution ~1000x finer than eps so that
    # accumulated float error cannot shift a probe across a decimal threshold
    decimals = max(0, -int(math.floor(math.log10(eps)))) + 3

    def grid(k: int) -> float:
        return hi if k >= kmax else round(lo + k * eps, decimals)

    id_lo = probe(grid(0))
    if kmax < 1:
        return [(Interval(lo, hi, left_open=False), id_lo)]
    id_hi = probe(grid(kmax))
    boundaries: list[tuple[int, Id, Id]] = []
    stack = [(0, id_lo, kmax, id_hi)]
    while stack:
        a, ida, b, idb = stack.pop()
        if ida == idb:
            continue
        if b - a == 1:
            boundaries.append((a, ida, idb))
            continue
        mid = (a + b) // 2
        idm = probe(grid(mid))
        stack.append((a, ida, mid, idm))
        stack.append((mid, idm, b, idb))
    if not boundaries:
        return [(Interval(lo, hi, left_open=False), id_lo)]
    boundaries.sort(key=lambda rec: rec[0])
    intervals: list[tuple[Interval, Id]] = []
    prev = lo
    prev_open = False
    for k, ida, _ in boundaries:
        t = grid(k)
        intervals.append((Interval(prev, t, left_open=prev_open), ida))
        prev, prev_open = t, True
    intervals.append((Interval(prev, hi, left_open=True), boundaries[-1][2]))
    return intervals


def line_search(oracle, x: np.ndarray, i: int, eps: float, tag: str = "path_find"):
    """All (interval, id) segments along feature i with the rest of x fixed."""
    kind = oracle.space.dims[i]
    if not isinstance(kind, Continuous):
        raise ValueError(f"feature {i} is not continuous")

    def probe(v: float) -> Id:
        q = np.array(x, dtype=float)
        q[i] = v
        return node_id(oracle.query(q, tag=tag))

    return _scan_thresholds(probe, kind.lo, kind.hi, eps)


def category_split(oracle, x: np.ndarray, i: int, current_id: Id, tag: str = "path_find"):
    """Group the values of categorical feature i by the leaf they reach.

    Returns (S, V): the values leading to ``current_id`` and one
    representative value for every other id observed.
    """
    kind = oracle.space.dims[i]
    if not isinstance(kind, Categorical):
        raise ValueError(f"feature {i} is not categorical")
    S = set()
    reps: dict[Id, int] = {}
    for v in range(kind.arity):
        q = np.array(x, dtype=float)
        q[i] = float(v)
        vid = node_id(oracle.query(q, tag=tag))
        if vid == current_id:
            S.add(v)
        elif vid not in reps:
            reps[vid] = v
    return frozenset(S), list(reps.values())


# ---------------------------------------------------------------------------
# Attack 1: complete-query path finding
# ---------------------------------------------------------------------------


def path_find(
    oracle,
    space: FeatureSpace,
    eps: float = 1e-3,
    seed: int = 0,
    max_queries: int | None = None,
    classes: int = 2,
    tag: str = "path_find",
) -> ExtractedRuleSet:
    """Extract all reachable leaf regions using complete queries only.

    Maintains a FIFO queue of unexplored inputs, starting from one random
    query.  A popped input is skipped when a recorded leaf has the same id
    *and* the input satisfies that leaf's predicates (so duplicate ids alone
    do not stop exploration).  For each new leaf, a line search or category
    split per feature yields the leaf's predicates and fresh queries into
    every neighboring region.
    """
    start_total = oracle.ledger.total

    def check_budget():
        if max_queries is not None and oracle.ledger.total - start_total > max_queries:
            raise BudgetExceededError(f"query cap {max_queries} reached")

    x_init = space.uniform(1, rng(seed))[0]
    queue: deque[np.ndarray] = deque([x_init])
    records: list[LeafRecord] = []
    while queue:
        x = queue.popleft()
        check_budget()
        leaf_id = node_id(oracle.query(x, tag=tag))
        if any(rec.id == leaf_id and rec.matches(x) for rec in records):
            continue
        predicates: dict[int, Constraint] = {}
        for i, kind in enumerate(space.dims):
            check_budget()
            if isinstance(kind, Continuous):
                for interval, iv_id in line_search(oracle, x, i, eps, tag=tag):
                    if interval.contains(x[i]):
                        predicates[i] = interval
                    else:
                        nxt = np.array(x, dtype=float)
                        nxt[i] = interval.hi
                        queue.append(nxt)
            else:
                S, reps = category_split(oracle, x, i, leaf_id, tag=tag)
                predicates[i] = S
                for v in reps:
                    nxt = np.array(x, dtype=float)
                    nxt[i] = float(v)
                    queue.append(nxt)
        rec = LeafRecord(leaf_id, _full_predicates(predicates, space))
        if rec not in records:
            records.append(rec)
    return ExtractedRuleSet(tuple(records), eps, space, classes)


# ---------------------------------------------------------------------------
# Attack 2: top-down extraction with incomplete queries
# ---------------------------------------------------------------------------


def _representative(constraints: dict[int, Constraint], space: FeatureSpace) -> np.ndarray:
    x = np.full(space.d, MISSING)
    for i, c in constraints.items():
        x[i] = c.hi if isinstance(c, Interval) else float(min(c))
    return x


def _split_feature(oracle, x: np.ndarray, resp, constraints, space, tag) -> int:
    """Which feature does the halting node split on?

    With field disclosure the response names it directly (the one feature on
    the path that the query did not specify).  Otherwise each unspecified
    feature is probed once; exactly one probe must move the halting node.
    """
    if resp.fields is not None:
        specified = {i for i in range(space.d) if not math.isnan(x[i])}
        candidates = set(resp.fields) - specified
        if len(candidates) == 1:
            return candidates.pop()
        raise TopDownError(f"fields property names {len(candidates)} split candidates")
    base_id = node_id(resp)
    moved = []
    for j, kind in enumerate(space.dims):
        if not math.isnan(x[j]):
            continue
        q = np.array(x, dtype=float)
        q[j] = (kind.lo + kind.hi) / 2.0 if isinstance(kind, Continuous) else 0.0
        if node_id(oracle.query(q, tag=tag)) != base_id:
            moved.append(j)
    if len(moved) != 1:
        raise TopDownError(f"{len(moved)} probe features moved the halting node")
    return moved[0]


def _with_constraint(constraints: dict, i: int, c) -> dict:
    out = dict(constraints)
    out[i] = c
    return out


def _grid_up(v: float, eps: float) -> float:
    decimals = max(0, -int(math.floor(math.log10(eps)))) + 3
    return round(v + eps, decimals)


def _scan_interval(probe, current: Interval, eps: float) -> list[tuple[Interval, Id]]:
    """Scan a (possibly left-open) interval; segments keep its left edge."""
    lo = _grid_up(current.lo, eps) if current.left_open else current.lo
    if lo >= current.hi:
        raise TopDownError(f"interval ({current.lo}, {current.hi}] is below eps resolution")
    segments = _scan_thresholds(probe, lo, current.hi, eps)
    first, first_id = segments[0]
    segments[0] = (Interval(current.lo, first.hi, current.left_open), first_id)
    return segments


def top_down_find(
    oracle,
    space: FeatureSpace,
    eps: float = 1e-3,
    classes: int = 2,
    fallback_seed: int = 0,
    tag: str = "top_down",
) -> ExtractedRuleSet:
    """Extract the tree layer by layer, starting from the all-missing query.

    At each internal halting node the split feature is identified, its split
    extracted under the current path constraints, and each child region
    explored recursively.  Because a region's representative query pins one
    concrete value per constrained feature, a deeper re-split of a constrained
    feature can hide behind the pinned value; before a leaf is recorded, each
    constrained feature is therefore probed across its group and the region
    subdivided if the halting identity is not uniform.  Falls back to
    ``path_find`` (with a warning) if a split feature cannot be pinned down.
    """
    records: list[LeafRecord] = []

    def probe_at(x: np.ndarray, i: int, v: float) -> Id:
        q = np.array(x, dtype=float)
        q[i] = v
        return node_id(oracle.query(q, tag=tag))

    def subdivide_if_mixed(constraints, x, leaf_id):
        """Sub-contexts when a constrained feature is not id-homogeneous."""
        for i, c in constraints.items():
            if isinstance(c, frozenset):
                if len(c) < 2:
                    continue
                groups: dict[Id, set] = {}
                for v in sorted(c):
                    groups.setdefault(probe_at(x, i, float(v)), set()).add(v)
                if len(groups) > 1:
                    return [_with_constraint(constraints, i, frozenset(g)) for g in groups.values()]
            else:
                low = _grid_up(c.lo, eps) if c.left_open else c.lo
                if low >= c.hi or probe_at(x, i, low) == leaf_id:
                    continue
                segments = _scan_interval(lambda v: probe_at(x, i, v), c, eps)
                return [_with_constraint(constraints, i, seg) for seg, _ in segments]
        return None

    def explore(constraints: dict[int, Constraint]) -> None:
        x = _representative(constraints, space)
        resp = oracle.query(x, tag=tag)
        if resp.halted_at != "internal":
            sub = subdivide_if_mixed(constraints, x, node_id(resp))
            if sub is not None:
                for child in sub:
                    explore(child)
                return
            records.append(LeafRecord(node_id(resp), _full_predicates(constraints, space)))
            return
        i = _split_feature(oracle, x, resp, constraints, space, tag)
        kind = space.dims[i]
        if isinstance(kind, Continuous):
            current = constraints.get(i, Interval(kind.lo, kind.hi, left_open=False))
            segments = _scan_interval(lambda v: probe_at(x, i, v), current, eps)
            if len(segments) < 2:
                raise TopDownError(f"no threshold found for split feature {i}")
            for interval, _ in segments:
                explore(_with_constraint(constraints, i, interval))
        else:
            allowed = sorted(constraints.get(i, frozenset(range(kind.arity))))
            groups: dict[Id, set] = {}
            for v in allowed:
                groups.setdefault(probe_at(x, i, float(v)), set()).add(v)
            if len(groups) < 2:
                raise TopDownError(f"categorical split feature {i} produced one group")
            for values in groups.values():
                explore(_with_constraint(constraints, i, frozenset(values)))

    try:
        explore({})
    except TopDownError as exc:
        warnings.warn(f"top-down extraction aborted ({exc}); falling back to path finding")
        return path_find(oracle, space, eps, seed=fallback_seed, classes=classes, tag=tag)
    return ExtractedRuleSet(tuple(records), eps, space, classes)


# ---------------------------------------------------------------------------
# Rule set -> decision tree
# ---------------------------------------------------------------------------


class CleanCutError(RuntimeError):
    pass


def _majority_id(rules: list[LeafRecord]) -> Id:
    counts: dict[Id, int] = {}
    for r in rules:
        counts[r.id] = counts.get(r.id, 0) + 1
    return max(counts.items(), key=lambda kv: kv[1])[0]


def _build_tree(rules: list[LeafRecord], space: FeatureSpace):
    ids = {r.id for r in rules}
    if len(ids) == 1:
        label, conf = next(iter(ids))
        return Leaf(int(label), float(conf))
    for i, kind in enumerate(space.dims):
        if isinstance(kind, Continuous):
            cuts = sorted({r.predicates[i].hi for r in rules})[:-1]
            for t in cuts:
                left = [r for r in rules if r.predicates[i].hi <= t]
                right = [r for r in rules if r.predicates[i].lo >= t]
                if len(left) + len(right) == len(rules) and left and right:
                    label, conf = _majority_id(rules)
                    return Internal(
                        i,
                        ThresholdSplit(float(t)),
                        (_build_tree(left, space), _build_tree(right, space)),
                        int(label),
                        float(conf),
                    )
        else:
            universe = frozenset().union(*(r.predicates[i] for r in rules))
            for candidate in sorted({r.predicates[i] for r in rules}, key=sorted):
                if candidate == universe:
                    continue
                left = [r for r in rules if r.predicates[i] <= candidate]
                right = [r for r in rules if not (r.predicates[i] & candidate)]
                if len(left) + len(right) == len(rules) and left and right:
                    label, conf = _majority_id(rules)
                    return Internal(
                        i,
                        PartitionSplit(candidate, universe - candidate),
                        (_build_tree(left, space), _build_tree(right, space)),
                        int(label),
                        float(conf),
                    )
    raise CleanCutError("no single split separates the remaining rules")


def ruleset_to_tree(ruleset: ExtractedRuleSet) -> DecisionTree:
    """Rebuild a decision tree whose predictions equal the rule set's.

    Chooses, at every level, a split that no remaining rule straddles.  Rule
    sets extracted from actual trees always admit such a split; pathological
    ones raise ``CleanCutError``, in which case the rule set itself remains
    usable as a first-matching-rule predictor.
    """
    if not ruleset.leaves:
        raise ValueError("empty rule set")
    return DecisionTree(_build_tree(list(ruleset.leaves), ruleset.space), ruleset.classes)
