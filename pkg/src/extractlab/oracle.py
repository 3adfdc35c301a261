"""Prediction-API wrapper: the adversary's only window onto a target model.

An ``Oracle`` binds a trained model to a disclosure policy that controls
output richness (labels only or class probabilities, optional rounding,
partial-query support, field disclosure) and accounts for every query in a
thread-safe ledger.  Optionally every (query, response) pair is appended to
a JSONL transcript for audit and offline replay.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import FeatureSpace, is_complete
from .models import DecisionTree, NoProbabilitiesError, tree_traverse

__all__ = [
    "DisclosurePolicy",
    "OracleResponse",
    "QueryLedger",
    "Oracle",
    "ReplayOracle",
    "node_id",
    "PartialQueryError",
]

LABELS_ONLY = "labels"
PROBABILITIES = "probs"


class PartialQueryError(ValueError):
    """An incomplete query hit a policy or model that cannot answer it."""


@dataclass(frozen=True)
class DisclosurePolicy:
    """What a prediction response reveals.

    ``rounding`` is either None (full precision) or the number of decimal
    places; rounding uses round-half-to-even, applied to each probability
    and to the confidence independently, with no renormalization.
    """

    outputs: str = PROBABILITIES
    rounding: int | None = None
    allow_partial: bool = False
    reveal_fields: bool = False

    def __post_init__(self):
        if self.outputs not in (LABELS_ONLY, PROBABILITIES):
            raise ValueError(f"outputs must be {LABELS_ONLY!r} or {PROBABILITIES!r}")
        if self.rounding is not None and self.rounding < 1:
            raise ValueError("rounding precision must be >= 1 decimal")

    def round(self, value):
        if self.rounding is None or value is None:
            return value
        return np.round(value, self.rounding)


@dataclass(frozen=True)
class OracleResponse:
    label: int
    probs: np.ndarray | None = None
    confidence: float | None = None
    fields: frozenset | None = None
    halted_at: str | None = None  # "leaf" or "internal" for tree targets
    value: float | None = None  # regression-tree output

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "probs": None if self.probs is None else [float(p) for p in self.probs],
            "confidence": self.confidence,
            "fields": None if self.fields is None else sorted(self.fields),
            "halted_at": self.halted_at,
            "value": self.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OracleResponse":
        return cls(
            label=int(obj["label"]),
            probs=None if obj["probs"] is None else np.asarray(obj["probs"]),
            confidence=obj["confidence"],
            fields=None if obj["fields"] is None else frozenset(obj["fields"]),
            halted_at=obj["halted_at"],
            value=obj["value"],
        )


def node_id(resp: OracleResponse) -> tuple:
    """Identity of the tree node behind a response: its prediction paired
    with its (already rounded) confidence.  Equal ids compare equal bit-wise.
    Regression outputs take the place of the class label when present."""
    if resp.confidence is None:
        raise ValueError("node identity needs a disclosed confidence")
    prediction = resp.value if resp.value is not None else resp.label
    return (prediction, float(resp.confidence))


class QueryLedger:
    """Monotone query counter with per-attack tags; safe under concurrency."""

    def __init__(self):
        self._lock = threading.Lock()
        self.total = 0
        self.by_tag: dict[str, int] = {}

    def record(self, tag: str | None) -> None:
        with self._lock:
            self.total += 1
            if tag is not None:
                self.by_tag[tag] = self.by_tag.get(tag, 0) + 1

    def snapshot(self) -> dict:
        with self._lock:
            return {"total": self.total, "by_tag": dict(self.by_tag)}


class Oracle:
    """A trained model behind a disclosure policy, with query accounting."""

    def __init__(
        self,
        model,
        space: FeatureSpace,
        policy: DisclosurePolicy = DisclosurePolicy(),
        record_path: str | Path | None = None,
    ):
        self.model = model
        self.space = space
        self.policy = policy
        self.ledger = QueryLedger()
        self._record_path = Path(record_path) if record_path else None
        if policy.outputs == PROBABILITIES and not hasattr(model, "predict_proba"):
            raise NoProbabilitiesError(
                f"{type(model).__name__} cannot back a probability-disclosing oracle"
            )
        if policy.outputs == PROBABILITIES and not _supports_probs(model):
            raise NoProbabilitiesError(
                f"{type(model).__name__} does not provide class probability estimates"
            )

    # -- querying ----------------------------------------------------------

    def query(self, x: np.ndarray, tag: str | None = None) -> OracleResponse:
        x = np.asarray(x, dtype=float)
        partial = not is_complete(x)
        if partial and not self.policy.allow_partial:
            raise PartialQueryError("this oracle's policy forbids incomplete queries")
        self.space.validate_query(x, allow_missing=True)
        if isinstance(self.model, DecisionTree):
            resp = self._answer_tree(x)
        else:
            if partial and not getattr(self.model, "accepts_partial", False):
                raise PartialQueryError(
                    f"{type(self.model).__name__} targets cannot answer incomplete queries"
                )
            resp = self._answer_flat(x)
        self.ledger.record(tag)
        if self._record_path is not None:
            self._append_transcript(x, resp)
        return resp

    def query_batch(self, X: np.ndarray, tag: str | None = None) -> list[OracleResponse]:
        # the ledger counts predictions, not transport calls
        return [self.query(x, tag) for x in np.atleast_2d(X)]

    def _answer_tree(self, x: np.ndarray) -> OracleResponse:
        trav = tree_traverse(self.model, x)
        node = trav.node
        conf = float(self.policy.round(node.confidence))
        fields = None
        if self.policy.reveal_fields:
            specified = frozenset(int(i) for i in range(len(x)) if not math.isnan(x[i]))
            fields = frozenset(trav.path_features) | specified
        probs = None
        if self.policy.outputs == PROBABILITIES:
            c = self.model.n_classes
            probs = np.full(c, (1.0 - node.confidence) / (c - 1))
            probs[node.label] = node.confidence
            probs = self.policy.round(probs)
        return OracleResponse(
            label=int(node.label),
            probs=probs,
            confidence=conf if self.policy.outputs == PROBABILITIES else None,
            fields=fields,
            halted_at="leaf" if trav.is_leaf else "internal",
            value=node.value,
        )

    def _answer_flat(self, x: np.ndarray) -> OracleResponse:
        label = int(np.atleast_1d(self.model.predict_class(x))[0])
        probs = confidence = None
        if self.policy.outputs == PROBABILITIES:
            raw = self.model.predict_proba(x)
            probs = self.policy.round(raw)
            confidence = float(probs[label])
        fields = None
        if self.policy.reveal_fields:
            fields = frozenset(int(i) for i in range(len(x)) if not math.isnan(x[i]))
        return OracleResponse(label=label, probs=probs, confidence=confidence, fields=fields)

    # -- transcripts ---------------------------------------------------------

    def _append_transcript(self, x: np.ndarray, resp: OracleResponse) -> None:
        entry = {
            "query": [None if math.isnan(v) else float(v) for v in x],
            "response": resp.to_json(),
        }
        with open(self._record_path, "a") as fh:
            fh.write(json.dumps(entry) + "\n")


def _supports_probs(model) -> bool:
    if not hasattr(model, "predict_proba"):
        return False
    from .models import SVM

    return not isinstance(model, SVM)


def _query_key(x: Iterable[float]) -> tuple:
    return tuple(None if (v is None or (isinstance(v, float) and math.isnan(v))) else float(v) for v in x)


class ReplayOracle:
    """Serves previously recorded responses; re-runs attacks offline.

    Unknown queries raise, so a replayed attack must issue exactly the same
    query sequence as the recorded one.
    """

    def __init__(self, transcript_path: str | Path):
        self.ledger = QueryLedger()
        self._responses: dict[tuple, OracleResponse] = {}
        with open(transcript_path) as fh:
            for line in fh:
                entry = json.loads(line)
                self._responses[_query_key(entry["query"])] = OracleResponse.from_json(
                    entry["response"]
                )

    def query(self, x: np.ndarray, tag: str | None = None) -> OracleResponse:
        key = _query_key(np.asarray(x, dtype=float))
        if key not in self._responses:
            raise KeyError("query not present in the recorded transcript")
        self.ledger.record(tag)
        return self._responses[key]

    def query_batch(self, X: np.ndarray, tag: str | None = None) -> list[OracleResponse]:
        return [self.query(x, tag) for x in np.atleast_2d(X)]
