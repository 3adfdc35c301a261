"""Target model classes with exact prediction semantics.

Every model exposes ``predict_class`` and, where supported, ``predict_proba``.
Both accept a single query ``(d,)`` or a batch ``(n, d)``; outputs follow the
input shape.  Ties in argmax resolve to the lowest class index, so agreement
checks are deterministic.  Models are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "sigmoid",
    "softmax",
    "rbf_kernel",
    "poly_feature_map",
    "BinaryLR",
    "SoftmaxLR",
    "OvRLR",
    "MLP",
    "KernelLR",
    "Linear",
    "Poly",
    "RBF",
    "SVM",
    "Leaf",
    "Internal",
    "ThresholdSplit",
    "PartitionSplit",
    "KArySplit",
    "DecisionTree",
    "Traversal",
    "tree_traverse",
    "predict_proba",
    "predict_class",
    "NoProbabilitiesError",
    "model_to_json",
    "model_from_json",
    "save_model",
    "load_model",
]


class NoProbabilitiesError(TypeError):
    """Raised when class probabilities are requested from a model without them."""


def sigmoid(t):
    """Numerically stable logistic function 1 / (1 + e^-t)."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


def softmax(Z: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shifted for stability."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    E = np.exp(Z - Z.max(axis=1, keepdims=True))
    return E / E.sum(axis=1, keepdims=True)


def rbf_kernel(X: np.ndarray, R: np.ndarray, gamma: float) -> np.ndarray:
    """e^{-gamma * ||x - r||^2} for every (row of X, row of R) pair."""
    X = np.atleast_2d(X)
    R = np.atleast_2d(R)
    sq = ((X[:, None, :] - R[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-gamma * sq)


def _poly_exponents(d: int, degree: int) -> list[tuple[int, ...]]:
    """Monomial exponent tuples of total degree <= degree over d variables."""
    exps = []
    for total in range(degree + 1):
        for combo in combinations_with_replacement(range(d), total):
            e = [0] * d
            for i in combo:
                e[i] += 1
            exps.append(tuple(e))
    return exps


def poly_feature_map(x: np.ndarray, degree: int) -> np.ndarray:
    """Explicit feature map of the polynomial kernel (x.x' + 1)^degree.

    Returns phi(x) such that phi(x).phi(x') equals the kernel value for all
    pairs.  Each component is a monomial scaled by the square root of its
    multinomial coefficient; the constant monomial sits at index 0.
    """
    if degree < 2:
        raise ValueError("degree must be >= 2")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    d = X.shape[1]
    exps = _poly_exponents(d, degree)
    cols = []
    for e in exps:
        k0 = degree - sum(e)
        coeff = math.factorial(degree) / (
            math.factorial(k0) * math.prod(math.factorial(k) for k in e)
        )
        mono = np.ones(len(X))
        for i, k in enumerate(e):
            if k:
                mono = mono * X[:, i] ** k
        cols.append(math.sqrt(coeff) * mono)
    Phi = np.column_stack(cols)
    return Phi[0] if single else Phi


def _argmax_rows(P: np.ndarray) -> np.ndarray:
    # np.argmax returns the first (lowest) index on ties
    return np.argmax(P, axis=1)


class _ProbModel:
    """Shared batch plumbing for models that compute class probabilities."""

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        P = self._proba(np.atleast_2d(x))
        return P[0] if x.ndim == 1 else P

    def predict_class(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        labels = _argmax_rows(self._proba(np.atleast_2d(x)))
        return int(labels[0]) if x.ndim == 1 else labels


@dataclass(frozen=True)
class BinaryLR(_ProbModel):
    """Binary logistic regression: f1(x) = sigmoid(w.x + beta)."""

    w: np.ndarray
    beta: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "beta", float(self.beta))
        if not (np.all(np.isfinite(w)) and math.isfinite(self.beta)):
            raise ValueError("parameters must be finite")

    @property
    def classes(self) -> int:
        return 2

    def decision_value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.atleast_2d(x) @ self.w + self.beta

    def _proba(self, X: np.ndarray) -> np.ndarray:
        p1 = sigmoid(X @ self.w + self.beta)
        return np.column_stack([1.0 - p1, p1])


@dataclass(frozen=True)
class SoftmaxLR(_ProbModel):
    """Multinomial regression: f_i(x) = e^{z_i} / sum_j e^{z_j}, z = Wx + b."""

    W: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        b = np.asarray(self.betas, dtype=float)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "betas", b)
        if W.shape[0] != b.shape[0] or W.shape[0] < 2:
            raise ValueError("need one (w, beta) pair per class, c >= 2")

    @property
    def classes(self) -> int:
        return self.W.shape[0]

    def _proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(X @ self.W.T + self.betas)


@dataclass(frozen=True)
class OvRLR(_ProbModel):
    """One-vs-rest regression: per-class sigmoids normalized by their sum."""

    W: np.ndarray
    betas: np.ndarray

    _CLAMP = 1e-300  # keeps the normalizer positive when every sigmoid underflows

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        b = np.asarray(self.betas, dtype=float)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "betas", b)
        if W.shape[0] != b.shape[0] or W.shape[0] < 2:
            raise ValueError("need one (w, beta) pair per class, c >= 2")

    @property
    def classes(self) -> int:
        return self.W.shape[0]

    def _proba(self, X: np.ndarray) -> np.ndarray:
        S = np.maximum(sigmoid(X @ self.W.T + self.betas), self._CLAMP)
        return S / S.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class MLP(_ProbModel):
    """One-hidden-layer perceptron: tanh hidden units, softmax output."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("W1", "b1", "W2", "b2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        h = self.W1.shape[0]
        if h < 1:
            raise ValueError("need at least one hidden node")
        if self.b1.shape != (h,) or self.W2.shape[1] != h:
            raise ValueError("inconsistent hidden layer shapes")
        if self.W2.shape[0] != self.b2.shape[0]:
            raise ValueError("inconsistent output layer shapes")

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    @property
    def classes(self) -> int:
        return self.W2.shape[0]

    def hidden_activations(self, X: np.ndarray) -> np.ndarray:
        return np.tanh(np.atleast_2d(X) @ self.W1.T + self.b1)

    def _proba(self, X: np.ndarray) -> np.ndarray:
        H = self.hidden_activations(X)
        return softmax(H @ self.W2.T + self.b2)


@dataclass(frozen=True)
class KernelLR(_ProbModel):
    """Softmax regression over RBF kernel expansions against representer points.

    z_i(x) = sum_r alphas[i, r] * K(x, representers[r]) + betas[i].  The
    representers are feature-space points; in a trained model they are a
    subset of the training data, which is what makes this class leak.
    """

    alphas: np.ndarray
    betas: np.ndarray
    representers: np.ndarray
    gamma: float

    def __post_init__(self):
        A = np.asarray(self.alphas, dtype=float)
        b = np.asarray(self.betas, dtype=float)
        R = np.atleast_2d(np.asarray(self.representers, dtype=float))
        object.__setattr__(self, "alphas", A)
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "representers", R)
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if A.shape != (b.shape[0], R.shape[0]) or R.shape[0] < 1:
            raise ValueError("alphas must be (classes, representers) with s >= 1")

    @property
    def classes(self) -> int:
        return self.betas.shape[0]

    @property
    def s(self) -> int:
        return self.representers.shape[0]

    def _proba(self, X: np.ndarray) -> np.ndarray:
        K = rbf_kernel(X, self.representers, self.gamma)
        return softmax(K @ self.alphas.T + self.betas)


# ---------------------------------------------------------------------------
# SVMs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Linear:
    pass


@dataclass(frozen=True)
class Poly:
    degree: int

    def __post_init__(self):
        if self.degree < 2:
            raise ValueError("polynomial degree must be >= 2")


@dataclass(frozen=True)
class RBF:
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


Kernel = Union[Linear, Poly, RBF]


@dataclass(frozen=True)
class SVM:
    """Binary maximum-margin classifier; class 1 iff the decision value >= 0.

    Linear kernels may carry explicit ``(w, beta)``; kernelized models store
    the signed dual weights together with their support vectors.  SVMs never
    expose class probabilities.
    """

    kernel: Kernel
    beta: float
    w: np.ndarray | None = None
    dual_alphas: np.ndarray | None = None
    support_vectors: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta", float(self.beta))
        if self.w is not None:
            if not isinstance(self.kernel, Linear):
                raise ValueError("explicit weights require a linear kernel")
            if self.dual_alphas is not None:
                raise ValueError("explicit-weight SVMs carry no dual form")
            object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        else:
            if self.dual_alphas is None or self.support_vectors is None:
                raise ValueError("dual SVMs need alphas and support vectors")
            a = np.asarray(self.dual_alphas, dtype=float)
            sv = np.atleast_2d(np.asarray(self.support_vectors, dtype=float))
            if a.shape[0] != sv.shape[0]:
                raise ValueError("one dual weight per support vector")
            object.__setattr__(self, "dual_alphas", a)
            object.__setattr__(self, "support_vectors", sv)

    @property
    def classes(self) -> int:
        return 2

    def _kernel_matrix(self, X: np.ndarray) -> np.ndarray:
        if isinstance(self.kernel, RBF):
            return rbf_kernel(X, self.support_vectors, self.kernel.gamma)
        if isinstance(self.kernel, Poly):
            return (X @ self.support_vectors.T + 1.0) ** self.kernel.degree
        return X @ self.support_vectors.T

    def decision_value(self, x: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        if self.w is not None:
            return X @ self.w + self.beta
        return self._kernel_matrix(X) @ self.dual_alphas + self.beta

    def predict_class(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        labels = (self.decision_value(x) >= 0).astype(int)
        return int(labels[0]) if x.ndim == 1 else labels

    def predict_proba(self, x: np.ndarray):
        raise NoProbabilitiesError("SVMs do not provide class probability estimates")


# ---------------------------------------------------------------------------
# Decision trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdSplit:
    """Binary split on a continuous feature: child 0 iff x_i <= t."""

    t: float

    def route(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values) > self.t).astype(int)

    @property
    def n_children(self) -> int:
        return 2


@dataclass(frozen=True)
class PartitionSplit:
    """Binary split on a categorical feature: child 0 iff x_i in left."""

    left: frozenset
    right: frozenset

    def __post_init__(self):
        object.__setattr__(self, "left", frozenset(int(v) for v in self.left))
        object.__setattr__(self, "right", frozenset(int(v) for v in self.right))
        if not self.left or not self.right or self.left & self.right:
            raise ValueError("partition sides must be non-empty and disjoint")

    def route(self, values: np.ndarray) -> np.ndarray:
        vals = np.asarray(values).astype(int)
        return (~np.isin(vals, sorted(self.left))).astype(int)

    @property
    def n_children(self) -> int:
        return 2


@dataclass(frozen=True)
class KArySplit:
    """k-ary split on a categorical feature of arity k: child index = value."""

    arity: int

    def route(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values).astype(int)

    @property
    def n_children(self) -> int:
        return self.arity


Split = Union[ThresholdSplit, PartitionSplit, KArySplit]


@dataclass(frozen=True)
class Leaf:
    label: int
    confidence: float
    value: float | None = None  # real-valued output for regression trees


@dataclass(frozen=True)
class Internal:
    """Internal node; carries its own (label, confidence) so that partial
    queries halting here still produce an output."""

    feature: int
    split: Split
    children: tuple
    label: int
    confidence: float
    value: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) != self.split.n_children:
            raise ValueError("children count must match the split fan-out")


TreeNode = Union[Leaf, Internal]


@dataclass(frozen=True)
class Traversal:
    node: TreeNode
    path_features: tuple[int, ...]

    @property
    def is_leaf(self) -> bool:
        return isinstance(self.node, Leaf)


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode
    n_classes: int

    def traverse(self, x: np.ndarray) -> Traversal:
        return tree_traverse(self, x)

    def leaves(self) -> list[Leaf]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                out.append(node)
            else:
                stack.extend(node.children)
        return out

    @property
    def classes(self) -> int:
        return self.n_classes

    def predict_class(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        X = np.atleast_2d(x)
        out = np.empty(len(X), dtype=int)
        _assign_labels(self.root, X, np.arange(len(X)), out)
        return int(out[0]) if x.ndim == 1 else out

    def predict_proba(self, x: np.ndarray):
        """Degenerate distribution from the leaf: its confidence at the leaf
        label, remaining mass spread over the other classes."""
        x = np.asarray(x, dtype=float)
        X = np.atleast_2d(x)
        labels = np.empty(len(X), dtype=int)
        confs = np.empty(len(X), dtype=float)
        _assign_leaf_stats(self.root, X, np.arange(len(X)), labels, confs)
        P = np.tile(((1.0 - confs) / (self.n_classes - 1))[:, None], (1, self.n_classes))
        P[np.arange(len(X)), labels] = confs
        return P[0] if x.ndim == 1 else P


def _assign_labels(node: TreeNode, X, idx, out):
    if isinstance(node, Leaf):
        out[idx] = node.label
        return
    routes = node.split.route(X[idx, node.feature])
    for child_i, child in enumerate(node.children):
        mask = routes == child_i
        if mask.any():
            _assign_labels(child, X, idx[mask], out)


def _assign_leaf_stats(node: TreeNode, X, idx, labels, confs):
    if isinstance(node, Leaf):
        labels[idx] = node.label
        confs[idx] = node.confidence
        return
    routes = node.split.route(X[idx, node.feature])
    for child_i, child in enumerate(node.children):
        mask = routes == child_i
        if mask.any():
            _assign_leaf_stats(child, X, idx[mask], labels, confs)


def tree_traverse(tree: DecisionTree, x: np.ndarray) -> Traversal:
    """Walk from the root; halt at the first node splitting on a missing
    feature, otherwise at a leaf.  Returns the halting node and the split
    features of every internal node visited (the halting node included)."""
    x = np.asarray(x, dtype=float)
    node = tree.root
    path: list[int] = []
    while isinstance(node, Internal):
        path.append(node.feature)
        v = x[node.feature]
        if math.isnan(v):
            return Traversal(node, tuple(path))
        child_i = int(node.split.route(np.asarray([v]))[0])
        if child_i >= len(node.children):
            raise ValueError(f"value {v} routes outside the node's children")
        node = node.children[child_i]
    return Traversal(node, tuple(path))


# ---------------------------------------------------------------------------
# Spec-surface dispatch helpers
# ---------------------------------------------------------------------------


def predict_proba(model, x: np.ndarray) -> np.ndarray:
    return model.predict_proba(x)


def predict_class(model, x: np.ndarray):
    return model.predict_class(x)


# ---------------------------------------------------------------------------
# JSON serialization (lossless: floats round-trip via repr)
# ---------------------------------------------------------------------------


def _node_to_json(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        out = {"type": "leaf", "label": node.label, "confidence": node.confidence}
        if node.value is not None:
            out["value"] = node.value
        return out
    split: dict
    if isinstance(node.split, ThresholdSplit):
        split = {"kind": "threshold", "t": node.split.t}
    elif isinstance(node.split, PartitionSplit):
        split = {
            "kind": "partition",
            "left": sorted(node.split.left),
            "right": sorted(node.split.right),
        }
    else:
        split = {"kind": "kary", "arity": node.split.arity}
    out = {
        "type": "internal",
        "feature": node.feature,
        "split": split,
        "label": node.label,
        "confidence": node.confidence,
        "children": [_node_to_json(c) for c in node.children],
    }
    if node.value is not None:
        out["value"] = node.value
    return out


def _node_from_json(obj: dict) -> TreeNode:
    if obj["type"] == "leaf":
        return Leaf(int(obj["label"]), float(obj["confidence"]), obj.get("value"))
    s = obj["split"]
    if s["kind"] == "threshold":
        split: Split = ThresholdSplit(float(s["t"]))
    elif s["kind"] == "partition":
        split = PartitionSplit(frozenset(s["left"]), frozenset(s["right"]))
    else:
        split = KArySplit(int(s["arity"]))
    return Internal(
        int(obj["feature"]),
        split,
        tuple(_node_from_json(c) for c in obj["children"]),
        int(obj["label"]),
        float(obj["confidence"]),
        obj.get("value"),
    )


def model_to_json(model) -> dict:
    if isinstance(model, BinaryLR):
        return {"kind": "binary_lr", "w": model.w.tolist(), "beta": model.beta}
    if isinstance(model, SoftmaxLR):
        return {"kind": "softmax", "W": model.W.tolist(), "betas": model.betas.tolist()}
    if isinstance(model, OvRLR):
        return {"kind": "ovr", "W": model.W.tolist(), "betas": model.betas.tolist()}
    if isinstance(model, MLP):
        return {
            "kind": "mlp",
            "W1": model.W1.tolist(),
            "b1": model.b1.tolist(),
            "W2": model.W2.tolist(),
            "b2": model.b2.tolist(),
            "activation": "tanh",
        }
    if isinstance(model, KernelLR):
        return {
            "kind": "klr",
            "alphas": model.alphas.tolist(),
            "betas": model.betas.tolist(),
            "representers": model.representers.tolist(),
            "gamma": model.gamma,
        }
    if isinstance(model, SVM):
        if isinstance(model.kernel, Linear):
            kern = {"kind": "linear"}
        elif isinstance(model.kernel, Poly):
            kern = {"kind": "poly", "degree": model.kernel.degree}
        else:
            kern = {"kind": "rbf", "gamma": model.kernel.gamma}
        out = {"kind": "svm", "kernel": kern, "beta": model.beta}
        if model.w is not None:
            out["w"] = model.w.tolist()
        else:
            out["dual_alphas"] = model.dual_alphas.tolist()
            out["support_vectors"] = model.support_vectors.tolist()
        return out
    if isinstance(model, DecisionTree):
        return {"kind": "tree", "classes": model.n_classes, "root": _node_to_json(model.root)}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_json(obj: dict):
    kind = obj["kind"]
    if kind == "binary_lr":
        return BinaryLR(np.asarray(obj["w"]), obj["beta"])
    if kind == "softmax":
        return SoftmaxLR(np.asarray(obj["W"]), np.asarray(obj["betas"]))
    if kind == "ovr":
        return OvRLR(np.asarray(obj["W"]), np.asarray(obj["betas"]))
    if kind == "mlp":
        return MLP(
            np.asarray(obj["W1"]),
            np.asarray(obj["b1"]),
            np.asarray(obj["W2"]),
            np.asarray(obj["b2"]),
        )
    if kind == "klr":
        return KernelLR(
            np.asarray(obj["alphas"]),
            np.asarray(obj["betas"]),
            np.asarray(obj["representers"]),
            obj["gamma"],
        )
    if kind == "svm":
        k = obj["kernel"]
        if k["kind"] == "linear":
            kernel: Kernel = Linear()
        elif k["kind"] == "poly":
            kernel = Poly(int(k["degree"]))
        else:
            kernel = RBF(float(k["gamma"]))
        if "w" in obj:
            return SVM(kernel, obj["beta"], w=np.asarray(obj["w"]))
        return SVM(
            kernel,
            obj["beta"],
            dual_alphas=np.asarray(obj["dual_alphas"]),
            support_vectors=np.asarray(obj["support_vectors"]),
        )
    if kind == "tree":
        return DecisionTree(_node_from_json(obj["root"]), int(obj["classes"]))
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_json(model), indent=2) + "\n")


def load_model(path: str | Path):
    return model_from_json(json.loads(Path(path).read_text()))
