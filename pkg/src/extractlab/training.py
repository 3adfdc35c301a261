"""Training of target models and loss-minimization fitting.

The logistic family (binary/softmax/one-vs-rest regression, perceptrons,
kernel regression) is fit by minimizing mean cross-entropy plus an L2 penalty
on the weight matrices.  The default optimizer is deterministic full-batch
gradient descent with momentum and geometric learning-rate backoff whenever
the loss increases; minibatch SGD is available for the larger non-convex
fits.  SVMs train by hinge-loss subgradient descent (linear kernel) or an
SMO-style dual solver (RBF / polynomial).  Trees grow greedily on Gini
impurity with Wilson-lower-bound confidences at every node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import Continuous, Dataset, rng
from .models import (
    MLP,
    RBF,
    SVM,
    BinaryLR,
    DecisionTree,
    Internal,
    KArySplit,
    KernelLR,
    Leaf,
    Linear,
    OvRLR,
    Poly,
    SoftmaxLR,
    ThresholdSplit,
    rbf_kernel,
    sigmoid,
    softmax,
)

__all__ = [
    "OptimizerConfig",
    "LossReport",
    "one_hot",
    "cross_entropy_loss",
    "loss_gradient",
    "minimize_loss",
    "fit_logistic_family",
    "fit_from_samples",
    "fit_svm",
    "fit_svm_samples",
    "fit_tree",
    "wilson_lower_bound",
]

_LOG_CLAMP = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.5
    momentum: float = 0.9
    max_epochs: int = 1000
    batch_size: int = 0  # 0 means full batch
    tolerance: float = 1e-7  # gradient infinity-norm stopping criterion
    l2_lambda: float = 1e-4
    seed: int = 0
    method: str = "gd"  # "gd" (momentum descent / SGD) or "lbfgs"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be non-negative")
        if self.method not in ("gd", "lbfgs"):
            raise ValueError("method must be 'gd' or 'lbfgs'")


@dataclass(frozen=True)
class LossReport:
    final_loss: float
    epochs_run: int
    converged: bool

    def __post_init__(self):
        if self.final_loss < 0:
            raise ValueError("loss cannot be negative")


def one_hot(y: np.ndarray, classes: int) -> np.ndarray:
    y = np.asarray(y, dtype=int)
    if y.size and (y.min() < 0 or y.max() >= classes):
        raise ValueError("class index out of range")
    T = np.zeros((len(y), classes))
    T[np.arange(len(y)), y] = 1.0
    return T


def _as_targets(targets, classes: int) -> np.ndarray:
    T = np.asarray(targets, dtype=float)
    if T.ndim == 1:
        return one_hot(T.astype(int), classes)
    if T.shape[1] != classes:
        raise ValueError(f"target width {T.shape[1]} != {classes} classes")
    return T


# ---------------------------------------------------------------------------
# Parameter packs: each logistic-family model maps to a dict of arrays.
# Entries listed in _WEIGHT_KEYS are the ones the L2 penalty touches.
# ---------------------------------------------------------------------------

_WEIGHT_KEYS = {
    BinaryLR: ("w",),
    SoftmaxLR: ("W",),
    OvRLR: ("W",),
    MLP: ("W1", "W2"),
    KernelLR: ("alphas",),
}


def _params(model) -> dict[str, np.ndarray]:
    if isinstance(model, BinaryLR):
        return {"w": model.w, "beta": np.asarray([model.beta])}
    if isinstance(model, (SoftmaxLR, OvRLR)):
        return {"W": model.W, "betas": model.betas}
    if isinstance(model, MLP):
        return {"W1": model.W1, "b1": model.b1, "W2": model.W2, "b2": model.b2}
    if isinstance(model, KernelLR):
        return {"alphas": model.alphas, "betas": model.betas, "representers": model.representers}
    raise TypeError(f"{type(model).__name__} is not a logistic-family model")


def _with_params(model, params: dict[str, np.ndarray]):
    if isinstance(model, BinaryLR):
        return BinaryLR(params["w"], float(params["beta"][0]))
    if isinstance(model, (SoftmaxLR, OvRLR)):
        return type(model)(params["W"], params["betas"])
    if isinstance(model, MLP):
        return MLP(params["W1"], params["b1"], params["W2"], params["b2"])
    if isinstance(model, KernelLR):
        return KernelLR(params["alphas"], params["betas"], params["representers"], model.gamma)
    raise TypeError(f"{type(model).__name__} is not a logistic-family model")


def cross_entropy_loss(model, X: np.ndarray, targets, l2_lambda: float) -> float:
    """Mean cross-entropy of the model against hard or soft targets, plus
    l2_lambda times the squared norm of the weight matrices."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) == 0:
        raise ValueError("need at least one target sample")
    T = _as_targets(targets, model.classes)
    P = np.atleast_2d(model.predict_proba(X))
    ce = -np.sum(T * np.log(np.maximum(P, _LOG_CLAMP))) / len(X)
    reg = sum(float(np.sum(getattr(model, k) ** 2)) for k in _WEIGHT_KEYS[type(model)])
    return float(ce + l2_lambda * reg)


def loss_gradient(model, X: np.ndarray, targets, l2_lambda: float) -> dict[str, np.ndarray]:
    """Gradient of cross_entropy_loss with respect to every parameter array."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = _as_targets(targets, model.classes)
    n = len(X)

    if isinstance(model, BinaryLR):
        p1 = sigmoid(X @ model.w + model.beta)
        g = (p1 - T[:, 1]) / n
        return {"w": X.T @ g + 2 * l2_lambda * model.w, "beta": np.asarray([g.sum()])}

    if isinstance(model, SoftmaxLR):
        P = softmax(X @ model.W.T + model.betas)
        G = (P - T) / n
        return {"W": G.T @ X + 2 * l2_lambda * model.W, "betas": G.sum(axis=0)}

    if isinstance(model, OvRLR):
        Z = X @ model.W.T + model.betas
        S = np.maximum(sigmoid(Z), OvRLR._CLAMP)
        P = S / S.sum(axis=1, keepdims=True)
        G = (1.0 - S) * (P - T) / n
        return {"W": G.T @ X + 2 * l2_lambda * model.W, "betas": G.sum(axis=0)}

    if isinstance(model, MLP):
        H = np.tanh(X @ model.W1.T + model.b1)
        P = softmax(H @ model.W2.T + model.b2)
        G2 = (P - T) / n
        GH = G2 @ model.W2
        G1 = GH * (1.0 - H**2)
        return {
            "W1": G1.T @ X + 2 * l2_lambda * model.W1,
            "b1": G1.sum(axis=0),
            "W2": G2.T @ H + 2 * l2_lambda * model.W2,
            "b2": G2.sum(axis=0),
        }

    if isinstance(model, KernelLR):
        R = model.representers
        K = rbf_kernel(X, R, model.gamma)
        P = softmax(K @ model.alphas.T + model.betas)
        G = (P - T) / n
        M = (G @ model.alphas) * K  # per (sample, representer) weight
        col = M.sum(axis=0)
        gR = -2.0 * model.gamma * (R * col[:, None] - M.T @ X)
        return {
            "alphas": G.T @ K + 2 * l2_lambda * model.alphas,
            "betas": G.sum(axis=0),
            "representers": gR,
        }

    raise TypeError(f"{type(model).__name__} is not a logistic-family model")


def _grad_inf_norm(grads: dict[str, np.ndarray]) -> float:
    return max(float(np.max(np.abs(g))) if g.size else 0.0 for g in grads.values())


def minimize_loss(model, X: np.ndarray, targets, cfg: OptimizerConfig):
    """Minimize the regularized cross-entropy starting from ``model``.

    Full batch (cfg.batch_size == 0): momentum descent with rollback and a
    halved learning rate whenever the loss increases, mild growth otherwise.
    Minibatch: momentum SGD over seeded shuffles, returning the parameters
    with the best full-batch loss seen.  Deterministic given cfg.seed.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = _as_targets(targets, model.classes)
    if cfg.method == "lbfgs":
        return _minimize_lbfgs(model, X, T, cfg)
    if cfg.batch_size and cfg.batch_size < len(X):
        return _minimize_sgd(model, X, T, cfg)
    return _minimize_full(model, X, T, cfg)


def _pack(params: dict[str, np.ndarray]) -> tuple[np.ndarray, list]:
    layout = [(k, v.shape, v.size) for k, v in params.items()]
    flat = np.concatenate([params[k].ravel() for k, _, _ in layout])
    return flat, layout


def _unpack(theta: np.ndarray, layout: list) -> dict[str, np.ndarray]:
    out, pos = {}, 0
    for k, shape, size in layout:
        out[k] = theta[pos : pos + size].reshape(shape)
        pos += size
    return out


def _minimize_lbfgs(model, X, T, cfg: OptimizerConfig):
    """Quasi-Newton solve; the engine of choice for the well-conditioned
    convex fits where momentum descent converges too slowly."""
    from scipy.optimize import minimize as scipy_minimize

    theta0, layout = _pack(_params(model))

    def objective(theta):
        m = _with_params(model, _unpack(theta, layout))
        loss = cross_entropy_loss(m, X, T, cfg.l2_lambda)
        grads = loss_gradient(m, X, T, cfg.l2_lambda)
        return loss, _pack(grads)[0]

    res = scipy_minimize(
        objective,
        theta0,
        jac=True,
        method="L-BFGS-B",
        options={
            "maxiter": cfg.max_epochs,
            "ftol": 1e-18,
            "gtol": cfg.tolerance,
            "maxcor": 30,
        },
    )
    final = _with_params(model, _unpack(res.x, layout))
    return final, LossReport(float(res.fun), int(res.nit), bool(res.success))


def _minimize_full(model, X, T, cfg: OptimizerConfig):
    params = {k: v.copy() for k, v in _params(model).items()}
    vel = {k: np.zeros_like(v) for k, v in params.items()}
    lr = cfg.learning_rate
    current = _with_params(model, params)
    best_loss = cross_entropy_loss(current, X, T, cfg.l2_lambda)
    best = params
    converged = False
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        grads = loss_gradient(current, X, T, cfg.l2_lambda)
        if _grad_inf_norm(grads) < cfg.tolerance:
            converged = True
            break
        params = {k: params[k] + cfg.momentum * vel[k] - lr * grads[k] for k in params}
        vel = {k: cfg.momentum * vel[k] - lr * grads[k] for k in vel}
        current = _with_params(model, params)
        loss = cross_entropy_loss(current, X, T, cfg.l2_lambda)
        if loss > best_loss:
            # geometric backoff: revert to the best point and damp the step
            lr *= 0.5
            params = {k: v.copy() for k, v in best.items()}
            vel = {k: np.zeros_like(v) for k, v in vel.items()}
            current = _with_params(model, params)
            if lr < 1e-16:
                break
        else:
            best_loss = loss
            best = params
            lr *= 1.02
    final = _with_params(model, best)
    return final, LossReport(cross_entropy_loss(final, X, T, cfg.l2_lambda), epoch, converged)


def _minimize_sgd(model, X, T, cfg: OptimizerConfig):
    gen = rng(cfg.seed)
    params = {k: v.copy() for k, v in _params(model).items()}
    vel = {k: np.zeros_like(v) for k, v in params.items()}
    n = len(X)
    best = params
    current = _with_params(model, params)
    best_loss = cross_entropy_loss(current, X, T, cfg.l2_lambda)
    converged = False
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        lr = cfg.learning_rate / (1.0 + 0.002 * epoch)
        order = gen.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads = loss_gradient(current, X[idx], T[idx], cfg.l2_lambda)
            params = {k: params[k] + cfg.momentum * vel[k] - lr * grads[k] for k in params}
            vel = {k: cfg.momentum * vel[k] - lr * grads[k] for k in vel}
            current = _with_params(model, params)
        loss = cross_entropy_loss(current, X, T, cfg.l2_lambda)
        if loss < best_loss:
            best_loss = loss
            best = {k: v.copy() for k, v in params.items()}
        full_grad = loss_gradient(current, X, T, cfg.l2_lambda)
        if _grad_inf_norm(full_grad) < cfg.tolerance:
            converged = True
            break
    final = _with_params(model, best)
    return final, LossReport(best_loss, epoch, converged)


# ---------------------------------------------------------------------------
# Model fitting entry points
# ---------------------------------------------------------------------------


def _init_model(kind: str, d: int, classes: int, cfg: OptimizerConfig, *, hidden=20, s=None, gamma=1.0, space=None):
    gen = rng(cfg.seed)
    if kind == "binary_lr":
        return BinaryLR(np.zeros(d), 0.0)
    if kind == "softmax":
        return SoftmaxLR(np.zeros((classes, d)), np.zeros(classes))
    if kind == "ovr":
        return OvRLR(np.zeros((classes, d)), np.zeros(classes))
    if kind == "mlp":
        scale = 1.0 / math.sqrt(d)
        return MLP(
            gen.normal(0, scale, size=(hidden, d)),
            np.zeros(hidden),
            gen.normal(0, 1.0 / math.sqrt(hidden), size=(classes, hidden)),
            np.zeros(classes),
        )
    if kind == "klr":
        if s is None:
            raise ValueError("klr needs a representer count s")
        if space is None:
            raise ValueError("klr needs a feature space to place representers")
        R = space.uniform(s, gen)
        return KernelLR(np.zeros((classes, s)), np.zeros(classes), R, gamma)
    raise ValueError(f"unknown logistic-family kind {kind!r}")


def fit_from_samples(kind: str, X: np.ndarray, targets, classes: int, cfg: OptimizerConfig, **kw):
    """Fit a logistic-family model to (query, target) samples.

    ``targets`` may be hard labels or probability vectors.  One-vs-rest with
    hard labels trains the c binary separators independently, which is what
    the model class means; every other path minimizes the joint loss.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.asarray(targets)
    if kind == "ovr" and T.ndim == 1:
        return _fit_ovr_hard(X, T.astype(int), classes, cfg)
    init = kw.pop("init", None)
    model = init if init is not None else _init_model(kind, X.shape[1], classes, cfg, **kw)
    return minimize_loss(model, X, T, cfg)


def _fit_ovr_hard(X, y, classes: int, cfg: OptimizerConfig):
    W = np.zeros((classes, X.shape[1]))
    betas = np.zeros(classes)
    loss_sum, epochs, all_conv = 0.0, 0, True
    for j in range(classes):
        binary, rep = minimize_loss(
            BinaryLR(np.zeros(X.shape[1]), 0.0), X, (y == j).astype(int), cfg
        )
        W[j] = binary.w
        betas[j] = binary.beta
        loss_sum += rep.final_loss
        epochs = max(epochs, rep.epochs_run)
        all_conv &= rep.converged
    model = OvRLR(W, betas)
    return model, LossReport(loss_sum / classes, epochs, all_conv)


def fit_logistic_family(kind: str, data: Dataset, cfg: OptimizerConfig, **kw):
    """Train a target model of the given kind on a dataset's train split."""
    y = data.train_y
    present = np.unique(y)
    if len(present) < 2:
        raise ValueError("training data must contain at least 2 classes")
    if kind == "binary_lr" and data.classes != 2:
        raise ValueError("binary_lr requires a 2-class dataset")
    if kind == "klr":
        kw.setdefault("s", min(20, len(y)))
        gen = rng(cfg.seed + 1)
        pick = gen.choice(len(y), size=kw["s"], replace=False)
        kw.setdefault("space", data.space)
        model = _init_model("klr", data.space.d, data.classes, cfg, **kw)
        model = KernelLR(model.alphas, model.betas, data.train_X[pick], model.gamma)
        return minimize_loss(model, data.train_X, one_hot(y, data.classes), cfg)
    return fit_from_samples(kind, data.train_X, y, data.classes, cfg, **kw)


# ---------------------------------------------------------------------------
# SVM training
# ---------------------------------------------------------------------------


def fit_svm(kernel, data: Dataset, cfg: OptimizerConfig) -> SVM:
    if data.classes != 2:
        raise ValueError("SVM training requires binary data")
    return fit_svm_samples(kernel, data.train_X, data.train_y, cfg)


def fit_svm_samples(kernel, X: np.ndarray, y: np.ndarray, cfg: OptimizerConfig) -> SVM:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if set(np.unique(y)) - {0, 1}:
        raise ValueError("SVM labels must be 0/1")
    ypm = 2.0 * y - 1.0
    if isinstance(kernel, Linear):
        return _fit_linear_svm(X, ypm, cfg)
    return _fit_dual_svm(kernel, X, ypm, cfg)


def _fit_linear_svm(X, ypm, cfg: OptimizerConfig) -> SVM:
    # hinge loss mean + lam * ||w||^2, full-batch subgradient with 1/t decay
    n, d = X.shape
    lam = max(cfg.l2_lambda, 1e-9)
    w = np.zeros(d)
    beta = 0.0
    lr0 = cfg.learning_rate
    for t in range(1, max(cfg.max_epochs, 200) + 1):
        margins = ypm * (X @ w + beta)
        active = margins < 1.0
        gw = 2 * lam * w - (ypm[active, None] * X[active]).sum(axis=0) / n
        gb = -ypm[active].sum() / n
        lr = lr0 / (1.0 + 0.01 * t)
        w -= lr * gw
        beta -= lr * gb
    return SVM(Linear(), beta, w=w)


def _fit_dual_svm(kernel, X, ypm, cfg: OptimizerConfig, max_passes: int = 40) -> SVM:
    """SMO-style pairwise coordinate ascent on the dual problem with box
    constraint C = 1 / (2 n lambda); the equality constraint is preserved by
    every two-variable update."""
    n = len(X)
    lam = max(cfg.l2_lambda, 1e-9)
    C = 1.0 / (2.0 * n * lam)
    if isinstance(kernel, RBF):
        K = rbf_kernel(X, X, kernel.gamma)
    elif isinstance(kernel, Poly):
        K = (X @ X.T + 1.0) ** kernel.degree
    else:
        K = X @ X.T
    alpha = np.zeros(n)
    beta = 0.0
    gen = rng(cfg.seed)
    tol = 1e-4
    passes = 0
    while passes < max_passes:
        changed = 0
        for i in range(n):
            Ei = float((alpha * ypm) @ K[i]) + beta - ypm[i]
            if (ypm[i] * Ei < -tol and alpha[i] < C) or (ypm[i] * Ei > tol and alpha[i] > 0):
                j = int(gen.integers(0, n - 1))
                if j >= i:
                    j += 1
                Ej = float((alpha * ypm) @ K[j]) + beta - ypm[j]
                ai_old, aj_old = alpha[i], alpha[j]
                if ypm[i] != ypm[j]:
                    L, H = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
                else:
                    L, H = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
                if L >= H:
                    continue
                eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
                if eta >= 0:
                    continue
                aj = aj_old - ypm[j] * (Ei - Ej) / eta
                aj = min(max(aj, L), H)
                if abs(aj - aj_old) < 1e-7:
                    continue
                ai = ai_old + ypm[i] * ypm[j] * (aj_old - aj)
                alpha[i], alpha[j] = ai, aj
                b1 = beta - Ei - ypm[i] * (ai - ai_old) * K[i, i] - ypm[j] * (aj - aj_old) * K[i, j]
                b2 = beta - Ej - ypm[i] * (ai - ai_old) * K[i, j] - ypm[j] * (aj - aj_old) * K[j, j]
                if 0 < ai < C:
                    beta = b1
                elif 0 < aj < C:
                    beta = b2
                else:
                    beta = 0.5 * (b1 + b2)
                changed += 1
        passes = passes + 1 if changed == 0 else 0
        passes = min(passes, max_passes)
        if changed == 0:
            break
    keep = alpha > 1e-10
    signed = alpha[keep] * ypm[keep]
    if not keep.any():
        signed = np.zeros(1)
        sv = X[:1]
    else:
        sv = X[keep]
    return SVM(kernel, beta, dual_alphas=signed, support_vectors=sv)


# ---------------------------------------------------------------------------
# Decision tree induction
# ---------------------------------------------------------------------------


def wilson_lower_bound(successes: int, n: int, z: float = 1.96) -> float:
    """Lower bound of the Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0
    phat = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = phat + z2 / (2 * n)
    spread = z * math.sqrt(phat * (1 - phat) / n + z2 / (4 * n * n))
    return max(0.0, (center - spread) / denom)


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float((p * p).sum())


def _majority(y: np.ndarray, classes: int) -> tuple[int, float]:
    counts = np.bincount(y, minlength=classes)
    label = int(np.argmax(counts))
    return label, wilson_lower_bound(int(counts[label]), len(y))


def fit_tree(data: Dataset, max_depth: int = 8, min_leaf: int = 1) -> DecisionTree:
    """Greedy Gini induction over the train split.

    Continuous features get binary threshold splits at midpoints between
    consecutive observed values; categorical features get full k-ary splits.
    Every node (internal ones included) stores its majority label and the
    Wilson lower bound of the majority proportion.
    """
    if data.n == 0:
        raise ValueError("cannot fit a tree on empty data")
    X, y = data.train_X, data.train_y
    root = _grow(X, y, data.space, data.classes, depth=0, max_depth=max_depth, min_leaf=min_leaf)
    return DecisionTree(root, data.classes)


def _grow(X, y, space, classes, depth, max_depth, min_leaf):
    label, conf = _majority(y, classes)
    if depth >= max_depth or len(np.unique(y)) == 1 or len(y) < 2 * min_leaf:
        return Leaf(label, conf)
    best = None  # (impurity, feature, split, routes)
    base_counts = np.bincount(y, minlength=classes)
    for i, kind in enumerate(space.dims):
        col = X[:, i]
        if isinstance(kind, Continuous):
            order = np.argsort(col)
            vals = col[order]
            uniq = np.unique(vals)
            if len(uniq) < 2:
                continue
            for t in (uniq[:-1] + uniq[1:]) / 2.0:
                left = col <= t
                nl = int(left.sum())
                if nl < min_leaf or len(y) - nl < min_leaf:
                    continue
                cl = np.bincount(y[left], minlength=classes)
                score = (nl * _gini(cl) + (len(y) - nl) * _gini(base_counts - cl)) / len(y)
                if best is None or score < best[0]:
                    best = (score, i, ThresholdSplit(float(t)), (~left).astype(int))
        else:
            vals = col.astype(int)
            if len(np.unique(vals)) < 2:
                continue
            parts = [vals == v for v in range(kind.arity)]
            if any(p.sum() < min_leaf for p in parts if p.any()):
                pass  # empty categories are allowed; tiny ones are not
            sizes = np.asarray([p.sum() for p in parts])
            if np.any((sizes > 0) & (sizes < min_leaf)):
                continue
            score = sum(
                p.sum() * _gini(np.bincount(y[p], minlength=classes)) for p in parts if p.any()
            ) / len(y)
            if best is None or score < best[0]:
                best = (score, i, KArySplit(kind.arity), vals)
    # zero-gain splits are allowed (they can enable useful deeper splits,
    # e.g. on XOR-structured data); termination comes from the depth cap and
    # the shrinking sample/value sets
    if best is None or best[0] > _gini(base_counts) + 1e-12:
        return Leaf(label, conf)
    _, feature, split, routes = best
    children = []
    for child_i in range(split.n_children):
        mask = routes == child_i
        if mask.any():
            children.append(
                _grow(X[mask], y[mask], space, classes, depth + 1, max_depth, min_leaf)
            )
        else:
            children.append(Leaf(label, conf))  # unseen category inherits the parent stats
    return Internal(feature, split, tuple(children), label, conf)
