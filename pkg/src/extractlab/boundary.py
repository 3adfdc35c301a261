"""Extraction attacks that consume class labels only.

Against linear binary targets, line searches locate points arbitrarily close
to the decision boundary and the hyperplane is solved from them (recovered up
to a positive scale).  Polynomial-kernel targets reduce to the same attack in
the explicit kernel feature space.  Everything else retrains a surrogate on
labeled queries: uniformly sampled, boundary-bisected, or chosen adaptively
where the current surrogate is least certain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import FeatureSpace, rng
from .models import SVM, BinaryLR, poly_feature_map
from .training import OptimizerConfig, fit_from_samples, fit_svm_samples

__all__ = [
    "RetrainConfig",
    "lowd_meek",
    "lowd_meek_poly",
    "PhiSpaceModel",
    "retrain",
    "extract_and_test",
    "BoundarySearchError",
]


class BoundarySearchError(RuntimeError):
    """Opposite-label points could not be found (degenerate target)."""


_PROBE_CAP = 1000


def _find_both_classes(oracle, space, gen, tag):
    """Random probing until one positive and one negative point are seen."""
    pos = neg = None
    probes = []
    for _ in range(_PROBE_CAP):
        x = space.uniform(1, gen)[0]
        label = oracle.query(x, tag=tag).label
        probes.append((x, label))
        if label == 1 and pos is None:
            pos = x
        elif label == 0 and neg is None:
            neg = x
        if pos is not None and neg is not None:
            return pos, neg, probes
    raise BoundarySearchError(f"no opposite labels within {_PROBE_CAP} probes")


def _bisect_boundary(oracle, pos, neg, eps, tag):
    """Shrink the segment [neg, pos] until shorter than eps; the midpoint is
    then within eps of the decision boundary."""
    pos = np.array(pos, dtype=float)
    neg = np.array(neg, dtype=float)
    while np.linalg.norm(pos - neg) > eps:
        mid = 0.5 * (pos + neg)
        if oracle.query(mid, tag=tag).label == 1:
            pos = mid
        else:
            neg = mid
    return 0.5 * (pos + neg)


def _hyperplane_from_points(points: np.ndarray):
    """Nullspace vector of [points | 1]: the homogeneous hyperplane through
    them.  Returns (w, beta) with ||w|| = 1, or None if degenerate."""
    A = np.column_stack([points, np.ones(len(points))])
    _, svals, Vt = np.linalg.svd(A)
    theta = Vt[-1]
    w, beta = theta[:-1], theta[-1]
    norm = np.linalg.norm(w)
    if norm < 1e-12 or (len(svals) > 1 and svals[-2] < 1e-9 * svals[0]):
        return None
    return w / norm, float(beta / norm)


def _collect_boundary_points(oracle, space, gen, eps, needed, pos_pool, neg_pool, tag):
    """Bisect opposite-label segments to within eps of the boundary.

    Every segment starts from a fresh uniform probe so consecutive boundary
    points are distinct and spread out; the probe also refreshes the pools."""
    points = []
    while len(points) < needed:
        x = space.uniform(1, gen)[0]
        label = oracle.query(x, tag=tag).label
        (pos_pool if label == 1 else neg_pool).append(x)
        if label == 1:
            other = neg_pool[int(gen.integers(0, len(neg_pool)))]
            points.append(_bisect_boundary(oracle, x, other, eps, tag))
        else:
            other = pos_pool[int(gen.integers(0, len(pos_pool)))]
            points.append(_bisect_boundary(oracle, other, x, eps, tag))
    return points


def lowd_meek(
    oracle,
    space: FeatureSpace,
    eps: float = 1e-6,
    seed: int = 0,
    tag: str = "lowd_meek",
) -> BinaryLR:
    """Recover a binary linear classifier's hyperplane from labels alone.

    Collects boundary points by bisecting segments between opposite-label
    probes, then solves for the hyperplane up to positive scale; the sign is
    fixed so a known positive probe stays positive.
    """
    if any(not space.is_continuous(i) for i in range(space.d)):
        raise ValueError("the boundary attack expects continuous features")
    gen = rng(seed)
    pos, _, probes = _find_both_classes(oracle, space, gen, tag)
    pos_pool = [x for x, lab in probes if lab == 1]
    neg_pool = [x for x, lab in probes if lab == 0]
    points = _collect_boundary_points(
        oracle, space, gen, eps, space.d + 2, pos_pool, neg_pool, tag
    )
    solved = _hyperplane_from_points(np.asarray(points))
    for _ in range(5):
        if solved is not None:
            break
        points += _collect_boundary_points(oracle, space, gen, eps, 2, pos_pool, neg_pool, tag)
        solved = _hyperplane_from_points(np.asarray(points))
    if solved is None:
        raise BoundarySearchError("boundary points are affinely degenerate")
    w, beta = solved
    if float(w @ pos + beta) < 0:
        w, beta = -w, -beta
    return BinaryLR(w, beta)


@dataclass(frozen=True)
class PhiSpaceModel:
    """Linear separator in the explicit polynomial-kernel feature space."""

    degree: int
    w: np.ndarray  # weights over the non-constant kernel features
    beta: float

    def decision_value(self, x: np.ndarray) -> np.ndarray:
        Phi = np.atleast_2d(poly_feature_map(np.atleast_2d(x), self.degree))[:, 1:]
        return Phi @ self.w + self.beta

    def predict_class(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        labels = (self.decision_value(x) >= 0).astype(int)
        return int(labels[0]) if x.ndim == 1 else labels


def _null_basis(points: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the numeric nullspace of [points | 1].

    The threshold is generous: boundary points carry eps-level placement
    error, so genuinely vanishing directions show singular values well above
    machine precision.  Over-inclusion is harmless because a degenerate
    nullspace is disambiguated against observed labels afterwards."""
    A = np.column_stack([points, np.ones(len(points))])
    _, svals, Vt = np.linalg.svd(A)
    tol = 1e-4 * svals[0]
    null_dim = max(1, int(np.sum(svals < tol)) + (A.shape[1] - len(svals)))
    return Vt[-null_dim:]


def _pick_from_nullspace(basis: np.ndarray, Phi_labeled: np.ndarray, labels: np.ndarray):
    """Resolve a multi-dimensional nullspace with the labels seen so far.

    Every candidate separator vanishes on the boundary points; a small
    logistic fit over the nullspace coordinates of the labeled queries picks
    the combination that actually reproduces their signs.  Costs no queries.
    """
    if len(basis) == 1:
        return basis[0]
    from .training import OptimizerConfig as _Cfg, fit_from_samples as _fit

    Z = np.column_stack([Phi_labeled, np.ones(len(Phi_labeled))]) @ basis.T
    lr, _ = _fit(
        "binary_lr", Z, labels.astype(int), 2,
        _Cfg(method="lbfgs", l2_lambda=1e-8, max_epochs=2000),
    )
    theta = basis.T @ lr.w
    theta[-1] += lr.beta
    return theta


def lowd_meek_poly(
    oracle,
    space: FeatureSpace,
    degree: int,
    eps: float = 1e-6,
    seed: int = 0,
    max_phi_dim: int = 2000,
    tag: str = "lowd_meek",
) -> PhiSpaceModel:
    """Boundary attack against a polynomial-kernel target.

    Line searches run in input space; the separator is solved in the explicit
    feature space of the kernel (constant component folded into the
    threshold), recovering the boundary w.phi(x) + beta = 0 up to scale.
    Degenerate targets (e.g. an actually-linear boundary, whose boundary
    points span too little of the kernel space) are disambiguated against the
    labels already collected.
    """
    if any(not space.is_continuous(i) for i in range(space.d)):
        raise ValueError("the boundary attack expects continuous features")
    probe_dim = len(poly_feature_map(np.zeros(space.d), degree)) - 1
    if probe_dim > max_phi_dim:
        raise ValueError(f"kernel feature space has {probe_dim} dimensions > cap {max_phi_dim}")
    gen = rng(seed)
    seen_x: list[np.ndarray] = []
    seen_y: list[int] = []

    class _Recorder:
        """Keeps every labeled response so degeneracies cost no new queries."""

        space = oracle.space

        def query(self, x, tag=None):
            resp = oracle.query(x, tag=tag)
            seen_x.append(np.array(x, dtype=float))
            seen_y.append(resp.label)
            return resp

    rec = _Recorder()
    pos, _, probes = _find_both_classes(rec, space, gen, tag)
    pos_pool = [x for x, lab in probes if lab == 1]
    neg_pool = [x for x, lab in probes if lab == 0]
    points = _collect_boundary_points(
        rec, space, gen, eps, probe_dim + 2, pos_pool, neg_pool, tag
    )
    basis = _null_basis(poly_feature_map(np.asarray(points), degree)[:, 1:])
    theta = _pick_from_nullspace(
        basis, poly_feature_map(np.asarray(seen_x), degree)[:, 1:], np.asarray(seen_y)
    )
    w, beta = theta[:-1], float(theta[-1])
    norm = np.linalg.norm(w)
    if norm < 1e-12:
        raise BoundarySearchError("kernel-space boundary points are degenerate")
    model = PhiSpaceModel(degree, w / norm, beta / norm)
    if model.predict_class(pos) != 1:
        model = PhiSpaceModel(degree, -model.w, -model.beta)
    return model


# ---------------------------------------------------------------------------
# Retraining strategies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RetrainConfig:
    strategy: str  # "uniform" | "line_search" | "adaptive"
    budget: int
    surrogate_kind: str  # "binary_lr" | "softmax" | "ovr" | "mlp" | "svm_linear" | "svm_rbf"
    cfg: OptimizerConfig = OptimizerConfig()
    rounds: int = 5  # adaptive only
    pool_factor: int = 50  # adaptive candidate pool size per queried point
    surrogate_args: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.strategy not in ("uniform", "line_search", "adaptive"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.budget < 1:
            raise ValueError("budget must be positive")
        if self.strategy == "adaptive" and self.rounds < 2:
            raise ValueError("adaptive retraining needs at least 2 rounds")


def _fit_surrogate(rc: RetrainConfig, X, y, classes: int):
    args = dict(rc.surrogate_args)
    if rc.surrogate_kind == "svm_rbf":
        from .models import RBF

        return fit_svm_samples(RBF(args.get("gamma", 1.0)), X, y, rc.cfg)
    if rc.surrogate_kind == "svm_linear":
        from .models import Linear

        return fit_svm_samples(Linear(), X, y, rc.cfg)
    model, _ = fit_from_samples(rc.surrogate_kind, X, y, classes, rc.cfg, **args)
    return model


def _uncertainty(model, X: np.ndarray) -> np.ndarray:
    """Margin scores: small means the surrogate is least certain."""
    if isinstance(model, (SVM, PhiSpaceModel)):
        return np.abs(model.decision_value(X))
    P = np.atleast_2d(model.predict_proba(X))
    if P.shape[1] == 2:
        return np.abs(P[:, 1] - 0.5)
    part = np.partition(P, P.shape[1] - 2, axis=1)
    return part[:, -1] - part[:, -2]  # top-two probability gap


def retrain(
    oracle,
    space: FeatureSpace,
    rc: RetrainConfig,
    seed: int = 0,
    classes: int | None = None,
    tag: str = "retrain",
):
    """Label-only extraction by retraining a surrogate on queried samples.

    uniform      : rc.budget uniform queries, one fit.
    line_search  : opposite-label pairs bisected toward the boundary until
                   the budget is spent; every queried point becomes a
                   training sample.
    adaptive     : rc.rounds rounds; the first is uniform, later rounds spend
                   their share on the pool candidates with the smallest
                   surrogate margin.  Candidate scoring never queries the
                   oracle.
    """
    gen = rng(seed)
    m = rc.budget

    def ask(X):
        return np.asarray([oracle.query(x, tag=tag).label for x in np.atleast_2d(X)], dtype=int)

    if rc.strategy == "uniform":
        X = space.uniform(m, gen)
        y = ask(X)
        return _fit_surrogate(rc, X, y, classes or int(y.max()) + 1)

    if rc.strategy == "line_search":
        X_parts = [space.uniform(min(m, max(space.d + 1, m // 4)), gen)]
        y_parts = [ask(X_parts[0])]
        spent = len(y_parts[0])
        while spent < m:
            labels = np.concatenate(y_parts)
            points = np.vstack(X_parts)
            distinct = np.unique(labels)
            if len(distinct) < 2:
                X_new = space.uniform(1, gen)
                X_parts.append(X_new)
                y_parts.append(ask(X_new))
                spent += 1
                continue
            a, b = distinct[:2]
            pa = points[labels == a][int(gen.integers(0, (labels == a).sum()))]
            pb = points[labels == b][int(gen.integers(0, (labels == b).sum()))]
            # one bisection step per query so the budget is respected exactly
            la = a
            lo, hi = np.array(pa), np.array(pb)
            while spent < m and np.linalg.norm(hi - lo) > 1e-6:
                mid = 0.5 * (lo + hi)
                lab = ask(mid[None, :])[0]
                X_parts.append(mid[None, :])
                y_parts.append(np.asarray([lab]))
                spent += 1
                if lab == la:
                    lo = mid
                else:
                    hi = mid
        X = np.vstack(X_parts)
        y = np.concatenate(y_parts)
        return _fit_surrogate(rc, X, y, classes or int(y.max()) + 1)

    # adaptive
    r = rc.rounds
    share = m // r
    if share < 1:
        raise ValueError("budget smaller than one adaptive round")
    first = share + m % r
    X = space.uniform(first, gen)
    y = ask(X)
    c = classes or int(y.max()) + 1
    model = _fit_surrogate(rc, X, y, c)
    for _ in range(r - 1):
        pool = space.uniform(rc.pool_factor * share, gen)
        scores = _uncertainty(model, pool)
        pick = np.argsort(scores, kind="stable")[:share]
        X_new = pool[pick]
        y_new = ask(X_new)
        X = np.vstack([X, X_new])
        y = np.concatenate([y, y_new])
        c = classes or int(y.max()) + 1
        model = _fit_surrogate(rc, X, y, c)
    return model


# ---------------------------------------------------------------------------
# Extract-and-test over candidate hyper-parameters
# ---------------------------------------------------------------------------


def extract_and_test(
    oracle,
    space: FeatureSpace,
    candidates: list,
    probe_set_size: int = 500,
    sample_size: int = 200,
    seed: int = 0,
    classes: int | None = None,
    tag: str = "extract_and_test",
):
    """Try every candidate surrogate on one shared oracle sample.

    ``candidates`` is a list of (name, fitter) pairs where
    ``fitter(X, y, classes) -> model``.  The oracle is queried exactly once
    for a shared extraction sample and once for a held-out probe set; every
    candidate trains on the former and is scored by disagreement with the
    probe labels.  Returns (best_model, scoreboard) with the scoreboard as
    [(name, disagreement)] in candidate order.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    gen = rng(seed)
    X = space.uniform(sample_size, gen)
    y = np.asarray([oracle.query(x, tag=tag).label for x in X], dtype=int)
    X_probe = space.uniform(probe_set_size, gen)
    y_probe = np.asarray([oracle.query(x, tag=tag).label for x in X_probe], dtype=int)
    c = classes or int(max(y.max(), y_probe.max())) + 1
    scoreboard = []
    best = None
    for name, fitter in candidates:
        model = fitter(X, y, c)
        disagreement = float(np.mean(model.predict_class(X_probe) != y_probe))
        scoreboard.append((name, disagreement))
        if best is None or disagreement < best[0]:
            best = (disagreement, model)
    return best[1], scoreboard
