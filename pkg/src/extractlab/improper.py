"""Improper extraction: attack a simple target with a richer surrogate.

A wide one-hidden-layer perceptron can approximate any of the targets here,
so an attacker ignorant of the target's class could always extract one.  The
point of this module is to quantify what that genericity costs: against a
softmax target, the perceptron surrogate needs a far larger query budget and
still lands at measurably worse agreement and probability error than the
matched-class extraction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import FeatureSpace
from .eqsolve import BudgetSpec, default_extraction_config, extract_by_loss_min, param_count
from .models import MLP
from .training import OptimizerConfig

__all__ = ["ImproperResult", "improper_extract"]


@dataclass(frozen=True)
class ImproperResult:
    queries_used: int
    surrogate_params: int
    target_params: int

    @property
    def param_ratio(self) -> float:
        return self.surrogate_params / self.target_params


def improper_extract(
    oracle,
    space: FeatureSpace,
    classes: int,
    hidden_nodes: int,
    budget: BudgetSpec,
    cfg: OptimizerConfig | None = None,
    seed: int = 0,
    tag: str = "improper",
):
    """Extract a probability oracle with a perceptron surrogate.

    ``budget`` counts queries against the *target's* unknown-parameter count,
    so alpha means the same thing as in proper extraction.  Returns
    (MLP, ImproperResult).
    """
    if hidden_nodes < 1:
        raise ValueError("the surrogate needs at least one hidden node")
    if cfg is None:
        cfg = default_extraction_config("mlp", seed)
    model, _, eqs = extract_by_loss_min(
        "mlp",
        oracle,
        space,
        budget,
        cfg,
        classes=classes,
        hidden=hidden_nodes,
        seed=seed,
        tag=tag,
    )
    surrogate_params = param_count("mlp", space.d, classes, hidden=hidden_nodes)
    return model, ImproperResult(len(eqs.X), surrogate_params, budget.k_unknowns)
