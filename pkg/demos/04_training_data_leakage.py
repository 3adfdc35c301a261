"""Training-data leakage through kernel logistic regression extraction.

A kernel logistic model carries actual training points inside its
parameters (the representer points of its kernel expansion).  Extracting
the model therefore extracts training data: starting from uniformly random
guesses, the fitted representer coordinates converge onto the true training
points.
"""

import numpy as np

from extractlab.core import r_unif, rng
from extractlab.eqsolve import (
    BudgetSpec,
    extract_klr_representers,
    param_count,
    representer_leakage,
)
from extractlab.harness import gen_synthetic
from extractlab.models import KernelLR
from extractlab.oracle import DisclosurePolicy, Oracle

data = gen_synthetic("blobs", 600, seed=0)
gen = rng(0)
picked = gen.choice(len(data.train_y), size=8, replace=False)
representers = data.train_X[picked]
target = KernelLR(gen.normal(0, 2.0, size=(3, 8)), np.zeros(3), representers, gamma=3.0)

k = param_count("klr", data.space.d, 3, s=8)
budget = BudgetSpec(25, k)
print(f"target: kernel regression with s=8 training points as representers")
print(f"unknowns k={k} (weights + intercepts + representer coordinates), "
      f"query budget m={budget.m}\n")

oracle = Oracle(target, data.space, DisclosurePolicy(outputs="probs"))
model, report, extracted = extract_klr_representers(
    oracle, data.space, s_assumed=8, gamma=3.0, budget=budget, classes=3, seed=0
)
print(f"extraction: {oracle.ledger.total} queries, final loss {report.final_loss:.4f}")
print(f"functional agreement: {1 - r_unif(target, model, data.space, seed=1):.4%}\n")

leak = representer_leakage(representers, extracted)
baseline = representer_leakage(representers, data.space.uniform(8, seed=99))
print("distance from each true training point to its nearest extracted representer:")
print(f"{'true point':>22} {'nearest extracted':>22} {'l1 dist':>9}")
for i, (j, dist) in enumerate(zip(leak.nearest_index, leak.nearest_l1)):
    print(f"{np.round(representers[i], 3)!s:>22} {np.round(extracted[j], 3)!s:>22} {dist:>9.4f}")
print(f"\nmean l1 distance: {leak.mean_l1:.4f}")
print(f"random-guess baseline: {baseline.mean_l1:.4f} "
      f"({baseline.mean_l1 / leak.mean_l1:.1f}x farther)")
