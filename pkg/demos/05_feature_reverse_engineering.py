"""Reverse engineering service-side feature extraction.

Services expand raw inputs before the model sees them: categories become
one-hot indicators, numeric values become quantile-bin indicators.  Both
leak through the API.  The key enabler is missing-feature zeroing: omitting
an input zeroes all of its expanded coordinates, so single-feature queries
yield equations with one unknown each, and an all-missing query reveals the
intercept outright.
"""

import numpy as np

from extractlab.core import Categorical, Continuous, FeatureSpace
from extractlab.featrev import (
    ComposedTarget,
    FeatureExtractor,
    OneHot,
    QuantileBin,
    reverse_engineer_linear,
)
from extractlab.models import BinaryLR
from extractlab.oracle import DisclosurePolicy, Oracle

# the service's hidden pipeline: one-hot a 3-way category, 4-bin a numeric
hidden_extractor = FeatureExtractor((OneHot(3), QuantileBin((-0.5, 0.0, 0.5))))
hidden_model = BinaryLR(np.array([0.8, -1.2, 0.4, 2.0, -1.0, 1.0, -2.5]), 0.2)
service = ComposedTarget(hidden_extractor, hidden_model)

input_space = FeatureSpace((Categorical(3), Continuous(-1.0, 1.0)))
oracle = Oracle(
    service, input_space, DisclosurePolicy(outputs="probs", allow_partial=True)
)

print("attacker view: 2 raw inputs, no knowledge of binning or weights\n")
extractor, model, spent = reverse_engineer_linear(oracle, input_space, classes=2, eps=1e-3)

print(f"recovered extractor, {spent} queries total "
      "(bin-search responses double as equations):")
for i, dim in enumerate(extractor.dims):
    print(f"  input {i}: {dim}")
print(f"\ntrue bin boundaries      {hidden_extractor.dims[1].boundaries}")
print(f"recovered bin boundaries {tuple(round(b, 4) for b in extractor.dims[1].boundaries)}")
print(f"\ntrue weights      {hidden_model.w}  intercept {hidden_model.beta}")
print(f"recovered weights {np.round(model.w, 6)}  intercept {model.beta:.6f}")

M = input_space.uniform(10_000, 1)
agree = np.mean(service.predict_class(M) == ComposedTarget(extractor, model).predict_class(M))
print(f"\nend-to-end agreement on 10k raw-space queries: {agree:.4%}")
