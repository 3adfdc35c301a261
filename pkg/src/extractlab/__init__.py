"""extractlab: a laboratory for model extraction attacks on prediction APIs.

Train target models, serve them behind a simulated prediction API with a
configurable disclosure policy, run extraction attacks against them, and
score the results by test-set / uniform disagreement and total-variation
error.
"""

from .core import (
    MISSING,
    Categorical,
    Continuous,
    Dataset,
    FeatureSpace,
    r_test,
    r_unif,
    rng,
    tv_distance,
    zero_one_distance,
)
from .models import (
    MLP,
    RBF,
    SVM,
    BinaryLR,
    DecisionTree,
    KernelLR,
    Linear,
    OvRLR,
    Poly,
    SoftmaxLR,
    load_model,
    save_model,
    sigmoid,
)
from .oracle import DisclosurePolicy, Oracle, OracleResponse, ReplayOracle, node_id
from .training import OptimizerConfig, fit_logistic_family, fit_svm, fit_tree

__version__ = "0.1.0"
