"""Shared fixtures: a small mixed-feature tree used across the suite.

The tree splits on a continuous Size in [0, 100] and a 5-valued Color
(R=0, B=1, G=2, Y=3, O=4):

    root: Color in {R,B,G} -> size_a | {Y,O} -> leaf6
    size_a: Size <= 40 -> leaf1 | > 40 -> size_b
    size_b: Size <= 60 -> color_a | > 60 -> leaf5
    color_a: R -> leaf2 | {B,G} -> color_b
    color_b: B -> leaf3 | G -> leaf4

Every node carries a distinct (label, confidence) identity.
"""

import pytest

from extractlab.core import Categorical, Continuous, FeatureSpace
from extractlab.models import DecisionTree, Internal, Leaf, PartitionSplit, ThresholdSplit

R, B, G, Y, O = range(5)

LEAF1 = Leaf(0, 0.71)
LEAF2 = Leaf(1, 0.72)
LEAF3 = Leaf(0, 0.73)
LEAF4 = Leaf(1, 0.74)
LEAF5 = Leaf(0, 0.75)
LEAF6 = Leaf(1, 0.76)


def _build_tree() -> DecisionTree:
    color_b = Internal(1, PartitionSplit(frozenset({B}), frozenset({G})), (LEAF3, LEAF4), 0, 0.64)
    color_a = Internal(
        1, PartitionSplit(frozenset({R}), frozenset({B, G})), (LEAF2, color_b), 1, 0.63
    )
    size_b = Internal(0, ThresholdSplit(60.0), (color_a, LEAF5), 1, 0.62)
    size_a = Internal(0, ThresholdSplit(40.0), (LEAF1, size_b), 0, 0.61)
    root = Internal(
        1, PartitionSplit(frozenset({R, B, G}), frozenset({Y, O})), (size_a, LEAF6), 0, 0.60
    )
    return DecisionTree(root, n_classes=2)


@pytest.fixture
def toy_tree() -> DecisionTree:
    return _build_tree()


@pytest.fixture
def toy_space() -> FeatureSpace:
    return FeatureSpace((Continuous(0.0, 100.0), Categorical(5)))


@pytest.fixture
def unit_square() -> FeatureSpace:
    return FeatureSpace((Continuous(-1.0, 1.0), Continuous(-1.0, 1.0)))
