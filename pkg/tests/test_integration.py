"""End-to-end runs on the bundled splicelike data (desk-scale smoke).

splicelike is a re-split binarization of the UCI splice-junction table
(see data/README.md); these tests assert sanity and direction, never the
benchmark paper-trail numbers, which belong to the data-gated acceptance
criteria.
"""

from pathlib import Path

import numpy as np
import pytest

from perfadapt.adapt import adapt, auxiliary_output_matrix
from perfadapt.auxiliary import train_tree
from perfadapt.dataset import load_svmlight
from perfadapt.harness import select_c, train_plain
from perfadapt.measures import MeasureSpec, evaluate

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="module")
def splicelike():
    train = load_svmlight(DATA_DIR / "splicelike.train")
    test = load_svmlight(DATA_DIR / "splicelike.test")
    dim = max(train.dimension, test.dimension)
    return train.with_dimension(dim), test.with_dimension(dim)


def test_shapes(splicelike):
    train, test = splicelike
    assert train.n == 1000
    assert test.n == 2171
    assert train.dimension == 61  # 60 positions + constant column
    assert train.pos_count >= 1 and train.neg_count >= 1


def test_plain_training_beats_chance_by_a_wide_margin(splicelike):
    train, test = splicelike
    spec = MeasureSpec.from_name("err")
    model = train_plain(train, spec, C=0.25)
    assert model.stats.converged
    train_acc = evaluate(spec, train.labels, model.decision_scores(train))
    test_acc = evaluate(spec, test.labels, model.decision_scores(test))
    assert train_acc >= 0.80
    assert test_acc >= 0.75


def test_tree_memorizes_training_set(splicelike):
    train, _ = splicelike
    tree = train_tree(train, max_depth=12, min_leaf_size=5, seed=0)
    acc = float(np.mean(tree.outputs(train) == train.labels))
    assert acc >= 0.95


def test_adaptation_improves_tree_auc(splicelike):
    train, test = splicelike
    spec = MeasureSpec.from_name("auc")
    tree = train_tree(train, max_depth=12, min_leaf_size=5, seed=0)
    outputs = auxiliary_output_matrix(train, [tree])
    model = adapt(train, [tree], spec, C=1.0, B=1.0, aux_outputs=outputs)
    raw_test = tree.outputs(test).astype(np.float64)
    adapted = evaluate(spec, test.labels,
                       model.decision_scores(test, aux_outputs=raw_test[:, None]))
    raw = evaluate(spec, test.labels, raw_test)
    assert adapted > raw


def test_small_cv_grid_selects_reasonable_c(splicelike):
    train, test = splicelike
    spec = MeasureSpec.from_name("auc")
    grid = [2.0**-6, 2.0**-2, 2.0**2]
    best_c, rows = select_c(train, spec, grid, folds=3, seed=0, jobs=3)
    assert best_c in grid
    assert len(rows) == 3
    model = train_plain(train, spec, best_c)
    assert evaluate(spec, test.labels, model.decision_scores(test)) >= 0.80
