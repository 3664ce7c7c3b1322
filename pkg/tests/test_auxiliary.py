import numpy as np
import pytest

from helpers import make_dataset, random_dataset
from perfadapt.auxiliary import (
    load_auxiliary,
    load_external_predictions,
    save_auxiliary,
    train_linear_sgd,
    train_tree,
)
from perfadapt.errors import AlignmentError, LabelingError, ModelFormatError, TrainingError


def test_tree_pure_dataset_is_single_leaf():
    data = make_dataset([(1, {0: 1.0}), (1, {0: 2.0}), (1, {0: 3.0})])
    tree = train_tree(data, max_depth=4, min_leaf_size=1)
    assert tree.depth() == 0
    assert np.all(tree.outputs(data) == 1)


def test_tree_solves_xor_at_depth_two():
    data = make_dataset(
        [
            (1, {0: 0.0, 1: 0.0}),
            (-1, {0: 0.0, 1: 1.0}),
            (-1, {0: 1.0, 1: 0.0}),
            (1, {0: 1.0, 1: 1.0}),
        ]
    )
    tree = train_tree(data, max_depth=2, min_leaf_size=1)
    assert np.array_equal(tree.outputs(data), data.labels)
    assert tree.depth() <= 2


def test_tree_depth_and_leaf_bounds():
    rng = np.random.default_rng(0)
    data = random_dataset(rng, n=120, dim=6)
    tree = train_tree(data, max_depth=3, min_leaf_size=10)
    assert tree.depth() <= 3

    def leaf_counts(node, indices):
        if node.feature == -1:
            return [len(indices)]
        col = np.array([data.examples[i].features.get(node.feature) for i in indices])
        left = [i for i, v in zip(indices, col) if v <= node.threshold]
        right = [i for i, v in zip(indices, col) if v > node.threshold]
        return leaf_counts(node.left, left) + leaf_counts(node.right, right)

    assert min(leaf_counts(tree.root, list(range(data.n)))) >= 10


def test_tree_is_order_invariant():
    rng = np.random.default_rng(1)
    data = random_dataset(rng, n=40, dim=5)
    perm = rng.permutation(data.n)
    shuffled = data.subset(perm)
    t1 = train_tree(data, max_depth=4, min_leaf_size=2, seed=9)
    t2 = train_tree(shuffled, max_depth=4, min_leaf_size=2, seed=9)
    assert t1.to_json() == t2.to_json()


def test_tree_deterministic_and_pm_one():
    rng = np.random.default_rng(2)
    data = random_dataset(rng, n=50, dim=5)
    t1 = train_tree(data, max_depth=5, min_leaf_size=2, seed=3)
    t2 = train_tree(data, max_depth=5, min_leaf_size=2, seed=3)
    out1, out2 = t1.outputs(data), t2.outputs(data)
    assert np.array_equal(out1, out2)
    assert set(np.unique(out1)) <= {-1, 1}


def test_tree_rejects_empty_dataset():
    with pytest.raises(TrainingError):
        train_tree(make_dataset([]))


def test_sgd_separable_quickly():
    data = make_dataset([(1, {0: 1.0}), (-1, {0: -1.0})])
    model = train_linear_sgd(data, lam=0.1, epochs=5, seed=0)
    assert np.array_equal(model.outputs(data), data.labels)


def test_sgd_zero_features_predicts_majority():
    rows = [(1, {})] * 8 + [(-1, {})] * 2
    data = make_dataset(rows, dimension=1)
    model = train_linear_sgd(data, lam=0.1, epochs=10, seed=0)
    acc = float(np.mean(model.outputs(data) == data.labels))
    assert np.allclose(model.w, 0.0)
    assert acc == 0.8


def test_sgd_is_deterministic_given_seed():
    rng = np.random.default_rng(3)
    data = random_dataset(rng, n=40, dim=6)
    m1 = train_linear_sgd(data, lam=1e-3, epochs=7, seed=42)
    m2 = train_linear_sgd(data, lam=1e-3, epochs=7, seed=42)
    assert np.array_equal(m1.w, m2.w)
    assert m1.b == m2.b


def test_sgd_rejects_single_class():
    with pytest.raises(TrainingError):
        train_linear_sgd(make_dataset([(1, {0: 1.0}), (1, {0: 2.0})]))


def test_external_predictions_parsing(tmp_path):
    path = tmp_path / "preds.txt"
    path.write_text("1\n-1\n1\n")
    ext = load_external_predictions(path, expected_n=3)
    assert ext.values.tolist() == [1, -1, 1]


def test_external_predictions_sign_rule(tmp_path):
    path = tmp_path / "preds.txt"
    path.write_text("0.7 -2.3")
    ext = load_external_predictions(path, expected_n=2)
    assert ext.values.tolist() == [1, -1]


def test_external_predictions_count_mismatch(tmp_path):
    path = tmp_path / "preds.txt"
    path.write_text("1 -1 1 1")
    with pytest.raises(AlignmentError):
        load_external_predictions(path, expected_n=3)


def test_external_predictions_zero_is_error(tmp_path):
    path = tmp_path / "preds.txt"
    path.write_text("1 0 -1")
    with pytest.raises(LabelingError):
        load_external_predictions(path, expected_n=3)


def test_external_predictions_align_to_dataset(tmp_path):
    path = tmp_path / "preds.txt"
    path.write_text("1 -1")
    ext = load_external_predictions(path, expected_n=2)
    data = make_dataset([(1, {0: 1.0}), (-1, {0: 2.0}), (1, {0: 3.0})])
    with pytest.raises(AlignmentError):
        ext.outputs(data)


def test_auxiliary_json_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    data = random_dataset(rng, n=30, dim=4)
    for model in (
        train_tree(data, max_depth=3, min_leaf_size=2, seed=1),
        train_linear_sgd(data, lam=1e-2, epochs=5, seed=1),
    ):
        path = tmp_path / "aux.json"
        save_auxiliary(model, path)
        loaded = load_auxiliary(path)
        assert np.array_equal(loaded.outputs(data), model.outputs(data))


def test_load_auxiliary_rejects_garbage(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ModelFormatError):
        load_auxiliary(path)
    path.write_text('{"kind": "mystery"}')
    with pytest.raises(ModelFormatError):
        load_auxiliary(path)
