"""Black-box auxiliary classifiers: built-in learners and external predictions.

Every auxiliary exposes the same surface: deterministic -1/+1 outputs for a
dataset, a name, and (for the built-ins) per-example prediction so trained
ensembles stay deployable.  Externally produced predictions are ingested
positionally and are valid only for the dataset they align with.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import AlignmentError, LabelingError, ModelFormatError, TrainingError


class AuxiliaryClassifier:
    """Interface: ``outputs(dataset)`` -> array of -1/+1, plus identity."""

    name = "auxiliary"
    deployable = True

    def outputs(self, data):
        raise NotImplementedError

    def output_one(self, features):
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# decision tree

_LEAF = -1  # feature index marking a leaf node


@dataclass
class _Node:
    feature: int
    threshold: float
    left: object
    right: object
    label: int = 0


def _gini(pos, total):
    if total == 0:
        return 0.0
    fr = pos / total
    return 1.0 - fr * fr - (1.0 - fr) * (1.0 - fr)


class TreeModel(AuxiliaryClassifier):
    """Binary CART with Gini splits and majority-label leaves."""

    def __init__(self, root, max_depth, min_leaf_size, seed, dimension):
        self.root = root
        self.max_depth = max_depth
        self.min_leaf_size = min_leaf_size
        self.seed = seed
        self.dimension = dimension

    @property
    def name(self):
        return f"tree(depth={self.max_depth},min_leaf={self.min_leaf_size},seed={self.seed})"

    def output_one(self, features):
        node = self.root
        while node.feature != _LEAF:
            value = features.get(node.feature)
            node = node.left if value <= node.threshold else node.right
        return node.label

    def outputs(self, data):
        return np.array([self.output_one(ex.features) for ex in data.examples], dtype=np.int64)

    def depth(self):
        def walk(node):
            if node.feature == _LEAF:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def _node_dict(self, node):
        if node.feature == _LEAF:
            return {"label": node.label}
        return {
            "feature": node.feature,
            "threshold": node.threshold,
            "left": self._node_dict(node.left),
            "right": self._node_dict(node.right),
        }

    def to_json(self):
        return {
            "kind": "tree",
            "max_depth": self.max_depth,
            "min_leaf_size": self.min_leaf_size,
            "seed": self.seed,
            "dimension": self.dimension,
            "root": self._node_dict(self.root),
        }

    @classmethod
    def from_json(cls, payload):
        def build(d):
            if "label" in d:
                return _Node(_LEAF, 0.0, None, None, int(d["label"]))
            return _Node(
                int(d["feature"]), float(d["threshold"]), build(d["left"]), build(d["right"])
            )

        return cls(
            build(payload["root"]),
            payload["max_depth"],
            payload["min_leaf_size"],
            payload["seed"],
            payload["dimension"],
        )


def _majority_label(pos, total):
    # ties go to +1, matching the global sign(0) = +1 convention
    return 1 if 2 * pos >= total else -1


def _best_split_for_column(values, labels, min_leaf_size):
    """Best (gain, threshold) on one feature column, or None.

    Depends only on the multiset of (value, label) pairs, never on example
    order, so tree training is order-invariant.
    """
    order = np.argsort(values, kind="stable")
    v = values[order]
    y = labels[order]
    total = v.size
    total_pos = int(np.sum(y == 1))
    parent = _gini(total_pos, total)
    boundaries = np.flatnonzero(np.diff(v) != 0) + 1  # split between distinct values
    if boundaries.size == 0:
        return None
    pos_prefix = np.cumsum(y == 1)
    best = None
    for cut in boundaries:
        left, right = cut, total - cut
        if left < min_leaf_size or right < min_leaf_size:
            continue
        lp = int(pos_prefix[cut - 1])
        gain = parent - (left * _gini(lp, left) + right * _gini(total_pos - lp, right)) / total
        if best is None or gain > best[0] + 1e-12:
            threshold = 0.5 * (v[cut - 1] + v[cut])
            best = (gain, threshold)
    return best


def train_tree(data, max_depth=12, min_leaf_size=5, seed=0):
    """Greedy top-down Gini tree; the seed only permutes the feature scan
    order, breaking ties between equal-gain splits deterministically."""
    if data.n == 0:
        raise TrainingError("cannot train a tree on an empty dataset")
    x = sp.csc_matrix(data.matrix)
    labels = data.labels
    rng = np.random.default_rng(seed)
    feature_order = rng.permutation(data.dimension)

    def grow(indices, depth):
        y = labels[indices]
        pos = int(np.sum(y == 1))
        total = indices.size
        if (
            depth >= max_depth
            or pos == 0
            or pos == total
            or total < 2 * min_leaf_size
        ):
            return _Node(_LEAF, 0.0, None, None, _majority_label(pos, total))
        best = None
        sub = x[indices]
        for f in feature_order:
            col = np.asarray(sub[:, f].todense()).ravel()
            found = _best_split_for_column(col, y, min_leaf_size)
            if found is None:
                continue
            gain, threshold = found
            if best is None or gain > best[0] + 1e-12:
                best = (gain, int(f), threshold)
        if best is None:
            # no admissible boundary; impurity-based stopping is handled above
            return _Node(_LEAF, 0.0, None, None, _majority_label(pos, total))
        _, f, threshold = best
        col = np.asarray(sub[:, f].todense()).ravel()
        left_mask = col <= threshold
        left = grow(indices[left_mask], depth + 1)
        right = grow(indices[~left_mask], depth + 1)
        return _Node(f, threshold, left, right)

    root = grow(np.arange(data.n), 0)
    return TreeModel(root, max_depth, min_leaf_size, seed, data.dimension)


# ---------------------------------------------------------------------------
# linear subgradient classifier

class LinearSgdModel(AuxiliaryClassifier):
    """sign(w . x + b) from hinge-loss stochastic subgradient descent."""

    def __init__(self, w, b, lam, epochs, seed):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = float(b)
        self.lam = lam
        self.epochs = epochs
        self.seed = seed

    @property
    def name(self):
        return f"sgd(lambda={self.lam:g},epochs={self.epochs},seed={self.seed})"

    def output_one(self, features):
        return 1 if features.dot(self.w) + self.b >= 0 else -1

    def outputs(self, data):
        w = self.w
        if data.dimension > w.shape[0]:
            w = np.pad(w, (0, data.dimension - w.shape[0]))
        scores = data.scores(w) + self.b
        return np.where(scores >= 0, 1, -1).astype(np.int64)

    def to_json(self):
        return {
            "kind": "sgd",
            "w": self.w.tolist(),
            "b": self.b,
            "lambda": self.lam,
            "epochs": self.epochs,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, payload):
        return cls(
            np.array(payload["w"], dtype=np.float64),
            payload["b"],
            payload["lambda"],
            payload["epochs"],
            payload["seed"],
        )


def train_linear_sgd(data, lam=1e-4, epochs=20, seed=0):
    """Hinge-loss SGD with step 1/(lam * t); one shuffled pass per epoch.

    The bias is updated on margin violations but not regularized.
    """
    if data.n < 2:
        raise TrainingError(f"need at least 2 examples, got {data.n}")
    if data.pos_count == 0 or data.neg_count == 0:
        raise TrainingError("need both classes to train the linear classifier")
    rng = np.random.default_rng(seed)
    w = np.zeros(data.dimension)
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(data.n):
            t += 1
            eta = 1.0 / (lam * t)
            ex = data.examples[i]
            margin = ex.label * (ex.features.dot(w) + b)
            w *= max(0.0, 1.0 - eta * lam)
            if margin < 1.0:
                w[ex.features.indices] += eta * ex.label * ex.features.values
                b += eta * ex.label
    if not np.all(np.isfinite(w)):
        raise TrainingError("diverged: non-finite weights")
    return LinearSgdModel(w, b, lam, epochs, seed)


# ---------------------------------------------------------------------------
# externally produced predictions

class ExternalPredictions(AuxiliaryClassifier):
    """Signed predictions aligned by position to one specific dataset."""

    deployable = False

    def __init__(self, values, source_path):
        self.values = np.asarray(values, dtype=np.int64)
        self.source_path = str(source_path)
        if self.values.size and not np.all(np.abs(self.values) == 1):
            raise LabelingError("external predictions must map to -1 or +1")

    @property
    def name(self):
        return f"pred({self.source_path})"

    def outputs(self, data):
        if data.n != self.values.size:
            raise AlignmentError(
                f"{self.values.size} predictions for a dataset of {data.n} examples"
            )
        return self.values.copy()

    def to_json(self):
        return {"kind": "external", "path": self.source_path}


class ExternalReference(AuxiliaryClassifier):
    """Deserialized stand-in for an external auxiliary.

    Carries only the train-time source path; outputs must be supplied
    explicitly (a matching predictions file) whenever the model is
    evaluated on new data.
    """

    deployable = False

    def __init__(self, path):
        self.source_path = str(path)

    @property
    def name(self):
        return f"pred({self.source_path})"

    def outputs(self, data):
        raise AlignmentError(
            "external auxiliary needs a predictions file aligned to this dataset"
        )

    def to_json(self):
        return {"kind": "external", "path": self.source_path}


def load_external_predictions(path, expected_n):
    """One signed numeric token per example; sign gives the prediction."""
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if len(tokens) != expected_n:
        raise AlignmentError(f"{path}: expected {expected_n} predictions, found {len(tokens)}")
    values = np.empty(len(tokens), dtype=np.int64)
    for k, tok in enumerate(tokens):
        try:
            value = float(tok)
        except ValueError:
            raise AlignmentError(f"{path}: unparseable token {tok!r}") from None
        if value == 0:
            raise LabelingError(f"{path}: zero prediction at position {k + 1} has no sign")
        values[k] = 1 if value > 0 else -1
    return ExternalPredictions(values, path)


# ---------------------------------------------------------------------------
# model (de)serialization

def auxiliary_from_json(payload):
    kind = payload.get("kind")
    if kind == "tree":
        return TreeModel.from_json(payload)
    if kind == "sgd":
        return LinearSgdModel.from_json(payload)
    if kind == "external":
        return ExternalReference(payload["path"])
    raise ModelFormatError(f"unknown auxiliary kind {kind!r}")


def save_auxiliary(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json(), fh, indent=1)


def load_auxiliary(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return auxiliary_from_json(json.load(fh))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
