"""Labeled sparse datasets: parsing, serialization, and feature augmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import LabelingError, ParameterError, ParseError, ShapeError
from .sparse import SparseVector


@dataclass(frozen=True)
class Example:
    features: SparseVector
    label: int

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise LabelingError(f"label must be -1 or +1, got {self.label}")


class Dataset:
    """Immutable ordered collection of labeled sparse examples.

    ``dimension`` is at least 1 + the largest feature index present; it can
    be larger so that train/test files with different maxima share a space.
    """

    def __init__(self, examples, dimension=None):
        self.examples = tuple(examples)
        max_idx = max((ex.features.max_index for ex in self.examples), default=-1)
        if dimension is None:
            dimension = max_idx + 1
        elif dimension < max_idx + 1:
            raise ShapeError(f"dimension {dimension} below 1 + max index {max_idx}")
        self.dimension = int(dimension)
        self.labels = np.array([ex.label for ex in self.examples], dtype=np.int64)
        self._matrix = None

    def __len__(self):
        return len(self.examples)

    @property
    def n(self):
        return len(self.examples)

    @property
    def pos_count(self):
        return int(np.sum(self.labels == 1))

    @property
    def neg_count(self):
        return int(np.sum(self.labels == -1))

    @property
    def matrix(self):
        """CSR matrix view (n x dimension), built lazily and cached."""
        if self._matrix is None:
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            for i, ex in enumerate(self.examples):
                indptr[i + 1] = indptr[i] + ex.features.nnz
            indices = np.concatenate(
                [ex.features.indices for ex in self.examples]
            ) if self.n else np.empty(0, dtype=np.int64)
            values = np.concatenate(
                [ex.features.values for ex in self.examples]
            ) if self.n else np.empty(0)
            self._matrix = sp.csr_matrix(
                (values, indices, indptr), shape=(self.n, self.dimension)
            )
        return self._matrix

    def scores(self, w):
        """Per-example discriminant values x_i . w.

        ``w`` may be longer than the dimension (extra weights multiply
        features absent from every example and contribute nothing).
        """
        w = np.asarray(w, dtype=np.float64)
        if w.shape[0] < self.dimension:
            raise ShapeError(f"weight vector of size {w.shape[0]} < dimension {self.dimension}")
        if self.n == 0:
            return np.empty(0)
        return self.matrix @ w[: self.dimension]

    def weighted_feature_sum(self, coef):
        """sum_i coef[i] * x_i as a dense vector of size ``dimension``."""
        coef = np.asarray(coef, dtype=np.float64)
        if coef.shape[0] != self.n:
            raise ShapeError("coefficient vector length must equal n")
        return np.asarray(self.matrix.T @ coef).ravel()

    def subset(self, index_list):
        return Dataset([self.examples[i] for i in index_list], dimension=self.dimension)

    def with_dimension(self, dimension):
        return Dataset(self.examples, dimension=dimension)

    def serialize(self):
        """SVMlight text; 0-based internal indices become 1-based."""
        lines = []
        for ex in self.examples:
            parts = ["+1" if ex.label == 1 else "-1"]
            parts.extend(
                f"{i + 1}:{float(v)!r}" for i, v in zip(ex.features.indices, ex.features.values)
            )
            lines.append(" ".join(parts))
        return "\n".join(lines) + ("\n" if lines else "")


def _parse_label(token, lineno):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"unparseable label {token!r}", line=lineno) from None
    if value == 1.0:
        return 1
    if value == -1.0:
        return -1
    raise LabelingError(f"line {lineno}: label must be -1 or +1, got {token!r}")


def parse_svmlight(text):
    """Parse SVMlight-format text into a Dataset.

    Lines look like ``<label> <idx>:<val> ...`` with 1-based, strictly
    increasing indices.  ``#`` starts a comment; blank lines are skipped.
    """
    examples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label = _parse_label(tokens[0], lineno)
        idx = np.empty(len(tokens) - 1, dtype=np.int64)
        val = np.empty(len(tokens) - 1)
        prev = 0
        for k, tok in enumerate(tokens[1:]):
            try:
                i_str, v_str = tok.split(":", 1)
                file_index = int(i_str)
                value = float(v_str)
            except ValueError:
                raise ParseError(f"malformed feature {tok!r}", line=lineno) from None
            if file_index < 1:
                raise ParseError(f"feature index must be >= 1, got {file_index}", line=lineno)
            if file_index <= prev:
                raise ParseError(
                    f"feature indices must increase, got {file_index} after {prev}", line=lineno
                )
            if not math.isfinite(value):
                raise ParseError(f"non-finite feature value {v_str!r}", line=lineno)
            prev = file_index
            idx[k] = file_index - 1
            val[k] = value
        examples.append(Example(SparseVector(idx, val, validate=False), label))
    return Dataset(examples)


def load_svmlight(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_svmlight(fh.read())


def save_svmlight(dataset, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dataset.serialize())


def maxabs_scale_factors(dataset):
    """Per-feature max-abs factors from one dataset (zeros become 1)."""
    m = dataset.matrix
    factors = np.ones(dataset.dimension)
    if m.nnz:
        absmax = np.asarray(abs(m).max(axis=0).todense()).ravel()
        nonzero = absmax > 0
        factors[nonzero] = absmax[nonzero]
    return factors


def apply_scale(dataset, factors):
    factors = np.asarray(factors, dtype=np.float64)
    if factors.shape[0] < dataset.dimension:
        raise ShapeError("scale factors shorter than dimension")
    examples = [
        Example(
            SparseVector(
                ex.features.indices,
                ex.features.values / factors[ex.features.indices],
                validate=False,
            ),
            ex.label,
        )
        for ex in dataset.examples
    ]
    return Dataset(examples, dimension=dataset.dimension)


class AugmentedDataset(Dataset):
    """Dataset whose example vectors are [aux outputs / sqrt(B) ; original].

    Auxiliary outputs occupy indices [0, m); original features are shifted
    up by m.  Labels, order, and count are unchanged from ``base``.
    """

    def __init__(self, base, aux_outputs, B, examples):
        super().__init__(examples, dimension=aux_outputs.shape[1] + base.dimension)
        self.base = base
        self.aux_output_matrix = aux_outputs
        self.B = float(B)

    @property
    def num_auxiliaries(self):
        return int(self.aux_output_matrix.shape[1])


def augment(base, aux_outputs, B):
    """Prefix each example with scaled auxiliary outputs.

    ``aux_outputs`` is an n x m matrix with entries in {-1, +1}; entry j of
    the new vector is exactly aux_outputs[i, j] / sqrt(B).
    """
    if B <= 0:
        raise ParameterError(f"B must be positive, got {B}")
    aux = np.asarray(aux_outputs)
    if aux.ndim != 2:
        raise ShapeError("aux_outputs must be an n x m matrix")
    if aux.shape[0] != base.n:
        raise ShapeError(f"aux_outputs has {aux.shape[0]} rows for {base.n} examples")
    if aux.size and not np.all(np.abs(aux) == 1):
        raise LabelingError("auxiliary outputs must be -1 or +1")
    m = aux.shape[1]
    scale = 1.0 / math.sqrt(B)
    prefix_idx = np.arange(m, dtype=np.int64)
    examples = []
    for i, ex in enumerate(base.examples):
        indices = np.concatenate([prefix_idx, ex.features.indices + m])
        values = np.concatenate([aux[i].astype(np.float64) * scale, ex.features.values])
        examples.append(Example(SparseVector(indices, values, validate=False), ex.label))
    return AugmentedDataset(base, aux.astype(np.int64), B, examples)


def strip_features(dataset):
    """Same labels and order, but every feature vector empty.

    Used for the ensemble-only variant where original features are dropped
    and only auxiliary-output columns remain after augmentation.
    """
    empty = SparseVector(np.empty(0, dtype=np.int64), np.empty(0), validate=False)
    return Dataset([Example(empty, ex.label) for ex in dataset.examples], dimension=0)
