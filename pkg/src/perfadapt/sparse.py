"""Sparse vectors with strictly increasing indices."""

from __future__ import annotations

import numpy as np

from .errors import ParseError, ShapeError


class SparseVector:
    """Immutable sparse vector stored as parallel (index, value) arrays.

    Indices are strictly increasing non-negative integers, values are
    finite floats.  Stored zeros are allowed; dot products are identical
    with or without them.
    """

    __slots__ = ("indices", "values")

    def __init__(self, indices, values, validate=True):
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.float64)
        if validate:
            if idx.ndim != 1 or val.ndim != 1 or idx.shape != val.shape:
                raise ShapeError("indices and values must be 1-d and equally long")
            if idx.size:
                if idx[0] < 0:
                    raise ParseError("negative feature index")
                if np.any(np.diff(idx) <= 0):
                    raise ParseError("feature indices must be strictly increasing")
            if not np.all(np.isfinite(val)):
                raise ParseError("feature values must be finite")
        self.indices = idx
        self.values = val

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        if not pairs:
            return cls(np.empty(0, dtype=np.int64), np.empty(0))
        idx, val = zip(*pairs)
        return cls(np.array(idx, dtype=np.int64), np.array(val, dtype=np.float64))

    @property
    def pairs(self):
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def nnz(self):
        return int(self.indices.size)

    @property
    def max_index(self):
        return int(self.indices[-1]) if self.indices.size else -1

    def to_dense(self, dimension):
        if dimension < self.max_index + 1:
            raise ShapeError(f"dimension {dimension} too small for max index {self.max_index}")
        out = np.zeros(dimension)
        out[self.indices] = self.values
        return out

    def dot(self, other):
        """Dot product with another SparseVector or a dense array."""
        if isinstance(other, SparseVector):
            i = j = 0
            a_idx, a_val = self.indices, self.values
            b_idx, b_val = other.indices, other.values
            total = 0.0
            while i < a_idx.size and j < b_idx.size:
                if a_idx[i] == b_idx[j]:
                    total += a_val[i] * b_val[j]
                    i += 1
                    j += 1
                elif a_idx[i] < b_idx[j]:
                    i += 1
                else:
                    j += 1
            return total
        other = np.asarray(other)
        inside = self.indices < other.shape[0]
        return float(np.dot(self.values[inside], other[self.indices[inside]]))

    def get(self, index):
        pos = np.searchsorted(self.indices, index)
        if pos < self.indices.size and self.indices[pos] == index:
            return float(self.values[pos])
        return 0.0

    def shift(self, offset):
        """New vector with all indices moved up by ``offset``."""
        return SparseVector(self.indices + offset, self.values, validate=False)

    def __eq__(self, other):
        return (
            isinstance(other, SparseVector)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        inner = " ".join(f"{i}:{v:g}" for i, v in zip(self.indices, self.values))
        return f"SparseVector({inner})"


def from_dense(dense, tol=0.0):
    """SparseVector from a dense array, dropping entries with |v| <= tol."""
    dense = np.asarray(dense, dtype=np.float64)
    keep = np.flatnonzero(np.abs(dense) > tol)
    return SparseVector(keep.astype(np.int64), dense[keep], validate=False)
