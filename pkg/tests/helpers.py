"""Shared builders for the test suite."""

import numpy as np

from perfadapt.dataset import Dataset, Example
from perfadapt.sparse import SparseVector


def sv(pairs):
    return SparseVector.from_pairs(pairs)


def make_dataset(rows, dimension=None):
    """rows: list of (label, {index: value})."""
    examples = [
        Example(sv(sorted(feats.items())), label) for label, feats in rows
    ]
    return Dataset(examples, dimension=dimension)


def random_dataset(rng, n, dim=4, density=0.8, ensure_both=True, scale=1.0):
    """``scale`` blows feature values up so that discriminant scores (and
    score gaps) straddle the 0-100 loss scale, not just hug zero."""
    labels = rng.choice([-1, 1], size=n)
    if ensure_both and n >= 2 and abs(int(labels.sum())) == n:
        labels[rng.integers(n)] *= -1
    examples = []
    for i in range(n):
        nnz = max(1, int(round(density * dim)))
        idx = np.sort(rng.choice(dim, size=nnz, replace=False)).astype(np.int64)
        examples.append(
            Example(SparseVector(idx, scale * rng.normal(size=nnz)), int(labels[i]))
        )
    return Dataset(examples, dimension=dim)


def skewed_dataset(rng, p, q, dim=4, density=0.9, scale=1.0):
    """Dataset with exactly p positives then q negatives, shuffled."""
    labels = np.array([1] * p + [-1] * q)
    rng.shuffle(labels)
    examples = []
    for lab in labels:
        nnz = max(1, int(round(density * dim)))
        idx = np.sort(rng.choice(dim, size=nnz, replace=False)).astype(np.int64)
        examples.append(
            Example(SparseVector(idx, scale * rng.normal(size=nnz)), int(lab))
        )
    return Dataset(examples, dimension=dim)


def random_w(rng, dim, lo=-2.0, hi=2.0):
    return rng.uniform(lo, hi, size=dim)
