"""Most-violated-constraint search for each measure, plus an exhaustive oracle.

Constraints live on a multivariate representation: one candidate labeling
(or pairwise ordering assignment, for AUC) of the whole training set at a
time.  The polynomial searches exploit that the discriminant decomposes
over examples; the brute-force twin enumerates the admissible set and is
the ground truth the fast paths are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import CapacityError, MeasureUndefinedError, ShapeError
from .measures import (
    ContingencyTable,
    MeasureKind,
    MeasureSpec,
    contingency,
    loss as measure_loss,
)
from .sparse import SparseVector, from_dense

# Normalized pairwise AUC map: each of the p*q ordered pairs carries loss
# 100/(p*q) when swapped, and the pair feature is (x_i - x_j)/(p*q).  A pair
# profits from swapping exactly when its score gap s_i - s_j is below half
# the 100-unit per-pair loss gain.
AUC_SWAP_MARGIN = 50.0


@dataclass(frozen=True, eq=False)
class AucAssignment:
    """Pairwise swapped/not-swapped witness, stored per example.

    ``pos_counts[k]`` is the number of swapped pairs involving the k-th
    positive (in dataset order); ``neg_counts`` likewise for negatives.
    Loss and feature delta are linear in these counts, so they are a
    sufficient witness for recomputation.
    """

    pos_counts: np.ndarray
    neg_counts: np.ndarray

    @property
    def total_swapped(self):
        return int(self.pos_counts.sum())

    @classmethod
    def from_matrix(cls, matrix):
        matrix = np.asarray(matrix, dtype=bool)
        return cls(
            pos_counts=matrix.sum(axis=1).astype(np.int64),
            neg_counts=matrix.sum(axis=0).astype(np.int64),
        )


@dataclass(eq=False)
class ConstraintRecord:
    """One cutting-plane constraint: witness, its loss, and feature delta."""

    measure: MeasureSpec
    loss: float
    delta: np.ndarray  # dense Psi(x, y) - Psi(x, y'), size = data dimension
    witness: object  # label vector, or AucAssignment for AUC
    objective: float  # Delta(y, y') + w . Psi(x, y') at construction time
    zero_streak: int = field(default=0, compare=False)

    def violation(self, w):
        """loss - w . delta; compared against xi + epsilon in the solver."""
        w = np.asarray(w)
        return self.loss - float(np.dot(w[: self.delta.shape[0]], self.delta))

    @property
    def feature_delta(self):
        return from_dense(self.delta)

    def recompute(self, data):
        """(loss, delta) recomputed from the witness; used by self-checks."""
        if self.measure.kind is MeasureKind.AUC:
            return _auc_from_counts(data, self.witness)
        witness = np.asarray(self.witness)
        ct = contingency(data.labels, witness)
        lo = measure_loss(self.measure, ct)
        delta = data.weighted_feature_sum((data.labels - witness).astype(np.float64))
        return lo, delta


def _class_split(data, require_both=True):
    pos = np.flatnonzero(data.labels == 1)
    neg = np.flatnonzero(data.labels == -1)
    if require_both and (pos.size == 0 or neg.size == 0):
        raise MeasureUndefinedError("need at least one positive and one negative example")
    return pos, neg


def _sorted_desc(positions, scores):
    # stable sort on -score keeps ascending example index among ties
    return positions[np.argsort(-scores[positions], kind="stable")]


def _measure_code(kind):
    return {
        MeasureKind.ERROR_RATE: kernels.MEASURE_ERR,
        MeasureKind.F1: kernels.MEASURE_F1,
        MeasureKind.PRBEP: kernels.MEASURE_PRBEP,
    }[kind]


def most_violated_contingency(w, data, spec):
    """argmax over admissible labelings of loss + w . Psi for err/F1/PRBEP.

    Scores are sorted within each class; prefix sums turn the search into
    an O(p*q) grid scan over (a, b) = (# positives labeled +1, # negatives
    labeled +1).  Ties break to the first cell in row-major order.
    """
    if spec.kind is MeasureKind.AUC:
        return most_violated_auc(w, data)
    pos, neg = _class_split(data, require_both=spec.kind is not MeasureKind.ERROR_RATE)
    scores = data.scores(w)
    pos_sorted = _sorted_desc(pos, scores)
    neg_sorted = _sorted_desc(neg, scores)
    sp = np.concatenate([[0.0], np.cumsum(scores[pos_sorted])])
    sn = np.concatenate([[0.0], np.cumsum(scores[neg_sorted])])
    a, b, objective = kernels.best_contingency_cell(sp, sn, _measure_code(spec.kind))
    witness = np.full(data.n, -1, dtype=np.int64)
    witness[pos_sorted[:a]] = 1
    witness[neg_sorted[:b]] = 1
    ct = ContingencyTable(tp=a, fn=pos.size - a, fp=b, tn=neg.size - b)
    lo = measure_loss(spec, ct)
    delta = data.weighted_feature_sum((data.labels - witness).astype(np.float64))
    return ConstraintRecord(
        measure=spec, loss=lo, delta=delta, witness=witness, objective=float(objective)
    )


def _auc_from_counts(data, assignment):
    pos, neg = _class_split(data)
    pq = pos.size * neg.size
    coef = np.zeros(data.n)
    coef[pos] = 2.0 * assignment.pos_counts / pq
    coef[neg] = -2.0 * assignment.neg_counts / pq
    lo = 100.0 * assignment.total_swapped / pq
    return lo, data.weighted_feature_sum(coef)


def _truth_discriminant_auc(scores, pos, neg):
    # w . Psi for the all-correctly-ordered assignment
    pq = pos.size * neg.size
    return (neg.size * scores[pos].sum() - pos.size * scores[neg].sum()) / pq


def most_violated_auc(w, data):
    """Most violated pairwise ordering constraint, O(n log n).

    Each positive/negative pair is independently swapped exactly when
    s_i - s_j < AUC_SWAP_MARGIN (strict; at equality the pair stays).  The
    counts come from one sorted pass: positives keyed at s_i - 25 and
    negatives at s_j + 25, so a swapped pair is a strict key inversion.
    """
    pos, neg = _class_split(data)
    scores = data.scores(w)
    half = 0.5 * AUC_SWAP_MARGIN
    pos_keys = scores[pos] - half
    neg_keys = scores[neg] + half
    neg_sorted = np.sort(neg_keys)
    pos_sorted = np.sort(pos_keys)
    pos_counts = neg.size - np.searchsorted(neg_sorted, pos_keys, side="right")
    neg_counts = np.searchsorted(pos_sorted, neg_keys, side="left")
    assignment = AucAssignment(
        pos_counts=pos_counts.astype(np.int64), neg_counts=neg_counts.astype(np.int64)
    )
    lo, delta = _auc_from_counts(data, assignment)
    base = _truth_discriminant_auc(scores, pos, neg)
    objective = lo + base - float(np.dot(w[: delta.shape[0]], delta))
    return ConstraintRecord(
        measure=MeasureSpec(MeasureKind.AUC),
        loss=lo,
        delta=delta,
        witness=assignment,
        objective=objective,
    )


def most_violated_auc_pairwise(w, data):
    """O(p*q) per-pair twin of :func:`most_violated_auc` (cross-check path)."""
    pos, neg = _class_split(data)
    scores = data.scores(w)
    gap = scores[pos][:, None] - scores[neg][None, :]
    matrix = gap < AUC_SWAP_MARGIN
    assignment = AucAssignment.from_matrix(matrix)
    lo, delta = _auc_from_counts(data, assignment)
    base = _truth_discriminant_auc(scores, pos, neg)
    objective = lo + base - float(np.dot(w[: delta.shape[0]], delta))
    return ConstraintRecord(
        measure=MeasureSpec(MeasureKind.AUC),
        loss=lo,
        delta=delta,
        witness=assignment,
        objective=objective,
    )


def most_violated(w, data, spec):
    """Dispatch to the right search for the measure."""
    if spec.kind is MeasureKind.AUC:
        return most_violated_auc(w, data)
    return most_violated_contingency(w, data, spec)


def brute_force_most_violated(w, data, spec):
    """Exhaustive argmax over the admissible set; the verification oracle.

    Bounded to n <= 16 labelings (2^n candidates) and p*q <= 16 pairs for
    AUC.  Ties break to the first candidate in lexicographic enumeration
    order (-1 before +1; pair bitmasks ascending).  The enumeration is
    vectorized but complete: every admissible candidate is scored.
    """
    pos, neg = _class_split(data, require_both=spec.kind is not MeasureKind.ERROR_RATE)
    scores = data.scores(w)
    if spec.kind is MeasureKind.AUC:
        return _brute_force_auc(w, data, scores, pos, neg)
    n = data.n
    if n > 16:
        raise CapacityError(f"brute force limited to n <= 16, got {n}")
    # rows enumerate {-1,+1}^n in lexicographic order (-1 first, last
    # position fastest), i.e. binary counting with the MSB at position 0
    bits = (np.arange(1 << n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    rows = (2 * bits - 1).astype(np.int64)
    truth_pos = data.labels == 1
    tp = np.sum(rows[:, truth_pos] == 1, axis=1)
    fp = np.sum(rows[:, ~truth_pos] == 1, axis=1)
    p, q = pos.size, neg.size
    fn = p - tp
    if spec.kind is MeasureKind.ERROR_RATE:
        losses = 100.0 * (fp + fn) / n
        admissible = np.ones(rows.shape[0], dtype=bool)
    elif spec.kind is MeasureKind.F1:
        losses = 100.0 * (1.0 - 2.0 * tp / (2.0 * tp + fp + fn))
        admissible = np.ones(rows.shape[0], dtype=bool)
    else:
        losses = 100.0 * (1.0 - tp / p)
        admissible = (tp + fp) == p
    objectives = np.where(admissible, losses + rows @ scores, -np.inf)
    best = int(np.argmax(objectives))  # first max = first in lex order
    witness = rows[best]
    ct = contingency(data.labels, witness)
    lo = measure_loss(spec, ct)
    delta = data.weighted_feature_sum((data.labels - witness).astype(np.float64))
    return ConstraintRecord(
        measure=spec, loss=lo, delta=delta, witness=witness, objective=float(objectives[best])
    )


def _brute_force_auc(w, data, scores, pos, neg):
    pq = pos.size * neg.size
    if pq > 16:
        raise CapacityError(f"brute force limited to p*q <= 16 pairs, got {pq}")
    gap = (scores[pos][:, None] - scores[neg][None, :]).ravel()
    # masks enumerate all pair subsets; bit j of the mask flags pair j
    bits = ((np.arange(1 << pq)[:, None] >> np.arange(pq)) & 1).astype(bool)
    objectives = (bits @ (100.0 - 2.0 * gap) + gap.sum()) / pq
    best = int(np.argmax(objectives))  # first max = lowest mask
    matrix = bits[best].reshape(pos.size, neg.size)
    assignment = AucAssignment.from_matrix(matrix)
    lo, delta = _auc_from_counts(data, assignment)
    return ConstraintRecord(
        measure=MeasureSpec(MeasureKind.AUC),
        loss=lo,
        delta=delta,
        witness=assignment,
        objective=float(objectives[best]),
    )


def truth_discriminant(w, data, spec):
    """w . Psi(x, y) for the true labeling, in the measure's representation."""
    scores = data.scores(w)
    if spec.kind is MeasureKind.AUC:
        pos, neg = _class_split(data)
        return _truth_discriminant_auc(scores, pos, neg)
    return float(np.dot(data.labels, scores))


def prediction_loss(w, data, spec):
    """Loss of w's own (admissible) argmax prediction on the 0-100 scale."""
    scores = data.scores(w)
    labels = data.labels
    if spec.kind is MeasureKind.AUC:
        pos, neg = _class_split(data)
        gap = scores[pos][:, None] - scores[neg][None, :]
        swapped = int(np.sum(gap < 0.0))
        return 100.0 * swapped / (pos.size * neg.size)
    if spec.kind is MeasureKind.PRBEP:
        pos, _ = _class_split(data)
        order = np.argsort(-scores, kind="stable")
        predicted = np.full(data.n, -1, dtype=np.int64)
        predicted[order[: pos.size]] = 1
    else:
        predicted = np.where(scores >= 0, 1, -1)
    return measure_loss(spec, contingency(labels, predicted))
