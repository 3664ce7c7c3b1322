"""Performance measures: losses on the 0-100 scale and test-time metrics."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, MeasureUndefinedError, ShapeError


class MeasureKind(enum.Enum):
    ERROR_RATE = "err"
    F1 = "f1"
    PRBEP = "prbep"
    AUC = "auc"


CONTINGENCY_KINDS = (MeasureKind.ERROR_RATE, MeasureKind.F1, MeasureKind.PRBEP)


@dataclass(frozen=True)
class ContingencyTable:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self):
        return self.tp + self.fp + self.fn + self.tn

    @property
    def pos(self):
        return self.tp + self.fn

    @property
    def neg(self):
        return self.fp + self.tn


def contingency(truth, predicted):
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    if truth.shape != predicted.shape or truth.ndim != 1 or truth.size == 0:
        raise ShapeError("truth and predictions must be equal-length 1-d vectors")
    tp = int(np.sum((truth == 1) & (predicted == 1)))
    fn = int(np.sum((truth == 1) & (predicted == -1)))
    fp = int(np.sum((truth == -1) & (predicted == 1)))
    tn = int(np.sum((truth == -1) & (predicted == -1)))
    return ContingencyTable(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class MeasureSpec:
    """Which measure is optimized/evaluated, with its admissibility rule.

    PRBEP admits only label vectors predicting exactly p positives; the
    other contingency measures admit all of {-1, +1}^n.  AUC operates on
    the pairwise swapped/not-swapped representation.
    """

    kind: MeasureKind

    @classmethod
    def from_name(cls, name):
        try:
            return cls(MeasureKind(name.strip().lower()))
        except ValueError:
            valid = ", ".join(k.value for k in MeasureKind)
            raise ValueError(f"unknown measure {name!r} (expected one of: {valid})") from None

    @property
    def name(self):
        return self.kind.value

    @property
    def is_contingency(self):
        return self.kind in CONTINGENCY_KINDS

    def loss(self, ct):
        """Loss of a contingency table on the 0-100 scale."""
        return loss(self, ct)


def loss(spec, ct):
    kind = spec.kind
    if kind is MeasureKind.ERROR_RATE:
        return 100.0 * (ct.fp + ct.fn) / ct.n
    if kind is MeasureKind.F1:
        return 100.0 * (1.0 - 2.0 * ct.tp / (2.0 * ct.tp + ct.fp + ct.fn))
    if kind is MeasureKind.PRBEP:
        p = ct.pos
        if ct.tp + ct.fp != p:
            raise AdmissibilityError(
                f"PRBEP needs exactly {p} predicted positives, got {ct.tp + ct.fp}"
            )
        return 100.0 * (1.0 - ct.tp / p)
    raise AdmissibilityError("AUC loss is pairwise; use auc_loss")


def auc_loss(truth, swapped):
    """100 * (# swapped positive/negative pairs) / (p * q).

    ``swapped`` is either a boolean p x q matrix (rows = positives in
    dataset order, columns = negatives in dataset order) or anything with
    ``total_swapped``.
    """
    truth = np.asarray(truth)
    p = int(np.sum(truth == 1))
    q = int(np.sum(truth == -1))
    if p == 0 or q == 0:
        raise MeasureUndefinedError("AUC needs at least one positive and one negative")
    total = getattr(swapped, "total_swapped", None)
    if total is None:
        mat = np.asarray(swapped, dtype=bool)
        if mat.shape != (p, q):
            raise ShapeError(f"pair assignment must be {p} x {q}, got {mat.shape}")
        total = int(mat.sum())
    return 100.0 * total / (p * q)


def _check_scores(spec, truth, scores):
    truth = np.asarray(truth)
    scores = np.asarray(scores, dtype=np.float64)
    if truth.shape != scores.shape or truth.ndim != 1 or truth.size == 0:
        raise ShapeError("truth and scores must be equal-length 1-d vectors")
    p = int(np.sum(truth == 1))
    q = truth.size - p
    if spec.kind is not MeasureKind.ERROR_RATE and (p == 0 or q == 0):
        raise MeasureUndefinedError(f"{spec.name} needs both classes present")
    return truth, scores, p, q


def threshold_predictions(scores):
    """sign(score) with sign(0) = +1."""
    scores = np.asarray(scores)
    return np.where(scores >= 0, 1, -1)


def top_p_predictions(scores, p):
    """+1 for the p largest scores, ties broken by lower index first."""
    scores = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    predicted = np.full(scores.size, -1, dtype=np.int64)
    predicted[order[:p]] = 1
    return predicted


def auc_from_scores(truth, scores):
    """(# correctly ordered pairs + 0.5 * ties) / (p * q) via average ranks."""
    truth = np.asarray(truth)
    scores = np.asarray(scores, dtype=np.float64)
    p = int(np.sum(truth == 1))
    q = truth.size - p
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(truth.size)
    sorted_scores = scores[order]
    # average rank within tie groups
    boundaries = np.flatnonzero(np.diff(sorted_scores) != 0) + 1
    starts = np.concatenate([[0], boundaries])
    stops = np.concatenate([boundaries, [truth.size]])
    for a, b in zip(starts, stops):
        ranks[order[a:b]] = 0.5 * (a + b - 1) + 1.0  # 1-based average rank
    u = float(np.sum(ranks[truth == 1])) - p * (p + 1) / 2.0
    return u / (p * q)


def evaluate(spec, truth, scores):
    """Test-time metric in [0, 1] from real-valued scores."""
    truth, scores, p, q = _check_scores(spec, truth, scores)
    kind = spec.kind
    if kind is MeasureKind.ERROR_RATE:
        # written so that evaluate == 1 - loss/100 holds bit-exactly
        ct = contingency(truth, threshold_predictions(scores))
        return 1.0 - loss(spec, ct) / 100.0
    if kind is MeasureKind.F1:
        ct = contingency(truth, threshold_predictions(scores))
        return 2.0 * ct.tp / (2.0 * ct.tp + ct.fp + ct.fn)
    if kind is MeasureKind.PRBEP:
        ct = contingency(truth, top_p_predictions(scores, p))
        return ct.tp / p
    return auc_from_scores(truth, scores)


def evaluate_all(truth, scores):
    """All four metrics (skipping ones undefined for single-class truth)."""
    out = {}
    for kind in MeasureKind:
        spec = MeasureSpec(kind)
        try:
            out[spec.name] = evaluate(spec, truth, scores)
        except MeasureUndefinedError:
            out[spec.name] = None
    return out
