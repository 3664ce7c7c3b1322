"""Adapt black-box auxiliary classifiers to a target performance measure.

Auxiliary -1/+1 outputs are prefixed to each example's features (scaled by
1/sqrt(B)), the structural solver trains one weight vector v over the
augmented space, and v unpacks into ensemble weights a = v[:m]/sqrt(B)
plus a linear correction w = v[m:] over the original features.  The
decision function is sum_j a_j f_j(x) + w . x.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .auxiliary import auxiliary_from_json
from .dataset import augment, strip_features
from .errors import LabelingError, ModelFormatError, ParameterError, ShapeError
from .measures import MeasureSpec
from .solver import Hyperparams, TrainStats, cutting_plane_train


def auxiliary_output_matrix(data, auxiliaries):
    """n x m matrix of auxiliary outputs, computed once and cached by callers."""
    if not auxiliaries:
        raise ParameterError("need at least one auxiliary classifier")
    cols = []
    for aux in auxiliaries:
        out = np.asarray(aux.outputs(data), dtype=np.int64)
        if out.shape != (data.n,):
            raise ShapeError(f"{aux.name}: expected {data.n} outputs, got {out.shape}")
        if out.size and not np.all(np.abs(out) == 1):
            raise LabelingError(f"{aux.name}: outputs must be -1 or +1")
        cols.append(out)
    return np.stack(cols, axis=1)


@dataclass
class AdaptedModel:
    """Ensemble weights over auxiliaries plus a linear correction term."""

    auxiliaries: list
    a: np.ndarray
    w: np.ndarray
    B: float
    measure: MeasureSpec
    stats: TrainStats
    xi: float = 0.0

    @property
    def num_auxiliaries(self):
        return len(self.auxiliaries)

    @property
    def deployable(self):
        return all(aux.deployable for aux in self.auxiliaries)

    @property
    def solver_vector(self):
        """v = [sqrt(B) * a ; w], the augmented-space solution."""
        return np.concatenate([np.sqrt(self.B) * self.a, self.w])

    def decision_scores(self, data, aux_outputs=None):
        """Decision values on a dataset.

        ``aux_outputs`` overrides auxiliary evaluation (required when any
        auxiliary is an external-predictions channel).
        """
        if aux_outputs is None:
            aux_outputs = auxiliary_output_matrix(data, self.auxiliaries)
        aux_outputs = np.asarray(aux_outputs, dtype=np.float64)
        if aux_outputs.shape != (data.n, self.a.shape[0]):
            raise ShapeError(
                f"auxiliary outputs {aux_outputs.shape} do not match "
                f"(n={data.n}, m={self.a.shape[0]})"
            )
        w = self.w
        if data.dimension > w.shape[0]:
            w = np.pad(w, (0, data.dimension - w.shape[0]))
        return aux_outputs @ self.a + data.scores(w)

    def to_json(self):
        return {
            "format": "perfadapt-adapted-model",
            "B": self.B,
            "a": self.a.tolist(),
            "w": self.w.tolist(),
            "measure": self.measure.name,
            "deployable": self.deployable,
            "auxiliaries": [aux.to_json() for aux in self.auxiliaries],
        }


def adapt(
    data,
    auxiliaries,
    spec,
    C,
    B=1.0,
    epsilon=0.1,
    max_iterations=5000,
    ensemble_only=False,
    trace=None,
    aux_outputs=None,
):
    """Train an adapted classifier optimizing ``spec`` on ``data``.

    ``ensemble_only`` drops the original feature columns so only the
    weighted auxiliary ensemble is learned (the no-correction baseline).
    """
    if B <= 0:
        raise ParameterError(f"B must be positive, got {B}")
    if aux_outputs is None:
        aux_outputs = auxiliary_output_matrix(data, auxiliaries)
    aux_outputs = np.asarray(aux_outputs)
    if aux_outputs.ndim != 2 or aux_outputs.shape[1] == 0:
        raise ParameterError("need at least one auxiliary output column")
    base = strip_features(data) if ensemble_only else data
    augmented = augment(base, aux_outputs, B)
    hp = Hyperparams(C=C, epsilon=epsilon, max_iterations=max_iterations)
    model = cutting_plane_train(augmented, spec, hp, trace=trace)
    m = aux_outputs.shape[1]
    v = model.w
    a = v[:m] / np.sqrt(B)
    w = v[m:] if not ensemble_only else np.zeros(data.dimension)
    return AdaptedModel(
        auxiliaries=list(auxiliaries),
        a=a,
        w=w,
        B=float(B),
        measure=spec,
        stats=model.stats,
        xi=model.xi,
    )


def predict_adapted(model, features, aux_values=None):
    """(decision, label) for one example; sign(0) = +1.

    ``aux_values`` supplies the per-auxiliary -1/+1 outputs when the model
    holds external auxiliaries that cannot predict on raw features.
    """
    if aux_values is None:
        aux_values = np.array([aux.output_one(features) for aux in model.auxiliaries])
    aux_values = np.asarray(aux_values, dtype=np.float64)
    decision = float(np.dot(model.a, aux_values) + features.dot(model.w))
    return decision, (1 if decision >= 0 else -1)


def delta_norm(model):
    """||w||^2: squared function-space distance between the adapted
    classifier and the weighted auxiliary ensemble (linear case)."""
    return float(np.dot(model.w, model.w))


def save_adapted(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json(), fh, indent=1)


def load_adapted(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != "perfadapt-adapted-model":
            raise ModelFormatError(f"{path}: not an adapted-model file")
        auxiliaries = [auxiliary_from_json(p) for p in payload["auxiliaries"]]
        return AdaptedModel(
            auxiliaries=auxiliaries,
            a=np.array(payload["a"], dtype=np.float64),
            w=np.array(payload["w"], dtype=np.float64),
            B=float(payload["B"]),
            measure=MeasureSpec.from_name(payload["measure"]),
            stats=TrainStats(),
        )
    except ModelFormatError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
