"""Experiment machinery shared by the CLI: grids, folds, cross-validation.

Everything here sees only the training data; test files are loaded by the
commands after model selection finishes, which is what keeps selection
honest and is what the file-access audit in the test suite checks.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .adapt import adapt, auxiliary_output_matrix
from .auxiliary import load_external_predictions, train_linear_sgd, train_tree
from .errors import MeasureUndefinedError, ParameterError
from .measures import evaluate
from .solver import Hyperparams, cutting_plane_train

DEFAULT_C_GRID = "2^-7..2^7"


def parse_c_grid(text):
    """Comma-separated floats, powers like ``2^-3``, or ranges ``2^-7..2^7``."""
    values = []
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            lo, hi = token.split("..", 1)
            lo_exp = _power_exponent(lo)
            hi_exp = _power_exponent(hi)
            if lo_exp is None or hi_exp is None or hi_exp < lo_exp:
                raise ParameterError(f"bad grid range {token!r}")
            values.extend(float(2.0**e) for e in range(lo_exp, hi_exp + 1))
        elif (exp := _power_exponent(token)) is not None:
            values.append(float(2.0**exp))
        else:
            try:
                values.append(float(token))
            except ValueError:
                raise ParameterError(f"bad grid value {token!r}") from None
    if not values:
        raise ParameterError("empty grid")
    if any(v <= 0 for v in values):
        raise ParameterError("grid values must be positive")
    return values


def _power_exponent(token):
    token = token.strip()
    if token.startswith("2^"):
        try:
            return int(token[2:])
        except ValueError:
            return None
    return None


def stratified_folds(labels, folds, seed):
    """Round-robin fold assignment per class after a seeded shuffle."""
    labels = np.asarray(labels)
    if folds < 2:
        raise ParameterError(f"folds must be >= 2, got {folds}")
    rng = np.random.default_rng(seed)
    assign = np.empty(labels.size, dtype=np.int64)
    for cls in (1, -1):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        assign[idx] = np.arange(idx.size) % folds
    return [
        (np.flatnonzero(assign != k), np.flatnonzero(assign == k)) for k in range(folds)
    ]


def parse_aux_spec(spec_text, default_seed=0):
    """A builder from an ``--aux`` token: tree:…, sgd:…, or pred:<path>."""
    kind, _, rest = spec_text.partition(":")
    kind = kind.strip().lower()
    if kind == "pred":
        if not rest:
            raise ParameterError("pred auxiliary needs a path: pred:<file>")
        return {"kind": "pred", "path": rest}
    options = {}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if not _ or not key:
                raise ParameterError(f"bad auxiliary option {item!r} in {spec_text!r}")
            options[key.strip()] = value.strip()
    try:
        if kind == "tree":
            return {
                "kind": "tree",
                "max_depth": int(options.pop("depth", 12)),
                "min_leaf_size": int(options.pop("min_leaf", 5)),
                "seed": int(options.pop("seed", default_seed)),
                **_reject_extra(options, spec_text),
            }
        if kind == "sgd":
            return {
                "kind": "sgd",
                "lam": float(options.pop("lambda", 1e-4)),
                "epochs": int(options.pop("epochs", 20)),
                "seed": int(options.pop("seed", default_seed)),
                **_reject_extra(options, spec_text),
            }
    except ValueError as exc:
        raise ParameterError(f"bad auxiliary option in {spec_text!r}: {exc}") from None
    raise ParameterError(f"unknown auxiliary kind {kind!r} (expected tree, sgd, or pred)")


def _reject_extra(options, spec_text):
    if options:
        raise ParameterError(f"unknown auxiliary options {sorted(options)} in {spec_text!r}")
    return {}


def build_auxiliary(parsed, train_data):
    if parsed["kind"] == "tree":
        return train_tree(
            train_data,
            max_depth=parsed["max_depth"],
            min_leaf_size=parsed["min_leaf_size"],
            seed=parsed["seed"],
        )
    if parsed["kind"] == "sgd":
        return train_linear_sgd(
            train_data, lam=parsed["lam"], epochs=parsed["epochs"], seed=parsed["seed"]
        )
    return load_external_predictions(parsed["path"], train_data.n)


def train_plain(data, spec, C, epsilon=0.1, max_iterations=5000, trace=None):
    hp = Hyperparams(C=C, epsilon=epsilon, max_iterations=max_iterations)
    return cutting_plane_train(data, spec, hp, trace=trace)


def _fold_metric_plain(data, spec, C, epsilon, max_iterations, train_idx, val_idx):
    try:
        model = train_plain(data.subset(train_idx), spec, C, epsilon, max_iterations)
        val = data.subset(val_idx)
        return evaluate(spec, val.labels, model.decision_scores(val))
    except MeasureUndefinedError:
        return None


def _fold_metric_adapt(
    data, aux_outputs, spec, C, B, epsilon, max_iterations, train_idx, val_idx
):
    try:
        sub = data.subset(train_idx)
        model = adapt(
            sub,
            auxiliaries=[],
            spec=spec,
            C=C,
            B=B,
            epsilon=epsilon,
            max_iterations=max_iterations,
            aux_outputs=aux_outputs[train_idx],
        )
        val = data.subset(val_idx)
        scores = model.decision_scores(val, aux_outputs=aux_outputs[val_idx])
        return evaluate(spec, val.labels, scores)
    except MeasureUndefinedError:
        return None


def _cv_task(payload):
    (data, spec, C, B, epsilon, max_iterations, train_idx, val_idx, aux_outputs) = payload
    if aux_outputs is None:
        return _fold_metric_plain(data, spec, C, epsilon, max_iterations, train_idx, val_idx)
    return _fold_metric_adapt(
        data, aux_outputs, spec, C, B, epsilon, max_iterations, train_idx, val_idx
    )


def select_c(
    data,
    spec,
    grid,
    folds=5,
    seed=0,
    epsilon=0.1,
    max_iterations=5000,
    jobs=1,
    aux_outputs=None,
    B=1.0,
):
    """5-fold-style cross-validated choice of C over the grid.

    Returns (best_C, rows) where rows hold per-C fold metrics and means.
    Folds with an undefined validation metric are skipped; ties on the
    mean go to the smallest C.  ``jobs > 1`` fans the fold trainings out
    to worker processes (fold runs are independent and GIL-heavy).
    """
    fold_indices = stratified_folds(data.labels, folds, seed)
    tasks = [
        (data, spec, C, B, epsilon, max_iterations, train_idx, val_idx, aux_outputs)
        for C in grid
        for train_idx, val_idx in fold_indices
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            metrics = list(pool.map(_cv_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        metrics = [_cv_task(t) for t in tasks]

    rows = []
    pos = 0
    for C in grid:
        fold_metrics = metrics[pos : pos + len(fold_indices)]
        pos += len(fold_indices)
        usable = [m for m in fold_metrics if m is not None]
        mean = float(np.mean(usable)) if usable else None
        rows.append({"C": C, "folds": fold_metrics, "mean": mean})
    defined = [row for row in rows if row["mean"] is not None]
    if not defined:
        raise MeasureUndefinedError("no cross-validation fold produced a defined metric")
    best_mean = max(row["mean"] for row in defined)
    candidates = [row["C"] for row in defined if row["mean"] >= best_mean - 1e-12]
    return min(candidates), rows
