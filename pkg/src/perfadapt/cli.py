"""Command-line harness: train, adapt, eval, sweep, bench.

Exit codes: 0 success, 2 usage/config, 3 data/alignment, 4 non-converged
training under --strict.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import harness, report
from .adapt import adapt, auxiliary_output_matrix, load_adapted, save_adapted
from .auxiliary import load_external_predictions
from .dataset import apply_scale, load_svmlight, maxabs_scale_factors
from .errors import (
    AlignmentError,
    LabelingError,
    MeasureUndefinedError,
    ModelFormatError,
    ParameterError,
    ParseError,
    PerfAdaptError,
    ShapeError,
    TrainingError,
)
from .measures import MeasureSpec, evaluate, evaluate_all
from .solver import load_linear, save_linear

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NONCONVERGED = 4

_CONFIG_ERRORS = (ParameterError,)
_DATA_ERRORS = (
    ParseError,
    LabelingError,
    ShapeError,
    AlignmentError,
    MeasureUndefinedError,
    TrainingError,
    ModelFormatError,
    OSError,
)

_CONFIG_KEYS = {
    "data", "test", "measure", "C", "B", "epsilon", "aux", "folds", "seed",
    "jobs", "out", "strict", "scale", "max_iterations", "trace", "pred",
}


def _load_dataset(path):
    """Single entry point for reading data files (audited in tests)."""
    return load_svmlight(path)


def _measure(args):
    try:
        return MeasureSpec.from_name(args.measure)
    except ValueError as exc:
        raise ParameterError(str(exc)) from None


def _prepare_train(args):
    if not args.data:
        raise ParameterError("--data is required")
    data = _load_dataset(args.data)
    factors = None
    if args.scale:
        factors = maxabs_scale_factors(data)
        data = apply_scale(data, factors)
    return data, factors


def _load_test(args, factors, min_dimension):
    if not args.test:
        return None
    test = _load_dataset(args.test)
    if factors is not None:
        padded = np.ones(max(test.dimension, factors.shape[0]))
        padded[: factors.shape[0]] = factors
        test = apply_scale(test, padded)
    if test.dimension < min_dimension:
        test = test.with_dimension(min_dimension)
    return test


def _single_value(grid_text, flag):
    values = harness.parse_c_grid(grid_text)
    if len(values) != 1:
        raise ParameterError(f"{flag} expects a single value here, got {len(values)}")
    return values[0]


def _open_trace(args):
    if not args.trace:
        return None
    os.makedirs(args.out, exist_ok=True)
    return open(os.path.join(args.out, "trace.log"), "w", encoding="utf-8")


def _model_summary(stats, xi):
    return {
        "converged": stats.converged,
        "iterations": stats.iterations,
        "inference_count": stats.inference_count,
        "final_violation": stats.final_violation,
        "xi": xi,
    }


def _config_echo(args, keys):
    return {key: getattr(args, key, None) for key in keys}


def _strict_exit(args, *converged_flags):
    if args.strict and not all(converged_flags):
        print("error: training did not converge (--strict)", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


# ---------------------------------------------------------------------------
# commands

def cmd_train(args):
    spec = _measure(args)
    started = time.perf_counter()
    data, factors = _prepare_train(args)
    grid = harness.parse_c_grid(args.C)
    selection = {"rule": "highest mean validation metric; ties -> smallest C"}
    if len(grid) == 1:
        best_c, cv_rows = grid[0], None
    else:
        best_c, cv_rows = harness.select_c(
            data,
            spec,
            grid,
            folds=args.folds,
            seed=args.seed,
            epsilon=args.epsilon,
            max_iterations=args.max_iterations,
            jobs=args.jobs,
        )
    selection.update({"C": best_c, "cv": cv_rows})
    trace = _open_trace(args)
    try:
        model = harness.train_plain(
            data, spec, best_c, args.epsilon, args.max_iterations, trace=trace
        )
    finally:
        if trace:
            trace.close()
    train_metrics = evaluate_all(data.labels, model.decision_scores(data))
    test = _load_test(args, factors, data.dimension)
    test_metrics = (
        evaluate_all(test.labels, model.decision_scores(test)) if test is not None else None
    )
    os.makedirs(args.out, exist_ok=True)
    save_linear(model, os.path.join(args.out, "model.json"))
    body = {
        "command": "train",
        "config": _config_echo(
            args,
            ("data", "test", "measure", "C", "epsilon", "folds", "seed", "scale",
             "max_iterations", "strict"),
        ),
        "selection": selection,
        "model": _model_summary(model.stats, model.xi),
        "train_metrics": train_metrics,
        "test_metrics": test_metrics,
        "timing": {"total_s": time.perf_counter() - started},
    }
    columns = {"train": train_metrics}
    if test_metrics:
        columns["test"] = test_metrics
    text = (
        f"train  measure={spec.name}  C={best_c:g}  "
        f"converged={model.stats.converged}  inferences={model.stats.inference_count}\n\n"
        + report.metrics_table(columns)
    )
    report.write_report(body, args.out, text)
    print(text, end="")
    return _strict_exit(args, model.stats.converged)


def _build_auxiliaries(args, data):
    if not args.aux:
        raise ParameterError("adapt needs at least one --aux specification")
    parsed = [harness.parse_aux_spec(s, default_seed=args.seed + i) for i, s in enumerate(args.aux)]
    return [harness.build_auxiliary(p, data) for p in parsed]


def _test_aux_outputs(model, test, pred_paths):
    """Auxiliary outputs on the test set; externals come from --pred files."""
    paths = list(pred_paths or [])
    columns = []
    for aux in model.auxiliaries:
        if aux.deployable:
            columns.append(np.asarray(aux.outputs(test), dtype=np.int64))
        else:
            if not paths:
                raise AlignmentError(
                    f"{aux.name}: supply --pred with test-time predictions for "
                    "external auxiliaries"
                )
            columns.append(load_external_predictions(paths.pop(0), test.n).values)
    if paths:
        raise ParameterError(f"{len(paths)} unused --pred file(s)")
    return np.stack(columns, axis=1)


def cmd_adapt(args):
    spec = _measure(args)
    started = time.perf_counter()
    data, factors = _prepare_train(args)
    B = _single_value(args.B, "-B")
    auxiliaries = _build_auxiliaries(args, data)
    aux_outputs = auxiliary_output_matrix(data, auxiliaries)
    grid = harness.parse_c_grid(args.C)
    selection = {"rule": "highest mean validation metric; ties -> smallest C"}
    if len(grid) == 1:
        best_c, cv_rows = grid[0], None
    else:
        best_c, cv_rows = harness.select_c(
            data,
            spec,
            grid,
            folds=args.folds,
            seed=args.seed,
            epsilon=args.epsilon,
            max_iterations=args.max_iterations,
            jobs=args.jobs,
            aux_outputs=aux_outputs,
            B=B,
        )
    selection.update({"C": best_c, "cv": cv_rows})
    trace = _open_trace(args)
    try:
        model = adapt(
            data,
            auxiliaries,
            spec,
            C=best_c,
            B=B,
            epsilon=args.epsilon,
            max_iterations=args.max_iterations,
            aux_outputs=aux_outputs,
            trace=trace,
        )
    finally:
        if trace:
            trace.close()
    train_scores = model.decision_scores(data, aux_outputs=aux_outputs)
    train_metrics = evaluate_all(data.labels, train_scores)
    aux_train_raw = [
        evaluate_all(data.labels, aux_outputs[:, j].astype(np.float64))
        for j in range(aux_outputs.shape[1])
    ]
    test = _load_test(args, factors, data.dimension)
    test_metrics = None
    aux_test_raw = None
    if test is not None:
        test_aux = _test_aux_outputs(model, test, args.pred)
        test_metrics = evaluate_all(
            test.labels, model.decision_scores(test, aux_outputs=test_aux)
        )
        aux_test_raw = [
            evaluate_all(test.labels, test_aux[:, j].astype(np.float64))
            for j in range(test_aux.shape[1])
        ]
    os.makedirs(args.out, exist_ok=True)
    save_adapted(model, os.path.join(args.out, "model.json"))
    body = {
        "command": "adapt",
        "config": _config_echo(
            args,
            ("data", "test", "measure", "C", "B", "epsilon", "aux", "folds", "seed",
             "scale", "max_iterations", "strict"),
        ),
        "selection": selection,
        "model": _model_summary(model.stats, model.xi),
        "ensemble_weights": model.a.tolist(),
        "delta_norm": float(np.dot(model.w, model.w)),
        "deployable": model.deployable,
        "train_metrics": train_metrics,
        "auxiliary_train_raw": aux_train_raw,
        "test_metrics": test_metrics,
        "auxiliary_test_raw": aux_test_raw,
        "timing": {"total_s": time.perf_counter() - started},
    }
    columns = {"adapted(train)": train_metrics}
    if test_metrics:
        columns["adapted(test)"] = {
            m: (test_metrics[m], max((r[m] for r in aux_test_raw if r[m] is not None), default=None))
            for m in test_metrics
        }
    text = (
        f"adapt  measure={spec.name}  C={best_c:g}  B={B:g}  m={len(auxiliaries)}  "
        f"converged={model.stats.converged}  inferences={model.stats.inference_count}\n"
        "test column shows adapted (best raw auxiliary)\n\n"
        + report.metrics_table(columns)
    )
    report.write_report(body, args.out, text)
    print(text, end="")
    return _strict_exit(args, model.stats.converged)


def cmd_eval(args):
    if not args.model:
        raise ParameterError("--model is required")
    if not args.data:
        raise ParameterError("--data is required")
    started = time.perf_counter()
    with open(args.model, "r", encoding="utf-8") as fh:
        try:
            sniff = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{args.model}: {exc}") from exc
    kind = sniff.get("format")
    data = _load_dataset(args.data)
    if kind == "perfadapt-linear-model":
        model = load_linear(args.model)
        scores = model.decision_scores(data)
    elif kind == "perfadapt-adapted-model":
        model = load_adapted(args.model)
        aux_outputs = _test_aux_outputs(model, data, args.pred)
        scores = model.decision_scores(data, aux_outputs=aux_outputs)
    else:
        raise ModelFormatError(f"{args.model}: unrecognized model format {kind!r}")
    if args.measure:
        spec = _measure(args)
        metrics = {spec.name: evaluate(spec, data.labels, scores)}
    else:
        metrics = evaluate_all(data.labels, scores)
    body = {
        "command": "eval",
        "config": _config_echo(args, ("model", "data", "measure")),
        "metrics": metrics,
        "timing": {"total_s": time.perf_counter() - started},
    }
    text = f"eval  model={args.model}\n\n" + report.metrics_table({"metric": metrics})
    report.write_report(body, args.out, text)
    print(text, end="")
    return EXIT_OK


def _sweep_point(args, spec, data, aux_outputs, auxiliaries, C, B):
    if aux_outputs is None:
        model = harness.train_plain(data, spec, C, args.epsilon, args.max_iterations)
        stats, xi = model.stats, model.xi
        scores = model.decision_scores(data)
    else:
        model = adapt(
            data,
            auxiliaries,
            spec,
            C=C,
            B=B,
            epsilon=args.epsilon,
            max_iterations=args.max_iterations,
            aux_outputs=aux_outputs,
        )
        stats, xi = model.stats, model.xi
        scores = model.decision_scores(data, aux_outputs=aux_outputs)
    return model, stats, xi, evaluate(spec, data.labels, scores)


def cmd_sweep(args):
    spec = _measure(args)
    started = time.perf_counter()
    data, factors = _prepare_train(args)
    c_grid = harness.parse_c_grid(args.C)
    b_grid = harness.parse_c_grid(args.B)
    auxiliaries = None
    aux_outputs = None
    if args.aux:
        auxiliaries = _build_auxiliaries(args, data)
        aux_outputs = auxiliary_output_matrix(data, auxiliaries)
    elif len(b_grid) > 1:
        raise ParameterError("a B grid needs --aux (B only scales auxiliary columns)")
    test = _load_test(args, factors, data.dimension)
    points = [(C, B) for C in c_grid for B in b_grid]

    def run(point):
        C, B = point
        model, stats, xi, train_metric = _sweep_point(
            args, spec, data, aux_outputs, auxiliaries, C, B
        )
        row = {
            "C": C,
            "B": B if aux_outputs is not None else None,
            "train_metric": train_metric,
            "iterations": stats.iterations,
            "inference_count": stats.inference_count,
            "converged": stats.converged,
            "xi": xi,
        }
        if test is not None:
            if aux_outputs is None:
                test_scores = model.decision_scores(test)
            else:
                test_aux = _test_aux_outputs(model, test, args.pred)
                test_scores = model.decision_scores(test, aux_outputs=test_aux)
            row["test_metric"] = evaluate(spec, test.labels, test_scores)
        return row

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(run, points))
    else:
        rows = [run(pt) for pt in points]
    body = {
        "command": "sweep",
        "config": _config_echo(
            args,
            ("data", "test", "measure", "C", "B", "epsilon", "aux", "seed",
             "scale", "max_iterations"),
        ),
        "rows": rows,
        "timing": {"total_s": time.perf_counter() - started},
    }
    headers = ["C", "B", "train", "test", "iters", "inferences", "converged"]
    table_rows = [
        [
            f"{r['C']:g}",
            "-" if r["B"] is None else f"{r['B']:g}",
            r["train_metric"],
            r.get("test_metric"),
            r["iterations"],
            r["inference_count"],
            str(r["converged"]),
        ]
        for r in rows
    ]
    text = f"sweep  measure={spec.name}  points={len(rows)}\n\n" + report.render_table(
        headers, table_rows
    )
    report.write_report(body, args.out, text)
    if args.strict and not all(r["converged"] for r in rows):
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_bench(args):
    spec = _measure(args)
    started = time.perf_counter()
    data, _ = _prepare_train(args)
    if not args.aux:
        raise ParameterError("bench compares plain vs adapted runs; give at least one --aux")
    auxiliaries = _build_auxiliaries(args, data)
    aux_outputs = auxiliary_output_matrix(data, auxiliaries)
    B = _single_value(args.B, "-B")
    c_grid = harness.parse_c_grid(args.C)
    rows = []
    for C in c_grid:
        plain = harness.train_plain(data, spec, C, args.epsilon, args.max_iterations)
        adapted = adapt(
            data,
            auxiliaries,
            spec,
            C=C,
            B=B,
            epsilon=args.epsilon,
            max_iterations=args.max_iterations,
            aux_outputs=aux_outputs,
        )
        rows.append(
            {
                "C": C,
                "plain_inferences": plain.stats.inference_count,
                "adapted_inferences": adapted.stats.inference_count,
                "plain_converged": plain.stats.converged,
                "adapted_converged": adapted.stats.converged,
                "plain_train_metric": evaluate(
                    spec, data.labels, plain.decision_scores(data)
                ),
                "adapted_train_metric": evaluate(
                    spec,
                    data.labels,
                    adapted.decision_scores(data, aux_outputs=aux_outputs),
                ),
            }
        )
    body = {
        "command": "bench",
        "config": _config_echo(
            args, ("data", "measure", "C", "B", "epsilon", "aux", "seed", "max_iterations")
        ),
        "rows": rows,
        "timing": {"total_s": time.perf_counter() - started},
    }
    headers = ["C", "plain#inf", "adapted#inf", "plain-metric", "adapted-metric"]
    table_rows = [
        [
            f"{r['C']:g}",
            r["plain_inferences"],
            r["adapted_inferences"],
            r["plain_train_metric"],
            r["adapted_train_metric"],
        ]
        for r in rows
    ]
    text = f"bench  measure={spec.name}\n\n" + report.render_table(headers, table_rows)
    report.write_report(body, args.out, text)
    print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing

def _add_shared(p, *, data=True):
    if data:
        p.add_argument("--data", help="training data (SVMlight format)")
        p.add_argument("--test", help="held-out data (SVMlight format)")
    p.add_argument("--measure", default="err", help="err | f1 | prbep | auc")
    p.add_argument("-C", dest="C", default=harness.DEFAULT_C_GRID,
                   help="C value or grid, e.g. '1', '0.5,2', '2^-7..2^7'")
    p.add_argument("-B", dest="B", default="1",
                   help="auxiliary-weight penalty (grid allowed in sweep)")
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="stopping tolerance on the 0-100 loss scale")
    p.add_argument("--aux", action="append", default=None,
                   help="auxiliary spec: tree:depth=12 | sgd:lambda=1e-4 | pred:<path>"
                        " (repeatable)")
    p.add_argument("--pred", action="append", default=None,
                   help="test-time predictions file for each external auxiliary"
                        " (repeatable, in --aux order)")
    p.add_argument("--folds", type=int, default=5, help="cross-validation folds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers (CV folds use processes, sweep points threads)")
    p.add_argument("--out", default="perfadapt_out", help="report/model output directory")
    p.add_argument("--scale", action="store_true",
                   help="per-feature max-abs scaling fit on the training data")
    p.add_argument("--max-iterations", type=int, default=5000, dest="max_iterations")
    p.add_argument("--strict", action="store_true",
                   help="exit 4 when training does not converge")
    p.add_argument("--trace", action="store_true",
                   help="write per-iteration solver trace to <out>/trace.log")
    p.add_argument("--config", help="TOML file with defaults for these options")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="perfadapt",
        description="Structural training for multivariate performance measures "
                    "and black-box classifier adaptation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "train": (cmd_train, "train a plain linear model", True),
        "adapt": (cmd_adapt, "adapt auxiliary classifiers to a measure", True),
        "eval": (cmd_eval, "evaluate a saved model on a dataset", True),
        "sweep": (cmd_sweep, "run a C (and B) grid without cross-validation", True),
        "bench": (cmd_bench, "paired plain-vs-adapted inference counts per C", True),
    }
    parsers = {}
    for name, (fn, help_text, with_data) in specs.items():
        p = sub.add_parser(name, help=help_text)
        _add_shared(p, data=with_data)
        if name == "eval":
            p.add_argument("--model", help="model file produced by train/adapt")
            p.set_defaults(measure=None)  # eval reports all measures by default
        p.set_defaults(func=fn)
        parsers[name] = p
    return parser, parsers


def _load_config_file(path):
    try:
        import tomllib as toml
    except ImportError:
        import tomli as toml
    try:
        with open(path, "rb") as fh:
            values = toml.load(fh)
    except toml.TOMLDecodeError as exc:
        raise ParameterError(f"{path}: {exc}") from exc
    unknown = set(values) - _CONFIG_KEYS
    if unknown:
        raise ParameterError(f"{path}: unknown config keys {sorted(unknown)}")
    return values


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    parser, parsers = build_parser()
    try:
        if known.config:
            defaults = _load_config_file(known.config)
            for p in parsers.values():
                p.set_defaults(**defaults)
        args = parser.parse_args(argv)
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PerfAdaptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
