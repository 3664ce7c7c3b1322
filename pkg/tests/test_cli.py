import json

import numpy as np
import pytest

from perfadapt import cli, harness
from perfadapt.errors import ParameterError


TRAIN_TEXT = "\n".join(
    ["+1 1:1.0 2:0.2", "-1 1:-1.0 2:-0.1", "+1 1:0.9 2:0.4", "-1 1:-0.8 2:0.1"] * 6
)
TEST_TEXT = "\n".join(["+1 1:0.7 2:0.3", "-1 1:-0.6 2:-0.2"] * 4)


@pytest.fixture
def toy_files(tmp_path):
    train = tmp_path / "train.svml"
    test = tmp_path / "test.svml"
    train.write_text(TRAIN_TEXT + "\n")
    test.write_text(TEST_TEXT + "\n")
    return train, test


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def read_report(out_dir):
    with open(out_dir / "report.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_train_on_separable_toy(toy_files, tmp_path):
    train, test = toy_files
    out = tmp_path / "out"
    code = run_cli("train", "--data", train, "--test", test, "--measure", "err",
                   "-C", "1", "--out", out)
    assert code == 0
    report = read_report(out)
    assert report["train_metrics"]["err"] == 1.0
    assert report["test_metrics"]["err"] == 1.0
    assert (out / "model.json").exists()
    assert (out / "report.txt").exists()


def test_train_with_cv_grid(toy_files, tmp_path):
    train, _ = toy_files
    out = tmp_path / "out"
    code = run_cli("train", "--data", train, "--measure", "f1",
                   "-C", "2^-2,1,2^2", "--folds", "3", "--out", out)
    assert code == 0
    report = read_report(out)
    assert report["selection"]["C"] in (0.25, 1.0, 4.0)
    assert len(report["selection"]["cv"]) == 3


def test_invalid_measure_is_usage_error(toy_files, tmp_path):
    train, _ = toy_files
    assert run_cli("train", "--data", train, "--measure", "nope",
                   "--out", tmp_path / "o") == 2


def test_empty_grid_is_usage_error(toy_files, tmp_path):
    train, _ = toy_files
    assert run_cli("sweep", "--data", train, "-C", " ", "--out", tmp_path / "o") == 2


def test_missing_data_file_is_data_error(tmp_path):
    assert run_cli("train", "--data", tmp_path / "absent.svml",
                   "--out", tmp_path / "o") == 3


def test_adapt_with_oracle_external_predictions(toy_files, tmp_path):
    train, test = toy_files
    preds = tmp_path / "train_preds.txt"
    labels = [line.split()[0] for line in TRAIN_TEXT.splitlines()]
    preds.write_text("\n".join(labels) + "\n")
    out = tmp_path / "out"
    code = run_cli("adapt", "--data", train, "--measure", "err", "-C", "8",
                   "--aux", f"pred:{preds}", "--out", out)
    assert code == 0
    report = read_report(out)
    assert report["train_metrics"]["err"] == 1.0
    assert report["deployable"] is False


def test_adapt_missing_test_predictions_is_alignment_error(toy_files, tmp_path):
    train, test = toy_files
    preds = tmp_path / "train_preds.txt"
    labels = [line.split()[0] for line in TRAIN_TEXT.splitlines()]
    preds.write_text("\n".join(labels) + "\n")
    code = run_cli("adapt", "--data", train, "--test", test, "--measure", "err",
                   "-C", "8", "--aux", f"pred:{preds}", "--out", tmp_path / "o")
    assert code == 3


def test_adapt_with_builtin_tree(toy_files, tmp_path):
    train, test = toy_files
    out = tmp_path / "out"
    code = run_cli("adapt", "--data", train, "--test", test, "--measure", "auc",
                   "-C", "4", "--aux", "tree:depth=3,min_leaf=2", "--out", out)
    assert code == 0
    report = read_report(out)
    assert report["test_metrics"]["auc"] is not None
    assert len(report["auxiliary_test_raw"]) == 1
    assert report["deployable"] is True


def test_eval_reproduces_training_metrics(toy_files, tmp_path):
    train, _ = toy_files
    out = tmp_path / "out"
    run_cli("train", "--data", train, "--measure", "err", "-C", "1", "--out", out)
    train_metrics = read_report(out)["train_metrics"]
    out2 = tmp_path / "out_eval"
    code = run_cli("eval", "--model", out / "model.json", "--data", train, "--out", out2)
    assert code == 0
    metrics = read_report(out2)["metrics"]
    for name, value in train_metrics.items():
        if value is not None:
            assert metrics[name] == pytest.approx(value, abs=1e-12)


def test_eval_deployable_adapted_model(toy_files, tmp_path):
    train, test = toy_files
    out = tmp_path / "out"
    run_cli("adapt", "--data", train, "--measure", "err", "-C", "4",
            "--aux", "sgd:lambda=0.01,epochs=5", "--out", out)
    out2 = tmp_path / "out_eval"
    code = run_cli("eval", "--model", out / "model.json", "--data", test, "--out", out2)
    assert code == 0
    metrics = read_report(out2)["metrics"]
    assert all(v is None or 0.0 <= v <= 1.0 for v in metrics.values())


def test_eval_corrupt_model_is_format_error(toy_files, tmp_path):
    train, _ = toy_files
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run_cli("eval", "--model", bad, "--data", train, "--out", tmp_path / "o") == 3
    bad.write_text('{"format": "unknown"}')
    assert run_cli("eval", "--model", bad, "--data", train, "--out", tmp_path / "o") == 3


def test_sweep_emits_one_row_per_grid_point(toy_files, tmp_path):
    train, test = toy_files
    out = tmp_path / "out"
    code = run_cli("sweep", "--data", train, "--test", test, "--measure", "err",
                   "-C", "2^-1,1,2", "--out", out)
    assert code == 0
    rows = read_report(out)["rows"]
    assert [r["C"] for r in rows] == [0.5, 1.0, 2.0]
    assert all("inference_count" in r and "test_metric" in r for r in rows)


def test_sweep_b_grid_requires_aux(toy_files, tmp_path):
    train, _ = toy_files
    assert run_cli("sweep", "--data", train, "-C", "1", "-B", "1,2",
                   "--out", tmp_path / "o") == 2
    out = tmp_path / "out"
    code = run_cli("sweep", "--data", train, "-C", "1", "-B", "2^-1,2^1",
                   "--aux", "tree:depth=2,min_leaf=2", "--out", out)
    assert code == 0
    assert len(read_report(out)["rows"]) == 2


def test_bench_emits_paired_counts(toy_files, tmp_path):
    train, _ = toy_files
    out = tmp_path / "out"
    code = run_cli("bench", "--data", train, "--measure", "err", "-C", "1",
                   "--aux", "tree:depth=3,min_leaf=2", "--out", out)
    assert code == 0
    rows = read_report(out)["rows"]
    assert len(rows) == 1
    assert rows[0]["plain_inferences"] >= 1
    assert rows[0]["adapted_inferences"] >= 1


def test_bench_without_aux_is_usage_error(toy_files, tmp_path):
    train, _ = toy_files
    assert run_cli("bench", "--data", train, "-C", "1", "--out", tmp_path / "o") == 2


def test_bench_single_class_auc_is_data_error(tmp_path):
    data = tmp_path / "single.svml"
    data.write_text("+1 1:1.0\n+1 1:0.5\n+1 1:0.25\n+1 1:2.0\n")
    assert run_cli("bench", "--data", data, "--measure", "auc", "-C", "1",
                   "--aux", "tree:depth=1,min_leaf=1", "--out", tmp_path / "o") == 3


def test_reports_are_deterministic(toy_files, tmp_path):
    train, test = toy_files
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run_cli("train", "--data", train, "--test", test, "--measure", "prbep",
                       "-C", "2^-1,2^1", "--folds", "2", "--seed", "7",
                       "--out", out) == 0
        report = read_report(out)
        report.pop("timing")
        outs.append((json.dumps(report, sort_keys=True), (out / "report.txt").read_bytes()))
    assert outs[0] == outs[1]


def test_cross_validation_never_reads_test_before_selection(toy_files, tmp_path, monkeypatch):
    train, test = toy_files
    events = []
    real_load = cli._load_dataset
    real_select = harness.select_c

    def load_spy(path):
        events.append(("load", str(path)))
        return real_load(path)

    def select_spy(*args, **kwargs):
        result = real_select(*args, **kwargs)
        events.append(("selected", None))
        return result

    monkeypatch.setattr(cli, "_load_dataset", load_spy)
    monkeypatch.setattr(harness, "select_c", select_spy)
    monkeypatch.setattr(cli.harness, "select_c", select_spy)
    out = tmp_path / "out"
    assert run_cli("train", "--data", train, "--test", test, "--measure", "err",
                   "-C", "2^-1,2^1", "--folds", "2", "--out", out) == 0
    test_loads = [i for i, (kind, path) in enumerate(events)
                  if kind == "load" and path == str(test)]
    selection = [i for i, (kind, _) in enumerate(events) if kind == "selected"]
    assert selection, "cross-validation did not run"
    assert test_loads, "test set never loaded"
    assert min(test_loads) > max(selection)


def test_strict_flag_turns_nonconvergence_into_exit_4(toy_files, tmp_path):
    train, _ = toy_files
    out = tmp_path / "out"
    code = run_cli("train", "--data", train, "--measure", "err", "-C", "128",
                   "--max-iterations", "1", "--strict", "--out", out)
    assert code == 4


def test_config_file_supplies_defaults(toy_files, tmp_path):
    train, _ = toy_files
    config = tmp_path / "run.toml"
    config.write_text(f'measure = "f1"\nC = "1"\ndata = "{train}"\nseed = 3\n')
    out = tmp_path / "out"
    assert run_cli("train", "--config", config, "--out", out) == 0
    report = read_report(out)
    assert report["config"]["measure"] == "f1"
    assert report["config"]["seed"] == 3


def test_config_rejects_unknown_keys(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text('mystery = 1\n')
    assert run_cli("train", "--config", config, "--out", tmp_path / "o") == 2


def test_scale_flag_smoke(toy_files, tmp_path):
    train, test = toy_files
    out = tmp_path / "out"
    assert run_cli("train", "--data", train, "--test", test, "--measure", "err",
                   "-C", "1", "--scale", "--out", out) == 0
    assert read_report(out)["train_metrics"]["err"] == 1.0


def test_trace_flag_writes_solver_log(toy_files, tmp_path):
    train, _ = toy_files
    out = tmp_path / "out"
    assert run_cli("train", "--data", train, "--measure", "err", "-C", "4",
                   "--trace", "--out", out) == 0
    trace = (out / "trace.log").read_text()
    assert trace.startswith("iter=1 ")


def test_parse_c_grid_forms():
    assert harness.parse_c_grid("1") == [1.0]
    assert harness.parse_c_grid("2^-2,0.5,2^3") == [0.25, 0.5, 8.0]
    grid = harness.parse_c_grid("2^-7..2^7")
    assert len(grid) == 15
    assert grid[0] == 2.0**-7 and grid[-1] == 2.0**7
    with pytest.raises(ParameterError):
        harness.parse_c_grid("banana")
    with pytest.raises(ParameterError):
        harness.parse_c_grid("2^3..2^-1")


def test_stratified_folds_cover_and_balance():
    rng = np.random.default_rng(0)
    labels = np.array([1] * 11 + [-1] * 7)
    rng.shuffle(labels)
    folds = harness.stratified_folds(labels, 3, seed=5)
    seen = np.concatenate([val for _, val in folds])
    assert sorted(seen.tolist()) == list(range(18))
    for train_idx, val_idx in folds:
        assert set(train_idx.tolist()).isdisjoint(val_idx.tolist())
        assert np.sum(labels[val_idx] == 1) in (3, 4)
        assert np.sum(labels[val_idx] == -1) in (2, 3)


def test_jobs_parallel_cv_matches_serial(toy_files, tmp_path):
    train, _ = toy_files
    reports = []
    for jobs, name in ((1, "serial"), (3, "parallel")):
        out = tmp_path / name
        assert run_cli("train", "--data", train, "--measure", "err",
                       "-C", "2^-1,1,2", "--folds", "2", "--jobs", jobs,
                       "--seed", "1", "--out", out) == 0
        report = read_report(out)
        report.pop("timing")
        reports.append(json.dumps(report, sort_keys=True))
    assert reports[0] == reports[1]
