import json

import pytest

from vitalforge.cli import EXIT_INTERNAL, EXIT_OK, EXIT_VALIDATION, build_parser, exit_code, main
from vitalforge.errors import MissingLabels, StageError, VitalForgeError
from vitalforge.features import read_feature_csv

FAST = {"epochs": 2, "hidden": 3, "channel_hidden": 2, "waveform_units": 2, "batch_size": 16}


@pytest.fixture
def config(tmp_path, small_cohort):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"paths": {"cohort": str(small_cohort), "out": str(tmp_path / "out")}, "train": FAST}))
    return path


def last_json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_synth_and_verify(tmp_path, capsys):
    rc = main(["synth", "--out", str(tmp_path / "c"), "--n-patients", "20", "--coverage", "0.5", "--seed", "3", "--verify"])
    assert rc == EXIT_OK
    counts = last_json(capsys)
    assert counts["patients"] == 20 and counts["deceased"] == 6 and counts["with_waveform"] == 10
    assert (tmp_path / "c" / "manifest.json").exists()


def test_synth_config_file(tmp_path, capsys):
    cfg = tmp_path / "spec.json"
    cfg.write_text(json.dumps({"n_patients": 10, "deceased_fraction": 0.5, "waveform_coverage": 0.0}))
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "c")]) == EXIT_OK
    assert last_json(capsys)["deceased"] == 5


def test_synth_rejects_bad_spec(tmp_path):
    cfg = tmp_path / "spec.json"
    cfg.write_text(json.dumps({"n_patients": 10, "flavour": 1}))
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "c")]) == EXIT_VALIDATION
    assert main(["synth", "--n-patients", "2", "--out", str(tmp_path / "c")]) == EXIT_VALIDATION


def test_pipeline_commands(config, capsys, tmp_path):
    assert main(["ingest", "--config", str(config)]) == EXIT_OK
    assert last_json(capsys) == {"stays": 60, "dropped_rows": 0}
    assert main(["extract", "--config", str(config), "--jobs", "2"]) == EXIT_OK
    ex = last_json(capsys)
    assert ex["with_features"] + ex["without_features"] == 60
    assert main(["balance", "--config", str(config)]) == EXIT_OK
    assert last_json(capsys)["rows"] > 0
    assert main(["train", "--config", str(config), "--model", "logreg", "--fusion", "none"]) == EXIT_OK
    assert capsys.readouterr().out.strip().endswith("logreg-none.ckpt.json")
    assert main(["eval", "--config", str(config), "--model", "logreg", "--fusion", "none"]) == EXIT_OK
    assert capsys.readouterr().out.strip().endswith("scores-logreg-none.csv")
    assert main(["eval", "--config", str(config), "--model", "logreg"]) == EXIT_OK
    assert "Logistic Regression" in capsys.readouterr().out
    assert main(["report", "--config", str(config)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "Logistic Regression" in text and "With waveform" in text
    assert (tmp_path / "out" / "report.txt").read_text() == text


def test_cohort_flag_overrides(small_cohort, tmp_path, capsys):
    assert main(["ingest", "--cohort", str(small_cohort), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert last_json(capsys)["stays"] == 60


def test_balance_csv_mode(small_cohort, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["extract", "--cohort", str(small_cohort), "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    dest = tmp_path / "balanced.csv"
    rc = main(["balance", "--input", str(out / "extract" / "features.csv"), "--output", str(dest), "--seed", "2"])
    assert rc == EXIT_OK
    info = last_json(capsys)
    ids, matrix, labels = read_feature_csv(dest)
    assert info["rows_out"] == len(ids)
    assert (labels == 1).sum() == (labels == 0).sum()


def test_missing_labels_is_validation(small_cohort, tmp_path):
    import shutil

    root = tmp_path / "c"
    shutil.copytree(small_cohort, root)
    (root / "labels.csv").unlink()
    assert main(["ingest", "--cohort", str(root), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION


def test_missing_config_file(tmp_path):
    assert main(["ingest", "--config", str(tmp_path / "absent.json")]) == EXIT_VALIDATION


def test_malformed_config_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["report", "--config", str(path)]) == EXIT_VALIDATION


def test_report_without_scores(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == EXIT_VALIDATION


def test_exit_code_mapping():
    assert exit_code(StageError("ingest", MissingLabels("x"))) == EXIT_VALIDATION
    assert exit_code(StageError("train", VitalForgeError("x"))) == EXIT_INTERNAL
    assert exit_code(RuntimeError("boom")) == EXIT_INTERNAL


def test_internal_error_exit(monkeypatch, tmp_path):
    import vitalforge.cli as cli

    def boom(args):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.COMMANDS, "report", boom)
    assert main(["report", "--out", str(tmp_path)]) == EXIT_INTERNAL


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_parser_rejects_unknown_model():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["train", "--model", "svm"])
