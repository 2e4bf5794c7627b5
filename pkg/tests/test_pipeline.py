import json
import shutil

import numpy as np
import pytest

from vitalforge.errors import DegenerateSplit, MissingLabels, StageError, ValidationError
from vitalforge.models.train import TrainConfig
from vitalforge.pipeline import (
    N_WAVEFORM_INPUTS,
    Pipeline,
    PipelineConfig,
    StayTable,
    build_model_data,
    config_hash,
    forward_fill,
    ingest,
    read_episode,
    regenerate_report,
    split,
)

FAST = TrainConfig(epochs=3, hidden=4, channel_hidden=2, waveform_units=3, batch_size=16)


def table(n_patients, n_pos, stays_per_patient=None):
    stays_per_patient = stays_per_patient or {}
    ids, subjects, labels = [], [], []
    for p in range(n_patients):
        for s in range(stays_per_patient.get(p, 1)):
            ids.append(f"s{p:03d}_{s}")
            subjects.append(f"p{p:03d}")
            labels.append(int(p < n_pos))
    n = len(ids)
    return StayTable(ids, subjects, ["2130-01-01-00-00"] * n, np.array(labels), np.zeros((n, 48, 1)), ["heart_rate"])


@pytest.fixture
def cohort(small_cohort, tmp_path):
    root = tmp_path / "cohort"
    shutil.copytree(small_cohort, root)
    return root


@pytest.fixture(scope="module")
def finished(small_cohort, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    cfg = PipelineConfig(cohort_dir=str(small_cohort), out_dir=str(out), models=("logreg", "lstm"), train=FAST)
    p = Pipeline(cfg)
    rep = p.run_benchmark()
    return p, rep


# ingest


def test_clean_cohort_drops_nothing(small_cohort, tmp_path):
    stays = ingest(PipelineConfig(cohort_dir=str(small_cohort), out_dir=str(tmp_path)))
    assert stays.dropped_rows == 0
    assert len(stays.stay_ids) == 60
    assert stays.series.shape == (60, 48, 5)
    assert np.isfinite(stays.series).all()


def test_out_of_range_hour_dropped(cohort):
    ep = sorted((cohort / "episodes").glob("*.csv"))[0]
    with open(ep, "a") as fh:
        fh.write("50,1,2,3,4,5\n")
    stays = ingest(PipelineConfig(cohort_dir=str(cohort)))
    assert stays.dropped_rows == 1


@pytest.mark.parametrize(
    "row",
    ["-1,1,2,3,4,5", "3.5,1,2,3,4,5", "0,1,2,3,4,5", "7,abc,2,3,4,5", "8,inf,2,3,4,5", "9,1,2"],
)
def test_spurious_rows(tmp_path, row):
    path = tmp_path / "ep.csv"
    body = "\n".join(f"{h},80,85,16,97,37" for h in range(48))
    path.write_text(f"hour,a,b,c,d,e\n{body}\n{row}\n")
    grid, names, dropped = read_episode(path)
    assert dropped == 1
    assert names == list("abcde")
    assert (grid[:, 0] == 80).all()


def test_unlabelled_stay_named(cohort):
    ep = sorted((cohort / "episodes").glob("*.csv"))[0]
    shutil.copy(ep, ep.with_name("p99_orphan.csv"))
    with pytest.raises(MissingLabels, match="p99_orphan"):
        ingest(PipelineConfig(cohort_dir=str(cohort)))


def test_missing_label_file(cohort):
    (cohort / "labels.csv").unlink()
    with pytest.raises(MissingLabels):
        ingest(PipelineConfig(cohort_dir=str(cohort)))


def test_forward_fill_defaults():
    grid = np.array([[np.nan, 1.0], [90.0, np.nan], [np.nan, 3.0]])
    out = forward_fill(grid, ["heart_rate", "unknown"])
    np.testing.assert_array_equal(out, [[80.0, 1.0], [90.0, 1.0], [90.0, 3.0]])


def test_stay_table_json_roundtrip(small_cohort):
    stays = ingest(PipelineConfig(cohort_dir=str(small_cohort)))
    back = StayTable.from_json(json.loads(json.dumps(stays.to_json())))
    assert back.stay_ids == stays.stay_ids
    np.testing.assert_array_equal(back.series, stays.series)


# split


def test_split_sizes():
    train, test = split(table(100, 30), (0.85, 0.15), seed=0)
    assert (len(train), len(test)) == (85, 15)
    assert not set(train) & set(test)


def test_split_keeps_patient_together():
    stays = table(40, 12, {5: 3, 17: 3})
    for seed in range(10):
        parts = split(stays, (0.85, 0.15), seed=seed)
        for p in ("p005", "p017"):
            sides = {i for i, part in enumerate(parts) for s in part if s.startswith("s" + p[1:])}
            assert len(sides) == 1


def test_split_stratified_both_sides():
    stays = table(100, 30)
    labels = dict(zip(stays.stay_ids, stays.labels))
    for seed in range(5):
        for part in split(stays, (0.6, 0.15, 0.25), seed=seed):
            assert {labels[s] for s in part} == {0, 1}


def test_split_deterministic():
    stays = table(50, 15)
    assert split(stays, (0.85, 0.15), 4) == split(stays, (0.85, 0.15), 4)
    assert split(stays, (0.85, 0.15), 4) != split(stays, (0.85, 0.15), 5)


def test_split_degenerate():
    with pytest.raises(DegenerateSplit):
        split(table(20, 1), (0.85, 0.15))


# model inputs


def test_model_data_standardised_on_train(finished):
    p, _ = finished
    data = p.prepared()
    assert data.train.wf.shape[1] == N_WAVEFORM_INPUTS
    present = data.train.wf[:, -1] == 1
    np.testing.assert_allclose(data.train.wf[present, :-1].mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(data.train.seq.reshape(-1, data.train.seq.shape[2]).mean(axis=0), 0.0, atol=1e-9)
    assert (data.train.wf[~present, :-1] == 0).all()


def test_build_model_data_rejects_unknown_ids(finished):
    p, _ = finished
    with pytest.raises((KeyError, ValidationError)):
        build_model_data(p.load_stays(), p.run_extract(), [["nope"], [], []])


# pipeline


def test_report_shape(finished):
    _, rep = finished
    assert [r.model for r in rep.rows] == ["Logistic Regression", "Standard LSTM"]
    assert "With waveform" in rep.to_text()
    for r in rep.rows:
        assert 0 <= r.auc_roc <= 1 and 0 <= r.baseline_auc_pr <= 1


def test_audit_excludes_test(finished):
    p, _ = finished
    test = set(p.load_split()[2])
    audit = json.loads(p.audit_path.read_text())
    assert "balance" in audit and "train/lstm-waveform" in audit
    for ids in audit.values():
        assert not test & set(ids)


def test_balanced_training_is_one_to_one(finished):
    p, _ = finished
    doc = json.loads(p.balanced_path.read_text())
    labels = np.array(doc["labels"])
    assert (labels == 1).sum() == (labels == 0).sum()


def test_rerun_is_noop(finished):
    p, _ = finished
    artifacts = sorted(q for q in p.out.rglob("*") if q.is_file() and q.parent.name != "stages")
    before = {q: q.stat().st_mtime_ns for q in artifacts}
    stage_meta = {q: q.read_bytes() for q in (p.out / "stages").iterdir()}
    Pipeline(p.cfg).run_benchmark()
    for q, t in before.items():
        if q.name in ("report.txt", "report.csv"):
            continue
        assert q.stat().st_mtime_ns == t, q
    assert {q: q.read_bytes() for q in (p.out / "stages").iterdir()} == stage_meta


def test_changed_setting_reruns_downstream(small_cohort, tmp_path):
    cfg = PipelineConfig(cohort_dir=str(small_cohort), out_dir=str(tmp_path), train=FAST)
    p = Pipeline(cfg)
    p.run_split()
    first = p.load_split()
    p2 = Pipeline(PipelineConfig(cohort_dir=str(small_cohort), out_dir=str(tmp_path), train=FAST, seed=1))
    p2.run_split()
    assert p2.load_split() != first


def test_report_regenerated_from_artifacts(finished):
    p, rep = finished
    again = regenerate_report(p.out)
    for a, b in zip(rep.rows, again.rows):
        assert a.model == b.model
        for f in ("auc_roc", "auc_pr", "baseline_auc_roc", "baseline_auc_pr"):
            assert abs(getattr(a, f) - getattr(b, f)) <= 1e-12
    assert (p.out / "report.txt").read_text() == again.to_text()


def test_stage_error_names_stage(cohort, tmp_path):
    (cohort / "labels.csv").unlink()
    with pytest.raises(StageError) as info:
        Pipeline(PipelineConfig(cohort_dir=str(cohort), out_dir=str(tmp_path))).run_ingest()
    assert info.value.stage == "ingest"
    assert "ingest" in str(info.value)
    assert isinstance(info.value.cause, MissingLabels)


def test_no_report_without_scores(tmp_path):
    with pytest.raises(ValidationError):
        regenerate_report(tmp_path)


# config


def test_config_roundtrip(tmp_path):
    cfg = PipelineConfig(cohort_dir="c", out_dir="o", models=("logreg", "channelwise"), fusion="none", seed=3, train=FAST, linkage_threshold=1.5)
    again = PipelineConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert PipelineConfig.load(path) == cfg


@pytest.mark.parametrize(
    "kw",
    [
        {"split": (0.5, 0.2, 0.2)},
        {"split": (0.0, 0.5, 0.5)},
        {"split": (0.8, 0.2, 0.0)},
        {"models": ("svm",)},
        {"models": ()},
        {"fusion": "late"},
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValidationError):
        PipelineConfig(**kw)


def test_config_unknown_key():
    with pytest.raises(ValidationError):
        PipelineConfig.from_dict({"colour": "red"})
