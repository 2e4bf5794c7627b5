"""End-to-end benchmark: ingest, extract, split, balance, train, evaluate, report.

Every stage reads its inputs from and writes its outputs to ``out_dir``. A
stage records a hash over its configuration and input artifacts in
``out_dir/stages/<name>.json``; rerunning it with unchanged inputs and intact
outputs does nothing.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import balance as bal
from .errors import (
    AllInvalid,
    DegenerateSplit,
    MissingLabels,
    StageError,
    TooShort,
    ValidationError,
    VitalForgeError,
)
from .features import FEATURE_NAMES, extract_features, read_feature_csv, write_feature_csv
from .metrics import EvalReport, auc_pr, auc_roc, report
from .models import checkpoint
from .models.train import MODEL_KINDS, ModelData, TrainConfig, predict, train
from .preprocess import DEFAULT_TAPS, DEFAULT_WINDOW, prepare
from .records import WINDOW_HOURS, parse_start, scan_matched_tree, window_first_48h
from .synth import CLINICAL_CHANNELS

log = logging.getLogger(__name__)

MODEL_TITLES = {"logreg": "Logistic Regression", "lstm": "Standard LSTM", "channelwise": "Channelwise LSTM"}
NORMAL_VALUES = {name: normal for name, normal, _, _ in CLINICAL_CHANNELS}
N_WAVEFORM_INPUTS = len(FEATURE_NAMES) + 1


@dataclass(frozen=True)
class PipelineConfig:
    cohort_dir: str = "cohort"
    out_dir: str = "out"
    episodes_dir: str | None = None
    labels_path: str | None = None
    channel: str = "HR"
    smooth_window: int = DEFAULT_WINDOW
    fir_taps: int = DEFAULT_TAPS
    fir_cutoff_hz: float | None = None
    models: tuple[str, ...] = ("lstm",)
    fusion: str = "waveform"
    split: tuple[float, float, float] = (0.6375, 0.1125, 0.25)
    balance: bool = True
    linkage_threshold: float | None = None
    knn: int = bal.DEFAULT_KNN
    seed: int = 0
    jobs: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "split", tuple(float(f) for f in self.split))
        if isinstance(self.train, dict):
            object.__setattr__(self, "train", TrainConfig.from_dict(self.train))
        bad = [m for m in self.models if m not in MODEL_KINDS]
        if bad or not self.models:
            raise ValidationError(f"unknown model kinds {bad}")
        if self.fusion not in ("none", "waveform"):
            raise ValidationError(f"fusion must be 'none' or 'waveform', got {self.fusion!r}")
        if len(self.split) != 3 or any(f < 0 for f in self.split) or abs(sum(self.split) - 1) > 1e-9:
            raise ValidationError("split fractions (train, val, test) must be nonnegative and sum to 1")
        if self.split[0] == 0 or self.split[2] == 0:
            raise ValidationError("train and test fractions must be positive")

    @property
    def cohort(self) -> Path:
        return Path(self.cohort_dir)

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    @property
    def episodes(self) -> Path:
        return Path(self.episodes_dir) if self.episodes_dir else self.cohort / "episodes"

    @property
    def labels(self) -> Path:
        return Path(self.labels_path) if self.labels_path else self.cohort / "labels.csv"

    def to_dict(self) -> dict:
        """Nested JSON-ready form, the same shape ``from_dict`` reads."""
        return {
            "paths": {
                "cohort": self.cohort_dir,
                "out": self.out_dir,
                "episodes": self.episodes_dir,
                "labels": self.labels_path,
            },
            "channel": self.channel,
            "smooth": {"window": self.smooth_window},
            "fir": {"taps": self.fir_taps, "cutoff_hz": self.fir_cutoff_hz},
            "model": {"kinds": list(self.models), "fusion": self.fusion},
            "split": dict(zip(("train", "val", "test"), self.split)),
            "balance": {"enabled": self.balance, "linkage_threshold": self.linkage_threshold, "knn": self.knn},
            "seed": self.seed,
            "jobs": self.jobs,
            "train": self.train.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        kw = {}
        paths = d.pop("paths", {})
        for key, name in (("cohort", "cohort_dir"), ("out", "out_dir"), ("episodes", "episodes_dir"), ("labels", "labels_path")):
            if paths.get(key) is not None:
                kw[name] = str(paths[key])
        if "smooth" in d:
            kw["smooth_window"] = int(d.pop("smooth")["window"])
        if "fir" in d:
            fir = d.pop("fir")
            if "taps" in fir:
                kw["fir_taps"] = int(fir["taps"])
            kw["fir_cutoff_hz"] = fir.get("cutoff_hz")
        if "model" in d:
            m = d.pop("model")
            if "kinds" in m:
                kw["models"] = tuple(m["kinds"])
            if "kind" in m:
                kw["models"] = (m["kind"],)
            if "fusion" in m:
                kw["fusion"] = m["fusion"]
        if "split" in d:
            s = d.pop("split")
            kw["split"] = (s["train"], s.get("val", 0.0), s["test"]) if isinstance(s, dict) else tuple(s)
        if "balance" in d:
            b = d.pop("balance")
            kw["balance"] = bool(b.get("enabled", True))
            kw["linkage_threshold"] = b.get("linkage_threshold")
            kw["knn"] = int(b.get("knn", bal.DEFAULT_KNN))
        if "train" in d:
            kw["train"] = TrainConfig.from_dict(d.pop("train"))
        for key in ("channel", "seed", "jobs"):
            if key in d:
                kw[key] = d.pop(key)
        if d:
            raise ValidationError(f"unknown config key(s): {sorted(d)}")
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


# --------------------------------------------------------------------------
# artifact helpers


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _run_stage(cfg: PipelineConfig, name: str, settings, inputs, outputs, fn) -> bool:
    """Run ``fn`` unless the recorded input hash and output hashes still match.

    Returns True when the stage actually ran.
    """
    h = hashlib.sha256(json.dumps(settings, sort_keys=True, default=str).encode())
    for p in sorted(Path(i) for i in inputs):
        h.update(str(p).encode())
        h.update(_sha256(p).encode())
    key = h.hexdigest()
    meta_path = cfg.out / "stages" / f"{name}.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        if meta.get("key") == key and all(
            Path(p).exists() and _sha256(Path(p)) == digest for p, digest in meta.get("outputs", {}).items()
        ):
            log.debug("stage %s up to date", name)
            return False
    try:
        fn()
    except VitalForgeError as exc:
        raise StageError(name, exc) from exc
    _dump_json(meta_path, {"key": key, "outputs": {str(p): _sha256(Path(p)) for p in outputs}})
    return True


# --------------------------------------------------------------------------
# ingest


@dataclass
class StayTable:
    stay_ids: list
    subject_ids: list
    admit: list
    labels: np.ndarray
    series: np.ndarray  # (N, 48, K) forward-filled
    channels: list
    dropped_rows: int = 0

    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.stay_ids)}

    def to_json(self) -> dict:
        return {
            "channels": self.channels,
            "dropped_rows": self.dropped_rows,
            "stays": [
                {
                    "stay_id": s,
                    "subject_id": subj,
                    "admit": a,
                    "label": int(y),
                    "series": x.tolist(),
                }
                for s, subj, a, y, x in zip(self.stay_ids, self.subject_ids, self.admit, self.labels, self.series)
            ],
        }

    @classmethod
    def from_json(cls, doc) -> "StayTable":
        st = doc["stays"]
        k = len(doc["channels"])
        return cls(
            [s["stay_id"] for s in st],
            [s["subject_id"] for s in st],
            [s["admit"] for s in st],
            np.array([s["label"] for s in st], dtype=np.int64),
            np.array([s["series"] for s in st], dtype=np.float64).reshape(len(st), WINDOW_HOURS, k),
            list(doc["channels"]),
            int(doc["dropped_rows"]),
        )


def _read_labels(path: Path) -> dict:
    if not path.exists():
        raise MissingLabels(f"label file {path} not found")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {}
    for r in rows:
        y = int(r["y_true"])
        if y not in (0, 1):
            raise ValidationError(f"label for {r['stay_id']} is not 0/1")
        parse_start(r["admit_time"])
        out[r["stay_id"]] = (r["subject_id"], r["admit_time"], y)
    return out


def read_episode(path: Path, channels=None):
    """Parse one episode CSV into a ``(48, K)`` array with ``nan`` gaps.

    Rows whose hour is outside ``[0, 48)``, non-integral, repeated, or whose
    values are non-numeric are dropped. Returns ``(array, channels, dropped)``.
    """
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if not header or header[0] != "hour":
            raise ValidationError(f"{path} lacks an 'hour' header")
        names = header[1:]
        if channels is not None and names != list(channels):
            raise ValidationError(f"{path} has channels {names}, expected {list(channels)}")
        grid = np.full((WINDOW_HOURS, len(names)), np.nan)
        seen = set()
        dropped = 0
        for row in r:
            if not row:
                continue
            try:
                hour_f = float(row[0])
                if len(row) != len(names) + 1 or hour_f != int(hour_f):
                    raise ValueError
                hour = int(hour_f)
                vals = [math.nan if v.strip() == "" else float(v) for v in row[1:]]
                if any(math.isinf(v) for v in vals):
                    raise ValueError
            except ValueError:
                dropped += 1
                continue
            if not 0 <= hour < WINDOW_HOURS or hour in seen:
                dropped += 1
                continue
            seen.add(hour)
            grid[hour] = vals
    return grid, names, dropped


def forward_fill(grid: np.ndarray, channels) -> np.ndarray:
    """Carry the last observation forward; leading gaps take the channel's normal value."""
    out = grid.copy()
    for k, name in enumerate(channels):
        col = out[:, k]
        if np.isnan(col[0]):
            col[0] = NORMAL_VALUES.get(name, 0.0)
        for t in range(1, len(col)):
            if np.isnan(col[t]):
                col[t] = col[t - 1]
    return out


def ingest(cfg: PipelineConfig) -> StayTable:
    """Validated stays: one row per stay with a forward-filled 48 x K series."""
    labels = _read_labels(cfg.labels)
    files = sorted(cfg.episodes.glob("*.csv"))
    if not files:
        raise ValidationError(f"no episode files in {cfg.episodes}")
    stay_ids, subjects, admits, ys, series = [], [], [], [], []
    channels = None
    dropped = 0
    for f in files:
        sid = f.stem
        if sid not in labels:
            raise MissingLabels(f"stay {sid} has no label")
        grid, names, n_drop = read_episode(f, channels)
        channels = names
        dropped += n_drop
        subj, admit, y = labels[sid]
        stay_ids.append(sid)
        subjects.append(subj)
        admits.append(admit)
        ys.append(y)
        series.append(forward_fill(grid, names))
    if dropped:
        log.info("ingest dropped %d spurious rows", dropped)
    return StayTable(stay_ids, subjects, admits, np.array(ys, dtype=np.int64), np.array(series), channels, dropped)


# --------------------------------------------------------------------------
# waveform features


def _stay_features(args):
    stay_id, record_set, admit, cfg = args
    if record_set is None:
        return stay_id, None, "no waveform records"
    window = window_first_48h(record_set, parse_start(admit), channel=cfg.channel)
    if window.is_empty:
        return stay_id, None, "no samples inside the 48 h window"
    try:
        sig = prepare(window, cfg.smooth_window, cfg.fir_taps, cfg.fir_cutoff_hz)
        return stay_id, extract_features(sig).as_array(), None
    except (AllInvalid, TooShort) as exc:
        return stay_id, None, f"{type(exc).__name__}: {exc}"


def extract(cfg: PipelineConfig, stays: StayTable):
    """Features for every stay with usable waveform data in its window.

    Returns ``(stay_ids, matrix, labels, missing)`` where ``missing`` maps
    stay id to the reason no features exist.
    """
    sets = {s.subject_id: s for s in scan_matched_tree(cfg.cohort, jobs=cfg.jobs)}
    work = [(sid, sets.get(subj), admit, cfg) for sid, subj, admit in zip(stays.stay_ids, stays.subject_ids, stays.admit)]
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_stay_features, work))
    else:
        results = [_stay_features(w) for w in work]
    index = stays.index()
    ids, rows, labels, missing = [], [], [], {}
    for sid, feats, why in sorted(results, key=lambda r: r[0]):
        if feats is None:
            missing[sid] = why
            continue
        ids.append(sid)
        rows.append(feats)
        labels.append(int(stays.labels[index[sid]]))
    matrix = np.array(rows).reshape(len(rows), len(FEATURE_NAMES))
    return ids, matrix, np.array(labels, dtype=np.int64), missing


# --------------------------------------------------------------------------
# split


def _largest_remainder(fractions, total):
    return list(bal.largest_remainder(fractions, total)) if total else [0] * len(fractions)


def split(stays: StayTable, fractions=(0.85, 0.15), seed=0) -> list[list[str]]:
    """Partition stays by patient into ``len(fractions)`` parts.

    Patients are shuffled within their class (a patient counts as deceased if
    any of its stays is), interleaved so every contiguous chunk has about the
    cohort's class ratio, then cut into chunks whose patient counts follow
    ``fractions`` by largest remainder. Raises ``DegenerateSplit`` when a
    part with positive fraction ends up without both classes.
    """
    by_patient: dict[str, list[int]] = {}
    for i, subj in enumerate(stays.subject_ids):
        by_patient.setdefault(subj, []).append(i)
    patients = sorted(by_patient)
    plabel = {p: int(max(stays.labels[i] for i in by_patient[p])) for p in patients}
    classes = {c: [p for p in patients if plabel[p] == c] for c in (0, 1)}
    if min(len(v) for v in classes.values()) < 2:
        raise DegenerateSplit("need at least two patients of each class")
    rng = np.random.default_rng(seed)
    keyed = []
    for c in (0, 1):
        members = [classes[c][j] for j in rng.permutation(len(classes[c]))]
        n_c = len(members)
        keyed.extend(((j + 0.5) / n_c, c, p) for j, p in enumerate(members))
    order = [p for _, _, p in sorted(keyed)]
    sizes = _largest_remainder(fractions, len(order))
    parts, pos = [], 0
    for frac, size in zip(fractions, sizes):
        chunk = order[pos : pos + size]
        pos += size
        if frac > 0 and len({plabel[p] for p in chunk}) < 2:
            raise DegenerateSplit(f"a part with fraction {frac} lacks one class")
        parts.append(sorted(stays.stay_ids[i] for p in chunk for i in by_patient[p]))
    return parts


# --------------------------------------------------------------------------
# model inputs


def _zscore_fit(x, axis=0):
    mu = x.mean(axis=axis)
    sd = x.std(axis=axis)
    sd = np.where(sd > 0, sd, 1.0)
    return mu, sd


def clinical_summary(series: np.ndarray) -> np.ndarray:
    """Per channel: mean, std, min, max, first and last value -> ``(N, 6K)``."""
    stats = [
        series.mean(axis=1),
        series.std(axis=1),
        series.min(axis=1),
        series.max(axis=1),
        series[:, 0],
        series[:, -1],
    ]
    return np.concatenate(stats, axis=1)


@dataclass
class PreparedData:
    train: ModelData
    val: ModelData
    test: ModelData


def build_model_data(stays: StayTable, features, parts) -> PreparedData:
    """Standardise inputs with training statistics and assemble ``ModelData`` per part.

    Waveform inputs are the twelve standardised features plus a presence
    flag; stays without waveform data get zeros and flag 0.
    """
    train_ids, val_ids, test_ids = parts
    idx = stays.index()
    f_ids, f_matrix, _ = features
    f_index = {s: i for i, s in enumerate(f_ids)}

    tr = [idx[s] for s in train_ids]
    mu_s, sd_s = _zscore_fit(stays.series[tr].reshape(-1, stays.series.shape[2]))
    summary = clinical_summary(stays.series)
    mu_c, sd_c = _zscore_fit(summary[tr])
    tr_feat = [f_index[s] for s in train_ids if s in f_index]
    if tr_feat:
        mu_w, sd_w = _zscore_fit(f_matrix[tr_feat])
    else:
        mu_w, sd_w = np.zeros(len(FEATURE_NAMES)), np.ones(len(FEATURE_NAMES))

    def assemble(ids):
        rows = [idx[s] for s in ids]
        wf = np.zeros((len(ids), N_WAVEFORM_INPUTS))
        for j, s in enumerate(ids):
            if s in f_index:
                wf[j, :-1] = (f_matrix[f_index[s]] - mu_w) / sd_w
                wf[j, -1] = 1.0
        return ModelData(
            (stays.series[rows] - mu_s) / sd_s,
            (summary[rows] - mu_c) / sd_c,
            stays.labels[rows].astype(np.float64),
            wf,
            tuple(ids),
        )

    return PreparedData(assemble(train_ids), assemble(val_ids), assemble(test_ids))


def _flatten_inputs(d: ModelData) -> np.ndarray:
    return np.hstack([d.seq.reshape(len(d), -1), d.static, d.wf])


def _unflatten_inputs(rows, labels, ids, template: ModelData) -> ModelData:
    n = len(rows)
    t, k = template.seq.shape[1:]
    n_seq = t * k
    n_static = template.static.shape[1]
    return ModelData(
        rows[:, :n_seq].reshape(n, t, k),
        rows[:, n_seq : n_seq + n_static],
        np.asarray(labels, dtype=np.float64),
        rows[:, n_seq + n_static :],
        tuple(ids),
    )


def balance_training(d: ModelData, cfg: PipelineConfig) -> ModelData:
    """A-SUWO over the joint per-stay input vector (series, summary and waveform inputs)."""
    lm = bal.LabeledMatrix(_flatten_inputs(d), d.y.astype(np.int64), d.stay_ids)
    out = bal.balance_dataset(lm, seed=cfg.seed, linkage_threshold=cfg.linkage_threshold, k=cfg.knn)
    return _unflatten_inputs(out.rows, out.labels, out.stay_ids, d)


# --------------------------------------------------------------------------
# orchestration


class Pipeline:
    """Stage runner bound to one configuration."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = cfg.out
        self.out.mkdir(parents=True, exist_ok=True)

    # artifact locations
    @property
    def stays_path(self):
        return self.out / "ingest" / "stays.json"

    @property
    def features_path(self):
        return self.out / "extract" / "features.csv"

    @property
    def missing_path(self):
        return self.out / "extract" / "missing.json"

    @property
    def split_path(self):
        return self.out / "split" / "split.json"

    @property
    def balanced_path(self):
        return self.out / "balance" / "train.json"

    @property
    def audit_path(self):
        return self.out / "audit.json"

    def checkpoint_path(self, kind, fusion):
        return self.out / "train" / f"{kind}-{fusion}.ckpt.json"

    def history_path(self, kind, fusion):
        return self.out / "train" / f"{kind}-{fusion}.history.json"

    def scores_path(self, kind, fusion):
        return self.out / "eval" / f"scores-{kind}-{fusion}.csv"

    # stages
    def run_ingest(self):
        cfg = self.cfg
        inputs = sorted(cfg.episodes.glob("*.csv")) + ([cfg.labels] if cfg.labels.exists() else [])

        def go():
            table = ingest(cfg)
            _dump_json(self.stays_path, table.to_json())

        _run_stage(cfg, "ingest", {"v": 1}, inputs, [self.stays_path], go)
        return self.load_stays()

    def load_stays(self) -> StayTable:
        return StayTable.from_json(json.loads(self.stays_path.read_text()))

    def run_extract(self):
        cfg = self.cfg
        self.run_ingest()
        tree = sorted(cfg.cohort.glob("matched/**/*.vfr")) if (cfg.cohort / "matched").is_dir() else sorted(cfg.cohort.glob("**/*.vfr"))
        settings = {"channel": cfg.channel, "smooth": cfg.smooth_window, "taps": cfg.fir_taps, "cutoff": cfg.fir_cutoff_hz}

        def go():
            stays = self.load_stays()
            ids, matrix, labels, missing = extract(cfg, stays)
            self.features_path.parent.mkdir(parents=True, exist_ok=True)
            write_feature_csv(self.features_path, ids, matrix, labels)
            _dump_json(self.missing_path, missing)

        _run_stage(cfg, "extract", settings, tree + [self.stays_path], [self.features_path, self.missing_path], go)
        return read_feature_csv(self.features_path)

    def run_split(self):
        cfg = self.cfg
        self.run_ingest()

        def go():
            parts = split(self.load_stays(), cfg.split, cfg.seed)
            _dump_json(self.split_path, dict(zip(("train", "val", "test"), parts)))

        _run_stage(cfg, "split", {"split": cfg.split, "seed": cfg.seed}, [self.stays_path], [self.split_path], go)
        return self.load_split()

    def load_split(self):
        doc = json.loads(self.split_path.read_text())
        return [doc["train"], doc["val"], doc["test"]]

    def prepared(self) -> PreparedData:
        features = self.run_extract()
        parts = self.run_split()
        return build_model_data(self.load_stays(), features, parts)

    def _audit(self, stage, ids):
        test = set(self.load_split()[2])
        leaked = sorted(set(ids) & test)
        if leaked:
            raise ValidationError(f"test stays entered {stage}: {leaked[:5]}")
        doc = json.loads(self.audit_path.read_text()) if self.audit_path.exists() else {}
        doc[stage] = sorted(set(ids))
        _dump_json(self.audit_path, doc)

    def run_balance(self):
        cfg = self.cfg
        data = self.prepared()
        settings = {"enabled": cfg.balance, "seed": cfg.seed, "threshold": cfg.linkage_threshold, "knn": cfg.knn}

        def go():
            self._audit("balance", data.train.stay_ids)
            d = balance_training(data.train, cfg) if cfg.balance else data.train
            _dump_json(
                self.balanced_path,
                {"stay_ids": list(d.stay_ids), "labels": d.y.astype(int).tolist(), "rows": _flatten_inputs(d).tolist()},
            )

        inputs = [self.features_path, self.split_path, self.stays_path]
        _run_stage(cfg, "balance", settings, inputs, [self.balanced_path], go)
        doc = json.loads(self.balanced_path.read_text())
        rows = np.array(doc["rows"], dtype=np.float64)
        return _unflatten_inputs(rows, doc["labels"], doc["stay_ids"], data.train), data

    def run_train(self, kind, fusion):
        cfg = self.cfg
        train_set, data = self.run_balance()
        ckpt = self.checkpoint_path(kind, fusion)
        hist = self.history_path(kind, fusion)
        settings = {"kind": kind, "fusion": fusion, "train": cfg.train.to_dict()}

        def go():
            originals = [s for s in train_set.stay_ids if not s.startswith("synthetic-")]
            self._audit(f"train/{kind}-{fusion}", originals + list(data.val.stay_ids))
            train_in = train_set if fusion == "waveform" else replace(train_set, wf=None)
            val_in = data.val if fusion == "waveform" else replace(data.val, wf=None)
            params, history = train(kind, fusion, train_in, val_in if len(val_in) else None, cfg.train)
            ckpt.parent.mkdir(parents=True, exist_ok=True)
            checkpoint.save_checkpoint(ckpt, params, {"kind": kind, "fusion": fusion})
            _dump_json(hist, history)

        inputs = [self.balanced_path, self.features_path, self.split_path, self.stays_path]
        _run_stage(cfg, f"train-{kind}-{fusion}", settings, inputs, [ckpt, hist], go)
        params, _ = checkpoint.load_checkpoint(ckpt)
        return params

    def run_eval(self, kind, fusion):
        cfg = self.cfg
        params = self.run_train(kind, fusion)
        data = self.prepared()
        path = self.scores_path(kind, fusion)

        def go():
            test = data.test if fusion == "waveform" else replace(data.test, wf=None)
            scores = predict(params, test)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("stay_id", "label", "score"))
                for sid, y, s in zip(test.stay_ids, test.y, scores):
                    w.writerow((sid, int(y), f"{s:.17g}"))

        inputs = [self.checkpoint_path(kind, fusion), self.features_path, self.split_path, self.stays_path]
        _run_stage(cfg, f"eval-{kind}-{fusion}", {"v": 1}, inputs, [path], go)
        return read_scores(path)

    def run_benchmark(self) -> EvalReport:
        """Train and evaluate the clinical-only and fusion variant of every configured model."""
        for kind in self.cfg.models:
            for fusion in ("none", "waveform"):
                self.run_eval(kind, fusion)
        return self.write_report()

    def write_report(self) -> EvalReport:
        rep = regenerate_report(self.out)
        (self.out / "report.txt").write_text(rep.to_text())
        (self.out / "report.csv").write_text(rep.to_csv())
        return rep


def read_scores(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (
        [r["stay_id"] for r in rows],
        np.array([int(r["label"]) for r in rows]),
        np.array([float(r["score"]) for r in rows]),
    )


def regenerate_report(out_dir, models=MODEL_KINDS) -> EvalReport:
    """Rebuild the fusion vs clinical-only report from persisted test scores."""
    out = Path(out_dir)
    ours, base = {}, {}
    for kind in models:
        paths = {f: out / "eval" / f"scores-{kind}-{f}.csv" for f in ("waveform", "none")}
        if not all(p.exists() for p in paths.values()):
            continue
        metrics = {}
        for f, p in paths.items():
            _, y, s = read_scores(p)
            metrics[f] = (auc_roc(s, y), auc_pr(s, y))
        ours[MODEL_TITLES[kind]] = metrics["waveform"]
        base[MODEL_TITLES[kind]] = metrics["none"]
    if not ours:
        raise ValidationError(f"no paired score files under {out / 'eval'}")
    return report(ours, base, ours_label="With waveform", baseline_label="Clinical only")


def run_benchmark(config: PipelineConfig | dict) -> EvalReport:
    """Run every stage for ``config`` and return the comparison report."""
    if isinstance(config, dict):
        config = PipelineConfig.from_dict(config)
    return Pipeline(config).run_benchmark()


def config_hash(cfg: PipelineConfig) -> str:
    return hashlib.sha256(json.dumps(cfg.to_dict(), sort_keys=True).encode()).hexdigest()


__all__ = [
    "Pipeline",
    "PipelineConfig",
    "StayTable",
    "build_model_data",
    "extract",
    "ingest",
    "regenerate_report",
    "run_benchmark",
    "split",
]
