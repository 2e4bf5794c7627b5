"""Seeded synthetic cohorts standing in for a matched waveform subset plus clinical episodes.

Layout written under ``out_dir``::

    matched/pXX/<subject>/<subject>-YYYY-MM-DD-hh-mm[n].vfr
    episodes/<stay_id>.csv     hour,<channel>,...   (48 hourly rows, blanks = missing)
    labels.csv                 stay_id,subject_id,admit_time,y_true
    truth.json                 generative parameters per stay
    manifest.json              spec, counts and every written path

Heart rate is an AR(1) process around a per-patient baseline. Deceased stays
get variability multiplied by ``1 + effect_size`` and an upward drift over
the second half of the 48-hour window proportional to ``effect_size``, so
``effect_size=0`` plants no waveform signal at all.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import IoFailure, ValidationError, VerificationFailure
from .records import WINDOW_HOURS, RecordHeader, WaveformRecord, format_start, record_stem, scan_matched_tree, write_record

CLINICAL_CHANNELS = (
    # name, normal value, spread, direction of deterioration
    ("heart_rate", 80.0, 10.0, 1.0),
    ("mean_bp", 85.0, 10.0, -1.0),
    ("resp_rate", 16.0, 4.0, 1.0),
    ("spo2", 97.0, 2.0, -1.0),
    ("temperature", 37.0, 0.6, 1.0),
)
ARTIFACT_RATE = 0.02
AR_TIME_CONSTANT_S = 30.0
DRIFT_BPM = 6.0
BAIT_OFFSET_BPM = 15.0


def channel_table(k: int):
    """``(name, normal, spread, direction)`` for ``k`` clinical channels."""
    if k <= len(CLINICAL_CHANNELS):
        return CLINICAL_CHANNELS[:k]
    extra = tuple((f"channel_{i}", 0.0, 1.0, 1.0) for i in range(len(CLINICAL_CHANNELS), k))
    return CLINICAL_CHANNELS + extra


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class CohortSpec:
    n_patients: int = 100
    deceased_fraction: float = 0.3
    waveform_coverage: float = 0.132
    effect_size: float = 1.0
    seed: int = 0
    fs_choices: tuple[float, ...] = (0.17, 0.25, 0.5, 1.0)
    n_channels: int = 5
    clinical_effect: float = 0.2
    missing_rate: float = 0.1
    record_hours: tuple[float, float] = (1.0, 3.0)
    numeric_fraction: float = 0.5
    bait_fraction: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "fs_choices", tuple(float(f) for f in self.fs_choices))
        object.__setattr__(self, "record_hours", tuple(float(h) for h in self.record_hours))
        if self.n_patients < 4:
            raise ValidationError("a cohort needs at least 4 patients")
        for name in ("deceased_fraction", "waveform_coverage", "missing_rate", "numeric_fraction", "bait_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValidationError(f"{name} must lie in [0, 1]")
        if self.effect_size < 0 or self.clinical_effect < 0:
            raise ValidationError("effect sizes must be nonnegative")
        if not self.fs_choices or not all(0.17 <= f <= 1.0 for f in self.fs_choices):
            raise ValidationError("fs choices must lie in [0.17, 1.0] Hz")
        if self.n_channels < 1:
            raise ValidationError("need at least one clinical channel")
        lo, hi = self.record_hours
        if not 0 < lo <= hi:
            raise ValidationError("record_hours must be (min, max) with 0 < min <= max")
        if self.n_patients > 10 * 9999:
            raise ValidationError("subject id space exhausted")

    @property
    def n_deceased(self) -> int:
        return round_half_up(self.deceased_fraction * self.n_patients)

    @property
    def n_with_waveform(self) -> int:
        return round_half_up(self.waveform_coverage * self.n_patients)

    def to_dict(self):
        d = asdict(self)
        d["fs_choices"] = list(self.fs_choices)
        d["record_hours"] = list(self.record_hours)
        return d

    @classmethod
    def from_dict(cls, d) -> "CohortSpec":
        return cls(**d)


@dataclass
class SyntheticTruth:
    stay_id: str
    subject_id: str
    label: int
    has_waveform: bool
    base_hr: float = 0.0
    variability: float = 0.0
    drift_bpm: float = 0.0
    fs_hz: float = 0.0
    records: list = field(default_factory=list)


def subject_id_for(index: int) -> str:
    """Spread subjects over the ten intermediate directories p00..p09."""
    return f"p{index % 10:02d}{index // 10 + 1:04d}"


def _hr_samples(rng, n, fs, base, sigma, t0_s, drift):
    phi = math.exp(-1.0 / (fs * AR_TIME_CONSTANT_S))
    noise = rng.standard_normal(n) * sigma * math.sqrt(1 - phi * phi)
    ar = lfilter([1.0], [1.0, -phi], noise)
    t_abs = t0_s + np.arange(n) / fs
    half = WINDOW_HOURS * 3600 / 2
    trend = drift * np.clip((t_abs - half) / half, 0.0, None)
    x = np.round(base + ar + trend, 1)
    u = rng.random(n)
    x[u < ARTIFACT_RATE] = np.nan
    x[(u >= ARTIFACT_RATE) & (u < 2 * ARTIFACT_RATE)] = 0.0
    return x


def _patient_records(rng, spec: CohortSpec, subject, admit, truth: SyntheticTruth):
    fs = float(rng.choice(spec.fs_choices))
    truth.fs_hz = fs
    lo, hi = spec.record_hours
    out = []
    n_rec = int(rng.integers(1, 3))
    offset_min = int(rng.integers(0, 30 * 60))
    for _ in range(n_rec):
        hours = float(rng.uniform(lo, hi))
        n = max(2, int(hours * 3600 * fs))
        start = admit + dt.timedelta(minutes=offset_min)
        x = _hr_samples(rng, n, fs, truth.base_hr, truth.variability, offset_min * 60.0, truth.drift_bpm)
        out.append((start, fs, x))
        gap_min = int(rng.integers(30, 4 * 60))
        offset_min += int(math.ceil(n / fs / 60.0)) + gap_min
    if rng.random() < spec.bait_fraction:
        # after the window; carries label information that windowing must exclude
        start_min = WINDOW_HOURS * 60 + int(rng.integers(60, 600))
        n = int(3600 * fs)
        bait_base = truth.base_hr + (BAIT_OFFSET_BPM if truth.label else 0.0)
        x = _hr_samples(rng, n, fs, bait_base, truth.variability * (3.0 if truth.label else 1.0), 0.0, 0.0)
        out.append((admit + dt.timedelta(minutes=start_min), fs, x))
    return out


def _episode_rows(rng, spec: CohortSpec, label: int):
    table = channel_table(spec.n_channels)
    t = np.arange(WINDOW_HOURS) / (WINDOW_HOURS - 1)
    rows = np.empty((WINDOW_HOURS, len(table)))
    sev = spec.clinical_effect * label
    for k, (_, normal, spread, direction) in enumerate(table):
        offset = rng.normal(0.0, 0.5 * spread)
        shift = direction * sev * spread * (0.5 + t)
        rows[:, k] = normal + offset + shift + rng.normal(0.0, 0.3 * spread, WINDOW_HOURS)
    rows = np.round(rows, 2)
    mask = rng.random(rows.shape) < spec.missing_rate
    rows[mask] = np.nan
    return rows


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def gen_cohort(spec: CohortSpec, out_dir) -> dict:
    """Write a full synthetic cohort under ``out_dir`` and return its manifest.

    Per-patient random streams are derived from ``(seed, patient index)``, so
    the output is byte-identical for a given spec.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "episodes").mkdir(exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc

    n = spec.n_patients
    top = np.random.default_rng([spec.seed, 0x5EED])
    deceased = np.zeros(n, dtype=np.int64)
    deceased[top.permutation(n)[: spec.n_deceased]] = 1
    covered = np.zeros(n, dtype=bool)
    covered[top.permutation(n)[: spec.n_with_waveform]] = True
    names = [c[0] for c in channel_table(spec.n_channels)]
    base_date = dt.datetime(2130, 1, 1)

    files, label_rows, truths = [], [], []
    n_records = n_numeric = 0
    try:
        for i in range(n):
            rng = np.random.default_rng([spec.seed, i])
            subject = subject_id_for(i)
            stay_id = f"{subject}_ep1"
            admit = base_date + dt.timedelta(days=int(rng.integers(0, 3650)), minutes=int(rng.integers(0, 24 * 60)))
            label = int(deceased[i])
            truth = SyntheticTruth(stay_id, subject, label, bool(covered[i]))
            truth.base_hr = float(np.round(rng.uniform(60, 100), 3))
            sigma = float(np.round(rng.uniform(2.0, 5.0), 3))
            truth.variability = sigma * (1 + spec.effect_size) if label else sigma
            truth.drift_bpm = DRIFT_BPM * spec.effect_size if label else 0.0

            episode = _episode_rows(rng, spec, label)
            ep_path = out / "episodes" / f"{stay_id}.csv"
            _write_csv(
                ep_path,
                ["hour", *names],
                [[h, *("" if math.isnan(v) else repr(float(v)) for v in row)] for h, row in enumerate(episode)],
            )
            files.append(ep_path)
            label_rows.append([stay_id, subject, format_start(admit), label])

            if covered[i]:
                for start, fs, x in _patient_records(rng, spec, subject, admit, truth):
                    rec = WaveformRecord(RecordHeader(subject, start, fs, "HR", len(x)), x)
                    files.append(write_record(rec, out))
                    truth.records.append(rec.name)
                    n_records += 1
                    if rng.random() < spec.numeric_fraction:
                        pulse = np.where(np.isfinite(x) & (x != 0), np.round(x + rng.normal(0, 0.5, len(x)), 1), x)
                        num = WaveformRecord(
                            RecordHeader(subject, start, fs, "PULSE", len(pulse)),
                            pulse,
                            name=record_stem(subject, start, numeric=True),
                        )
                        files.append(write_record(num, out))
                        n_numeric += 1
            truths.append(asdict(truth))

        _write_csv(out / "labels.csv", ["stay_id", "subject_id", "admit_time", "y_true"], label_rows)
        files.append(out / "labels.csv")
        (out / "truth.json").write_text(json.dumps(truths, indent=1, sort_keys=True) + "\n")
        files.append(out / "truth.json")

        manifest = {
            "format": "vitalforge-cohort",
            "version": 1,
            "spec": spec.to_dict(),
            "counts": {
                "patients": n,
                "stays": n,
                "deceased": int(deceased.sum()),
                "with_waveform": int(covered.sum()),
                "waveform_records": n_records,
                "numeric_records": n_numeric,
            },
            "files": sorted(str(p.relative_to(out)) for p in files),
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(f"writing cohort to {out} failed: {exc}") from exc
    return manifest


def _load_manifest(manifest, root):
    if isinstance(manifest, (str, Path)):
        path = Path(manifest)
        if path.is_dir():
            path = path / "manifest.json"
        if not path.exists():
            raise VerificationFailure(f"manifest {path} not found")
        return json.loads(path.read_text()), path.parent if root is None else Path(root)
    if root is None:
        raise ValueError("root is required when passing a manifest dict")
    return manifest, Path(root)


def verify_cohort(manifest, root=None) -> dict:
    """Re-read a generated cohort and check it against its manifest.

    ``manifest`` is a path to ``manifest.json`` (or its directory) or an
    already loaded dict together with ``root``. Returns ``{"ok": True,
    "checks": [...]}``; the first failed check raises ``VerificationFailure``.
    """
    doc, root = _load_manifest(manifest, root)
    spec = CohortSpec.from_dict(doc["spec"])
    counts = doc["counts"]
    checks = []

    def check(name, ok, detail):
        if not ok:
            raise VerificationFailure(f"{name}: {detail}")
        checks.append(name)

    for rel in doc["files"]:
        check("files_present", (root / rel).exists(), f"missing file {rel}")

    sets = scan_matched_tree(root)
    check("records_parse", sets.n_skipped == 0, f"unparseable or unpaired entries: {sets.skipped[:3]}")
    n_wave = sum(len(s.pairs) for s in sets)
    n_num = sum(p.numeric is not None for s in sets for p in s.pairs)
    check("record_counts", n_wave == counts["waveform_records"], f"{n_wave} waveform records, manifest says {counts['waveform_records']}")
    check("numeric_counts", n_num == counts["numeric_records"], f"{n_num} numeric records, manifest says {counts['numeric_records']}")
    fs_seen = {p.waveform.fs_hz for s in sets for p in s.pairs}
    check("fs_choices", fs_seen <= set(spec.fs_choices), f"unexpected rates {sorted(fs_seen - set(spec.fs_choices))}")

    target = spec.waveform_coverage * spec.n_patients
    check("coverage", abs(len(sets) - target) <= 1, f"{len(sets)} patients with waveforms, expected {target:g} +/- 1")

    with open(root / "labels.csv", newline="") as fh:
        labels = list(csv.DictReader(fh))
    check("label_count", len(labels) == spec.n_patients, f"{len(labels)} labels for {spec.n_patients} patients")
    n_dead = sum(int(r["y_true"]) for r in labels)
    check("label_ratio", n_dead == spec.n_deceased, f"{n_dead} deceased, expected {spec.n_deceased}")
    for r in labels:
        ep = root / "episodes" / f"{r['stay_id']}.csv"
        check("episodes_present", ep.exists(), f"missing episode file {ep.relative_to(root)}")
    return {"ok": True, "checks": sorted(set(checks))}
