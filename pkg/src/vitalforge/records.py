"""Reading and organising matched-subset style record trees.

A tree looks like ``matched/p00/p000123/p000123-2130-01-01-08-30.vfr``. Each
file holds a single channel in the VFR1 text format::

    #VFR1 subject=p000123 start=2130-01-01T08:30 fs=0.5 channel=HR n=3
    71.0
    nan
    72.5

A numeric record shares its waveform partner's stem with ``n`` appended.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import (
    BadTimestamp,
    DuplicateStem,
    MalformedHeader,
    RootNotFound,
    SampleCountMismatch,
    ValidationError,
)

log = logging.getLogger(__name__)

MAGIC = "#VFR1"
EXTENSION = ".vfr"
WINDOW_HOURS = 48

_SUBJECT_RE = re.compile(r"^p\d{6}$")
_STEM_RE = re.compile(
    r"^(?P<subject>p\d{6})-(?P<Y>\d{4})-(?P<M>\d{2})-(?P<D>\d{2})-(?P<h>\d{2})-(?P<m>\d{2})(?P<numeric>n?)$"
)
_START_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2})$")
_HEADER_KEYS = ("subject", "start", "fs", "channel", "n")


def make_timestamp(year, month, day, hour, minute):
    """Build a surrogate timestamp, raising ``BadTimestamp`` on any out-of-range field."""
    for name, value, lo, hi in (
        ("month", month, 1, 12),
        ("day", day, 1, 31),
        ("hour", hour, 0, 23),
        ("minute", minute, 0, 59),
    ):
        if not lo <= value <= hi:
            raise BadTimestamp(f"{name}={value} outside [{lo}, {hi}]")
    try:
        return dt.datetime(year, month, day, hour, minute)
    except ValueError as exc:
        raise BadTimestamp(str(exc)) from None


def format_start(ts: dt.datetime) -> str:
    return f"{ts.year:04d}-{ts.month:02d}-{ts.day:02d}T{ts.hour:02d}:{ts.minute:02d}"


def parse_start(text: str) -> dt.datetime:
    m = _START_RE.match(text)
    if m is None:
        raise MalformedHeader(f"unparseable start timestamp {text!r}")
    return make_timestamp(*(int(g) for g in m.groups()))


def record_stem(subject_id: str, start: dt.datetime, numeric: bool = False) -> str:
    """File stem following the ``pXXNNNN-YYYY-MM-DD-hh-mm[n]`` scheme."""
    stem = f"{subject_id}-{start.year:04d}-{start.month:02d}-{start.day:02d}-{start.hour:02d}-{start.minute:02d}"
    return stem + "n" if numeric else stem


def record_path(root, subject_id: str, start: dt.datetime, numeric: bool = False) -> Path:
    """Location of a record inside ``root/matched/pXX/<subject>/``."""
    return Path(root) / "matched" / subject_id[:3] / subject_id / (record_stem(subject_id, start, numeric) + EXTENSION)


@dataclass(frozen=True)
class RecordHeader:
    subject_id: str
    start: dt.datetime
    fs_hz: float
    channel: str
    n_samples: int

    def __post_init__(self):
        if not _SUBJECT_RE.match(self.subject_id):
            raise MalformedHeader(f"subject id {self.subject_id!r} is not of the form pXXNNNN")
        if not (math.isfinite(self.fs_hz) and 0 < self.fs_hz <= 1000):
            raise MalformedHeader(f"fs={self.fs_hz} outside (0, 1000]")
        if self.n_samples < 0:
            raise MalformedHeader(f"negative sample count {self.n_samples}")
        if not self.channel or any(c.isspace() for c in self.channel):
            raise MalformedHeader(f"bad channel label {self.channel!r}")

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs_hz

    def to_line(self) -> str:
        return (
            f"{MAGIC} subject={self.subject_id} start={format_start(self.start)} "
            f"fs={self.fs_hz!r} channel={self.channel} n={self.n_samples}"
        )


@dataclass(frozen=True, eq=False)
class WaveformRecord:
    """One parsed record. ``nan`` marks undefined samples; zeros are kept as zeros."""

    header: RecordHeader
    samples: np.ndarray
    name: str = ""

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or len(samples) != self.header.n_samples:
            raise SampleCountMismatch(f"header declares n={self.header.n_samples} but {samples.size} samples given")
        if not self.name:
            object.__setattr__(self, "name", record_stem(self.header.subject_id, self.header.start))

    def __eq__(self, other):
        if not isinstance(other, WaveformRecord):
            return NotImplemented
        return (
            self.header == other.header
            and self.name == other.name
            and np.array_equal(self.samples, other.samples, equal_nan=True)
        )

    def __hash__(self):
        return hash((self.header, self.name))

    def __len__(self):
        return len(self.samples)

    @property
    def fs_hz(self) -> float:
        return self.header.fs_hz

    @property
    def is_empty(self) -> bool:
        return len(self.samples) == 0

    @property
    def is_numeric(self) -> bool:
        return self.name.endswith("n")

    def sample_times(self) -> np.ndarray:
        """Seconds since ``header.start`` for every sample."""
        return np.arange(len(self.samples)) / self.header.fs_hz


@dataclass(frozen=True)
class RecordPair:
    waveform: WaveformRecord
    numeric: WaveformRecord | None = None

    def __post_init__(self):
        if self.numeric is not None:
            if self.numeric.name != self.waveform.name + "n":
                raise ValidationError(f"numeric {self.numeric.name!r} does not pair with {self.waveform.name!r}")
            if self.numeric.header.subject_id != self.waveform.header.subject_id:
                raise ValidationError("paired records disagree on subject id")

    @property
    def start(self) -> dt.datetime:
        return self.waveform.header.start


@dataclass(frozen=True)
class PatientRecordSet:
    subject_id: str
    pairs: tuple[RecordPair, ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        for p in self.pairs:
            if p.waveform.header.subject_id != self.subject_id:
                raise ValidationError(f"record {p.waveform.name} does not belong to {self.subject_id}")
        starts = [p.start for p in self.pairs]
        if starts != sorted(starts):
            raise ValidationError("record pairs are not in chronological order")


class RecordSets(list):
    """List of ``PatientRecordSet`` that also carries what the scan skipped.

    ``skipped`` holds ``(path, reason)`` tuples.
    """

    def __init__(self, sets=(), skipped=()):
        super().__init__(sets)
        self.skipped = list(skipped)

    @property
    def n_skipped(self) -> int:
        return len(self.skipped)


# --------------------------------------------------------------------------
# text format


def serialize_record(record: WaveformRecord) -> bytes:
    lines = [record.header.to_line()]
    lines.extend("nan" if math.isnan(v) else repr(v) for v in record.samples.tolist())
    return ("\n".join(lines) + "\n").encode("ascii")


def parse_record(data: bytes | str, name: str = "") -> WaveformRecord:
    """Decode a VFR1 record.

    Parameters
    ----------
    data : bytes or str
        Full file contents.
    name : str, optional
        File stem. Defaults to the waveform stem implied by the header.

    Raises
    ------
    MalformedHeader
        Missing magic, missing or unparseable header field.
    BadTimestamp
        A start-time field is out of range.
    SampleCountMismatch
        The number of sample lines differs from ``n``.
    """
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data
    head, _, body = text.partition("\n")
    tokens = head.split()
    if not tokens or tokens[0] != MAGIC:
        raise MalformedHeader(f"missing {MAGIC} magic")
    fields = {}
    for tok in tokens[1:]:
        key, eq, value = tok.partition("=")
        if not eq or key in fields:
            raise MalformedHeader(f"bad header token {tok!r}")
        fields[key] = value
    missing = [k for k in _HEADER_KEYS if k not in fields]
    if missing:
        raise MalformedHeader(f"header missing field(s): {', '.join(missing)}")
    try:
        fs = float(fields["fs"])
        n = int(fields["n"])
    except ValueError:
        raise MalformedHeader(f"unparseable fs/n in {head!r}") from None
    header = RecordHeader(
        subject_id=fields["subject"],
        start=parse_start(fields["start"]),
        fs_hz=fs,
        channel=fields["channel"],
        n_samples=n,
    )
    lines = body.split()
    if len(lines) != n:
        raise SampleCountMismatch(f"header declares n={n} but {len(lines)} sample lines follow")
    try:
        samples = np.array([float(v) for v in lines], dtype=np.float64)
    except ValueError as exc:
        raise MalformedHeader(f"bad sample value: {exc}") from None
    if np.isinf(samples).any():
        raise MalformedHeader("infinite sample value")
    return WaveformRecord(header, samples, name=name)


def read_record(path) -> WaveformRecord:
    path = Path(path)
    return parse_record(path.read_bytes(), name=path.name[: -len(EXTENSION)])


def write_record(record: WaveformRecord, root) -> Path:
    """Write ``record`` to its canonical location under ``root``; returns the path."""
    h = record.header
    path = Path(root) / "matched" / h.subject_id[:3] / h.subject_id / (record.name + EXTENSION)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize_record(record))
    return path


# --------------------------------------------------------------------------
# tree scanning


def pair_numeric(records: Iterable[WaveformRecord]) -> list[RecordPair]:
    """Attach each numeric record to the waveform whose stem plus ``n`` equals its stem.

    Unpartnered numeric records are dropped. Pairs come back in the input
    order of their waveform records.
    """
    by_stem: dict[str, WaveformRecord] = {}
    for r in records:
        if r.name in by_stem:
            raise DuplicateStem(r.name)
        by_stem[r.name] = r
    subjects = {r.header.subject_id for r in by_stem.values()}
    if len(subjects) > 1:
        raise ValidationError(f"records from several subjects: {sorted(subjects)}")
    return [
        RecordPair(r, by_stem.get(stem + "n"))
        for stem, r in by_stem.items()
        if not r.is_numeric
    ]


def _matched_dir(root: Path) -> Path:
    if (root / "matched").is_dir():
        return root / "matched"
    return root


def _candidate_files(matched: Path, skipped: list):
    """Yield ``(subject_dir_name, path, stem_match)`` for files under pXX/<subject>/."""
    for inter in sorted(matched.iterdir()):
        if not (inter.is_dir() and re.fullmatch(r"p0\d", inter.name)):
            skipped.append((str(inter), "not an intermediate pXX directory"))
            continue
        for subj in sorted(inter.iterdir()):
            if not (subj.is_dir() and _SUBJECT_RE.match(subj.name) and subj.name[:3] == inter.name):
                skipped.append((str(subj), "not a subject directory"))
                continue
            for f in sorted(subj.iterdir()):
                m = _STEM_RE.match(f.stem) if f.suffix == EXTENSION else None
                if m is None or m["subject"] != subj.name:
                    skipped.append((str(f), "non-conforming file name"))
                    continue
                yield subj.name, f, m


def _load(item):
    subj, path, m = item
    try:
        rec = read_record(path)
    except (ValidationError, UnicodeDecodeError) as exc:
        return subj, path, None, f"unreadable: {exc}"
    h = rec.header
    expected = record_stem(h.subject_id, h.start, bool(m["numeric"]))
    if expected != rec.name:
        return subj, path, None, "header disagrees with file name"
    return subj, path, rec, None


def scan_matched_tree(root, jobs: int = 1) -> RecordSets:
    """Parse every record under ``root`` into per-patient chronological sets.

    ``root`` may be the directory containing ``matched/`` or ``matched/``
    itself. Files that do not follow the naming scheme, fail to parse, or are
    numeric records without a waveform partner are skipped and listed in the
    result's ``skipped`` attribute. Output is sorted by subject id whatever
    ``jobs`` is.
    """
    root = Path(root)
    if not root.is_dir():
        raise RootNotFound(str(root))
    skipped: list = []
    items = list(_candidate_files(_matched_dir(root), skipped))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            loaded = list(pool.map(_load, items))
    else:
        loaded = [_load(it) for it in items]

    per_subject: dict[str, list[tuple[Path, WaveformRecord]]] = {}
    for subj, path, rec, why in loaded:
        if rec is None:
            skipped.append((str(path), why))
            continue
        per_subject.setdefault(subj, []).append((path, rec))

    sets = []
    for subj in sorted(per_subject):
        entries = per_subject[subj]
        recs = [r for _, r in entries]
        pairs = pair_numeric(recs)
        attached = {p.numeric.name for p in pairs if p.numeric is not None}
        for path, r in entries:
            if r.is_numeric and r.name not in attached:
                skipped.append((str(path), "numeric record without waveform partner"))
        if not pairs:
            continue
        pairs.sort(key=lambda p: (p.start, p.waveform.name))
        sets.append(PatientRecordSet(subj, pairs))
    skipped.sort()
    if skipped:
        log.info("scan of %s skipped %d entries", root, len(skipped))
    return RecordSets(sets, skipped)


# --------------------------------------------------------------------------
# admission windows


def window_first_48h(
    record_set: PatientRecordSet,
    admit: dt.datetime,
    fs_target: float | None = None,
    channel: str | None = None,
    hours: float = WINDOW_HOURS,
) -> WaveformRecord:
    """Samples falling in ``[admit, admit + hours)`` laid on one uniform grid.

    The grid starts at ``admit`` with spacing ``1 / fs_target``. Grid points
    covered by a record take the sample in effect at that time (the most recent
    sample at or before it); points between records are ``nan``. The result is
    cut after the last covered grid point, so gaps before the first record are
    kept as ``nan`` but trailing gaps are not. ``fs_target`` defaults to the
    rate of the first record that reaches into the window.

    Only waveform records are used; ``channel`` restricts them further.
    An empty result is a valid, zero-length record (``is_empty``).
    """
    records = [p.waveform for p in record_set.pairs]
    if channel is not None:
        records = [r for r in records if r.header.channel == channel]
    window_s = hours * 3600.0

    def offset_s(r):
        return (r.header.start - admit).total_seconds()

    overlapping = [r for r in records if offset_s(r) < window_s and offset_s(r) + r.header.duration_s > 0 and len(r)]
    if fs_target is None:
        fs_target = overlapping[0].fs_hz if overlapping else 1.0
    n_grid = math.ceil(window_s * fs_target - 1e-9)
    grid = np.full(n_grid, np.nan)
    last = -1
    for r in overlapping:
        off = offset_s(r)
        # grid points j with off <= j/fs_target < off + duration
        lo = max(0, math.ceil((off * fs_target) - 1e-9))
        hi = min(n_grid, math.ceil((off + r.header.duration_s) * fs_target - 1e-9))
        if hi <= lo:
            continue
        j = np.arange(lo, hi)
        idx = np.floor((j / fs_target - off) * r.fs_hz + 1e-9).astype(np.int64)
        idx = np.clip(idx, 0, len(r) - 1)
        vals = r.samples[idx]
        # a held sample taken before admission does not count as in-window
        vals = np.where(off + idx / r.fs_hz < -1e-9, np.nan, vals)
        grid[lo:hi] = vals
        last = max(last, hi - 1)
    samples = grid[: last + 1]
    header = RecordHeader(
        subject_id=record_set.subject_id,
        start=admit,
        fs_hz=float(fs_target),
        channel=channel or (overlapping[0].header.channel if overlapping else "HR"),
        n_samples=len(samples),
    )
    return WaveformRecord(header, samples, name=record_stem(record_set.subject_id, admit) + "-w48")

