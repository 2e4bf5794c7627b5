"""ROC / PR areas and the percent-difference comparison table."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.stats import rankdata

from .errors import KeyMismatch, NoPositives, OneClassOnly, ValidationError


@dataclass(frozen=True, eq=False)
class ScoredSet:
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64).ravel()
        y = np.asarray(self.labels).ravel()
        if s.shape != y.shape:
            raise ValidationError("scores and labels differ in length")
        if not np.isin(y, (0, 1)).all():
            raise ValidationError("labels must be binary 0/1")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "labels", y.astype(np.int64))

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def n_neg(self) -> int:
        return len(self.labels) - self.n_pos


def _as_scored(s, labels=None) -> ScoredSet:
    if isinstance(s, ScoredSet):
        return s
    return ScoredSet(s, labels)


def auc_roc(s, labels=None) -> float:
    """Mann-Whitney statistic ``P(score+ > score-) + P(tie) / 2`` via mid-ranks."""
    s = _as_scored(s, labels)
    n_pos, n_neg = s.n_pos, s.n_neg
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnly("AUC-ROC needs both classes")
    ranks = rankdata(s.scores, method="average")
    u = ranks[s.labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_pr(s, labels=None) -> float:
    """Average precision: ``sum_k (R_k - R_{k-1}) P_k`` over distinct thresholds.

    Tied scores form one threshold, so the result does not depend on the
    order of tied items.
    """
    s = _as_scored(s, labels)
    n_pos = s.n_pos
    if n_pos == 0:
        raise NoPositives("AUC-PR needs at least one positive")
    order = np.argsort(-s.scores, kind="stable")
    scores = s.scores[order]
    y = s.labels[order]
    tp = np.cumsum(y)
    # last index of each block of tied scores
    ends = np.flatnonzero(np.r_[scores[1:] != scores[:-1], True])
    tp = tp[ends].astype(np.float64)
    seen = (ends + 1).astype(np.float64)
    precision = tp / seen
    # dividing once at the end keeps an all-positive set at exactly 1
    new_tp = np.diff(np.r_[0.0, tp])
    return min(1.0, float(np.sum(new_tp * precision)) / n_pos)


def percent_difference(ours: float, baseline: float) -> float:
    """``100 * (ours - baseline) / baseline``."""
    if baseline == 0:
        raise ValidationError("baseline metric is zero")
    return 100.0 * (ours - baseline) / baseline


def format_percent(pct: float) -> str:
    text = f"{pct:+.2f}%"
    return "+0.00%" if text == "-0.00%" else text


@dataclass(frozen=True)
class ModelComparison:
    model: str
    auc_roc: float
    auc_pr: float
    baseline_auc_roc: float
    baseline_auc_pr: float

    @property
    def pct_roc(self) -> float:
        return percent_difference(self.auc_roc, self.baseline_auc_roc)

    @property
    def pct_pr(self) -> float:
        return percent_difference(self.auc_pr, self.baseline_auc_pr)


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[ModelComparison, ...]
    ours_label: str = "Ours"
    baseline_label: str = "Baseline"
    meta: Mapping[str, str] = field(default_factory=dict)

    def __getitem__(self, model: str) -> ModelComparison:
        for r in self.rows:
            if r.model == model:
                return r
        raise KeyError(model)

    def to_text(self) -> str:
        """Aligned table with the ours / baseline / percent-difference row triplets."""
        table = []
        for r in self.rows:
            table.append((self.ours_label, r.model, f"{r.auc_roc:.3f}", f"{r.auc_pr:.3f}"))
            table.append((self.baseline_label, r.model, f"{r.baseline_auc_roc:.3f}", f"{r.baseline_auc_pr:.3f}"))
            table.append(("Percent Difference", r.model, format_percent(r.pct_roc), format_percent(r.pct_pr)))
        head = ("Source", "Model", "AUC-ROC", "AUC-PR")
        widths = [max(len(row[i]) for row in (head, *table)) for i in range(4)]

        def line(row):
            return "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()

        rule = "  ".join("-" * w for w in widths)
        out = [line(head), rule]
        for i, row in enumerate(table):
            out.append(line(row))
            if i % 3 == 2:
                out.append(rule)
        return "\n".join(out) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("model", "auc_roc", "auc_pr", "pct_roc", "pct_pr"))
        for r in self.rows:
            w.writerow((r.model, f"{r.auc_roc:.17g}", f"{r.auc_pr:.17g}", f"{r.pct_roc:.2f}", f"{r.pct_pr:.2f}"))
        return buf.getvalue()


def report(
    ours: Mapping[str, tuple[float, float]],
    baseline: Mapping[str, tuple[float, float]],
    ours_label: str = "Ours",
    baseline_label: str = "Baseline",
) -> EvalReport:
    """Compare ``{model: (auc_roc, auc_pr)}`` mappings key by key.

    Raises ``KeyMismatch`` when the two mappings do not cover the same models.
    """
    if set(ours) != set(baseline):
        raise KeyMismatch(f"model keys differ: {sorted(set(ours) ^ set(baseline))}")
    rows = tuple(
        ModelComparison(k, float(ours[k][0]), float(ours[k][1]), float(baseline[k][0]), float(baseline[k][1]))
        for k in ours
    )
    return EvalReport(rows, ours_label, baseline_label)
