import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vitalforge.errors import KeyMismatch, NoPositives, OneClassOnly
from vitalforge.metrics import ScoredSet, auc_pr, auc_roc, format_percent, percent_difference, report


def pairwise_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def enumerated_ap(scores, labels):
    """Precision at each distinct threshold weighted by the recall it adds."""
    n_pos = sum(labels)
    ap = 0.0
    prev_tp = 0
    for t in sorted(set(scores), reverse=True):
        sel = [y for s, y in zip(scores, labels) if s >= t]
        tp = sum(sel)
        ap += (tp - prev_tp) / n_pos * tp / len(sel)
        prev_tp = tp
    return ap


class TestAucRoc:
    def test_separated(self):
        assert auc_roc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_all_tied(self):
        assert auc_roc([0.3] * 6, [0, 1, 0, 1, 1, 0]) == 0.5

    def test_example(self):
        assert auc_roc([0.8, 0.4, 0.6, 0.2], [1, 1, 0, 0]) == 0.75

    def test_one_class(self):
        with pytest.raises(OneClassOnly):
            auc_roc([0.1, 0.2], [1, 1])

    def test_pairwise_oracle_with_ties(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(2, 201))
            scores = np.round(rng.random(n), int(rng.integers(1, 3)))
            labels = rng.integers(0, 2, n)
            labels[:2] = [0, 1]
            assert abs(auc_roc(scores, labels) - pairwise_auc(scores.tolist(), labels.tolist())) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.integers(-1000, 1000), st.integers(0, 1)), min_size=2, max_size=60))
    def test_monotone_invariance_and_flip(self, pairs):
        scores = np.array([p[0] for p in pairs]) / 100.0
        labels = np.array([p[1] for p in pairs])
        if labels.min() == labels.max():
            return
        a = auc_roc(scores, labels)
        assert auc_roc(np.exp(scores / 3) * 2 + 1, labels) == pytest.approx(a, abs=1e-12)
        if len(np.unique(scores)) == len(scores):
            assert auc_roc(scores, 1 - labels) == pytest.approx(1 - a, abs=1e-12)

    def test_scored_set(self):
        s = ScoredSet([0.8, 0.4, 0.6, 0.2], [1, 1, 0, 0])
        assert auc_roc(s) == 0.75 and s.n_pos == 2


class TestAucPr:
    def test_first_of_five(self):
        assert auc_pr([0.9, 0.5, 0.4, 0.3, 0.1], [1, 0, 0, 0, 0]) == 1.0

    def test_last_of_two(self):
        assert auc_pr([0.9, 0.1], [0, 1]) == 0.5

    def test_all_positive(self):
        assert auc_pr(np.random.default_rng(1).random(20), np.ones(20)) == 1.0

    def test_no_positive(self):
        with pytest.raises(NoPositives):
            auc_pr([0.1, 0.2], [0, 0])

    def test_enumeration_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(1, 80))
            scores = np.round(rng.random(n), 1)
            labels = rng.integers(0, 2, n)
            labels[0] = 1
            assert auc_pr(scores, labels) == pytest.approx(enumerated_ap(scores.tolist(), labels.tolist()), abs=1e-12)

    def test_tie_order_irrelevant(self):
        assert auc_pr([0.5, 0.5, 0.1], [1, 0, 0]) == auc_pr([0.5, 0.5, 0.1], [0, 1, 0])

    def test_random_scores_near_prevalence(self):
        rng = np.random.default_rng(3)
        labels = (rng.random(2000) < 0.3).astype(int)
        assert abs(auc_pr(rng.random(2000), labels) - labels.mean()) <= 0.05


class TestReport:
    def test_percent_difference_examples(self):
        rep = report(
            {"Logistic Regression": (0.849, 0.486), "Standard LSTM": (0.899, 0.663), "Channelwise LSTM": (0.837, 0.781)},
            {"Logistic Regression": (0.848, 0.474), "Standard LSTM": (0.855, 0.485), "Channelwise LSTM": (0.862, 0.515)},
        )
        lstm = rep["Standard LSTM"]
        assert format_percent(lstm.pct_roc) == "+5.15%"
        assert format_percent(lstm.pct_pr) == "+36.70%"
        lr = rep["Logistic Regression"]
        assert (format_percent(lr.pct_roc), format_percent(lr.pct_pr)) == ("+0.12%", "+2.53%")
        assert format_percent(rep["Channelwise LSTM"].pct_pr) == "+51.65%"
        # the arithmetic truth for the channel-wise AUC-ROC pair is negative
        assert format_percent(rep["Channelwise LSTM"].pct_roc) == "-2.90%"

    def test_identical(self):
        rep = report({"m": (0.7, 0.4)}, {"m": (0.7, 0.4)})
        assert format_percent(rep["m"].pct_roc) == "+0.00%"

    def test_key_mismatch(self):
        with pytest.raises(KeyMismatch):
            report({"a": (0.5, 0.5)}, {"b": (0.5, 0.5)})

    def test_text_and_csv(self):
        rep = report({"Standard LSTM": (0.899, 0.663)}, {"Standard LSTM": (0.855, 0.485)}, "Ours", "Baseline")
        lines = rep.to_text().splitlines()
        assert lines[0].split() == ["Source", "Model", "AUC-ROC", "AUC-PR"]
        assert lines[2].startswith("Ours") and "0.899" in lines[2]
        assert lines[4].startswith("Percent Difference") and "+5.15%" in lines[4] and "+36.70%" in lines[4]
        csv_lines = rep.to_csv().splitlines()
        assert csv_lines[0] == "model,auc_roc,auc_pr,pct_roc,pct_pr"
        assert csv_lines[1].endswith(",5.15,36.70")

    def test_percent_difference(self):
        assert percent_difference(1.1, 1.0) == pytest.approx(10.0)
