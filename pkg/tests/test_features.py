import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from vitalforge.errors import BadRange, DegenerateSignal, TooShort
from vitalforge.features import (
    CSV_HEADER,
    FEATURE_NAMES,
    FeatureVector,
    averaged_power,
    biased_autocorrelation,
    extract_features,
    power_from_psd,
    psd,
    read_feature_csv,
    stat_features,
    write_feature_csv,
)
from vitalforge.preprocess import CleanSignal

signals = st.lists(st.floats(30, 200), min_size=4, max_size=200).filter(lambda v: max(v) - min(v) > 1e-3)


def test_twelve_names():
    assert len(FEATURE_NAMES) == 12
    assert CSV_HEADER[0] == "stay_id" and CSV_HEADER[-1] == "label"


class TestStats:
    def test_symmetric_example(self):
        f = stat_features([1.0, 2.0, 3.0])
        assert (f["min"], f["max"], f["range"], f["mean"]) == (1, 3, 2, 2)
        assert f["skewness"] == pytest.approx(0, abs=1e-15)

    def test_mode(self):
        assert stat_features([1.0, 2.0, 2.0, 3.0])["mode"] == 2
        # tie between bins 1 and 3 goes to the smaller centre
        assert stat_features([3.2, 2.9, 1.1, 0.8])["mode"] == 1
        assert stat_features([0.4, 0.6])["mode"] == 0

    def test_population_moments(self):
        x = np.array([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0])
        f = stat_features(x)
        assert f["variance"] == pytest.approx(4.0)
        assert f["std"] == pytest.approx(2.0)
        m = x - x.mean()
        assert f["skewness"] == pytest.approx(np.mean(m**3) / 8.0)
        assert f["kurtosis"] == pytest.approx(np.mean(m**4) / 16.0)

    def test_normal_kurtosis(self):
        x = np.random.default_rng(0).standard_normal(100_000)
        assert abs(stat_features(x)["kurtosis"] - 3.0) <= 0.1

    def test_degenerate(self):
        with pytest.raises(DegenerateSignal) as info:
            stat_features([60.0] * 5)
        assert info.value.partial["variance"] == 0.0

    def test_too_short(self):
        with pytest.raises(TooShort):
            stat_features([1.0])

    @settings(max_examples=100, deadline=None)
    @given(signals, st.randoms(use_true_random=False))
    def test_permutation_invariance(self, values, rnd):
        shuffled = list(values)
        rnd.shuffle(shuffled)
        a, b = stat_features(values), stat_features(shuffled)
        for k in a:
            assert a[k] == pytest.approx(b[k], rel=1e-9, abs=1e-9)
        assert averaged_power(values) == pytest.approx(averaged_power(shuffled), rel=1e-12)


class TestAveragedPower:
    def test_constant(self):
        assert averaged_power([3.0] * 7) == 9.0

    def test_sinusoid(self):
        a = 2.5
        n = np.arange(1000)
        x = a * np.sin(2 * np.pi * n / 50)
        assert averaged_power(x) == pytest.approx(a * a / 2, abs=1e-6)

    def test_loop_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            x = rng.normal(80, 10, rng.integers(1, 300))
            n1 = int(rng.integers(0, len(x)))
            n2 = int(rng.integers(n1, len(x)))
            total = 0.0
            for v in x[n1 : n2 + 1]:
                total += v * v
            assert averaged_power(x, n1, n2) == pytest.approx(total / (n2 - n1 + 1), rel=1e-14)

    @pytest.mark.parametrize("n1,n2", [(-1, 2), (3, 2), (0, 10)])
    def test_bad_range(self, n1, n2):
        with pytest.raises(BadRange):
            averaged_power([1.0] * 5, n1, n2)


class TestPsd:
    def test_autocorrelation_oracle(self):
        x = np.random.default_rng(4).normal(size=37)
        r = biased_autocorrelation(x)
        for k in range(len(x)):
            assert r[k] == pytest.approx(np.dot(x[: len(x) - k], x[k:]) / len(x), abs=1e-12)

    def test_constant_all_dc(self):
        p = psd(CleanSignal(np.full(64, 5.0), 1.0))
        assert p.density[1:].max() <= 1e-9 * p.density[0]
        assert power_from_psd(p) == pytest.approx(25.0, rel=1e-12)

    def test_zero_signal(self):
        assert power_from_psd(psd(np.zeros(16))) == 0.0

    def test_sinusoid_peak(self):
        n, k0 = 256, 19
        x = np.cos(2 * np.pi * k0 * np.arange(n) / n)
        p = psd(CleanSignal(x + 10.0, 1.0))
        assert int(np.argmax(p.density[1:])) + 1 == k0
        assert p.freqs_hz[k0] == pytest.approx(k0 / n)

    @pytest.mark.parametrize("n", [16, 17, 255, 1024])
    def test_equals_periodogram(self, n):
        x = np.random.default_rng(n).normal(size=n)
        p = psd(x)
        per = np.abs(np.fft.rfft(x)) ** 2 / n
        per[1 : len(per) if n % 2 else len(per) - 1] *= 2
        np.testing.assert_allclose(p.density, per, atol=1e-9)

    def test_grid_shape(self):
        p = psd(CleanSignal(np.random.default_rng(5).normal(80, 5, 100), 1.0))
        assert len(p.freqs_hz) == len(p.density) == p.n_fft // 2 + 1
        assert np.all(np.diff(p.freqs_hz) > 0) and p.freqs_hz[-1] <= 0.5
        assert (p.density >= 0).all()

    def test_too_short(self):
        with pytest.raises(TooShort):
            psd([1.0, 2.0, 3.0])

    @settings(max_examples=100, deadline=None)
    @given(signals)
    def test_parseval(self, values):
        ap = averaged_power(values)
        assert abs(power_from_psd(psd(values)) - ap) <= 1e-6 * ap


class TestExtract:
    def test_constant_trace(self):
        f = extract_features(CleanSignal(np.full(100, 60.0), 1.0))
        assert f.min == f.max == f.mode == f.mean == 60
        assert f.range == 0 and f.variance == 0
        assert f.avg_power == 3600
        assert (f.skewness, f.kurtosis) == (0.0, 3.0)
        with pytest.raises(DegenerateSignal):
            extract_features(np.full(10, 60.0), on_degenerate="raise")

    def test_matches_component_oracles(self):
        x = 75 + np.cumsum(np.random.default_rng(6).normal(0, 0.5, 500))
        f = extract_features(x)
        m = x - x.mean()
        np.testing.assert_allclose(
            f.as_array(),
            [
                x.min(),
                x.max(),
                x.max() - x.min(),
                x.mean(),
                np.median(x),
                stat_features(x)["mode"],
                x.std(),
                x.var(),
                np.mean(m**3) / x.var() ** 1.5,
                np.mean(m**4) / x.var() ** 2,
                np.mean(x**2),
                np.mean(x**2),
            ],
            rtol=1e-9,
        )
        assert f.variance == pytest.approx(f.std**2, rel=1e-9)

    def test_shift(self):
        x = 70 + np.random.default_rng(7).normal(0, 3, 300)
        a, b = extract_features(x), extract_features(x + 10)
        for k in ("variance", "std", "skewness", "kurtosis"):
            assert getattr(b, k) == pytest.approx(getattr(a, k), rel=1e-8)
        for k in ("min", "max", "mean", "median"):
            assert getattr(b, k) == pytest.approx(getattr(a, k) + 10, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(signals, st.floats(0.1, 10))
    def test_scale(self, values, alpha):
        x = np.array(values)
        assume(x.std() > 1e-2)
        a, b = extract_features(x), extract_features(alpha * x)
        for k in ("min", "max", "mean", "std"):
            assert getattr(b, k) == pytest.approx(alpha * getattr(a, k), rel=1e-9)
        for k in ("variance", "avg_power", "psd_total_power"):
            assert getattr(b, k) == pytest.approx(alpha**2 * getattr(a, k), rel=1e-9)
        for k in ("skewness", "kurtosis"):
            assert getattr(b, k) == pytest.approx(getattr(a, k), rel=1e-6, abs=1e-9)

    def test_deterministic(self):
        x = np.random.default_rng(8).normal(80, 5, 1000)
        assert extract_features(x) == extract_features(x.copy())


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    m = rng.normal(size=(5, 12)) * 1e3
    path = tmp_path / "f.csv"
    write_feature_csv(path, [f"s{i}" for i in range(5)], m, [0, 1, 0, 1, 1])
    ids, back, labels = read_feature_csv(path)
    assert ids == [f"s{i}" for i in range(5)]
    assert np.array_equal(back, m)
    assert labels.tolist() == [0, 1, 0, 1, 1]
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_feature_vector_round_trip():
    v = FeatureVector.from_array(np.arange(12.0))
    assert np.array_equal(v.as_array(), np.arange(12.0))
