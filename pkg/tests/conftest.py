import datetime as dt

import numpy as np
import pytest

from vitalforge.records import RecordHeader, WaveformRecord, record_stem


def make_record(subject="p000001", start=dt.datetime(2130, 1, 1), fs=1.0, samples=(70.0, 71.0), channel="HR", numeric=False):
    samples = np.asarray(samples, dtype=float)
    header = RecordHeader(subject, start, fs, channel, len(samples))
    return WaveformRecord(header, samples, name=record_stem(subject, start, numeric))


@pytest.fixture
def record_factory():
    return make_record


@pytest.fixture(scope="session")
def small_cohort(tmp_path_factory):
    from vitalforge.synth import CohortSpec, gen_cohort

    root = tmp_path_factory.mktemp("cohort")
    gen_cohort(CohortSpec(n_patients=60, effect_size=2.0, waveform_coverage=0.5, seed=7), root)
    return root


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(mod.RESULTS):
            terminalreporter.write_line(mod.RESULTS[k])
