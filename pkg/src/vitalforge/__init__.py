"""Waveform-augmented ICU mortality prediction.

Reads matched heart-rate record trees, cleans and resamples the signals,
extracts twelve statistical and spectral features, rebalances the training
classes with A-SUWO and trains logistic-regression, LSTM and channel-wise
LSTM models with and without the waveform features.
"""

from .balance import LabeledMatrix, balance_dataset
from .errors import StageError, ValidationError, VitalForgeError
from .features import FEATURE_NAMES, FeatureVector, averaged_power, extract_features, power_from_psd, psd
from .metrics import EvalReport, auc_pr, auc_roc, percent_difference, report
from .pipeline import Pipeline, PipelineConfig, run_benchmark
from .preprocess import apply_fir, clean, design_lowpass, moving_average, prepare, resample_to_1hz
from .records import parse_record, read_record, scan_matched_tree, serialize_record, window_first_48h, write_record
from .synth import CohortSpec, gen_cohort, verify_cohort

__version__ = "0.1.0"

__all__ = [
    "CohortSpec",
    "EvalReport",
    "FEATURE_NAMES",
    "FeatureVector",
    "LabeledMatrix",
    "Pipeline",
    "PipelineConfig",
    "StageError",
    "ValidationError",
    "VitalForgeError",
    "apply_fir",
    "auc_pr",
    "auc_roc",
    "averaged_power",
    "balance_dataset",
    "clean",
    "design_lowpass",
    "extract_features",
    "gen_cohort",
    "moving_average",
    "parse_record",
    "percent_difference",
    "power_from_psd",
    "prepare",
    "psd",
    "read_record",
    "report",
    "resample_to_1hz",
    "run_benchmark",
    "scan_matched_tree",
    "serialize_record",
    "verify_cohort",
    "window_first_48h",
    "write_record",
]
