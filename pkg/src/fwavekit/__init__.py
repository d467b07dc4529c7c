"""Atrial f-wave extraction and spectral organization features from surface ECG."""

__version__ = "0.1.0"

from ._validation import Outcome
from .ecg_io import (EcgFormatError, EcgRecord, FWaveSegment, ManifestEntry, load_ecg,
                     read_manifest, save_ecg, segment_signal, write_manifest)
from .evaluation import (EvaluationReport, SequentialForwardSelector, holdout_evaluate,
                         sequential_forward_selection)
from .extraction import ExtractionResult, cancel_qrst, detect_r_peaks, extract_fwaves
from .features import (PatientFeatures, SpectralFeatureTransformer, fwa_rms, nfwa,
                       patient_features, read_features, write_features)
from .preprocess import FilterSpec, PreprocessError, preprocess_pipeline, preprocess_signal
from .spectral import (ALPHAS, PowerSpectrum, c0_complexity, dominant_frequency,
                       normalize_psd, welch_psd)
from .stats import RocCurve, RocThresholdClassifier, mann_whitney_u, median_iqr, roc_curve
from .synth import FWaveModel, synth_cohort, synth_ecg, synth_fwave
from .tree import DecisionTree, SplitBudgetTreeClassifier, train_decision_tree

__all__ = [
    "ALPHAS", "DecisionTree", "EcgFormatError", "EcgRecord", "EvaluationReport",
    "ExtractionResult", "FWaveModel", "FWaveSegment", "FilterSpec", "ManifestEntry",
    "Outcome", "PatientFeatures", "PowerSpectrum", "PreprocessError", "RocCurve",
    "RocThresholdClassifier", "SequentialForwardSelector", "SpectralFeatureTransformer",
    "SplitBudgetTreeClassifier", "c0_complexity", "cancel_qrst", "detect_r_peaks",
    "dominant_frequency", "extract_fwaves", "fwa_rms", "holdout_evaluate", "load_ecg",
    "mann_whitney_u", "median_iqr", "nfwa", "normalize_psd", "patient_features",
    "preprocess_pipeline", "preprocess_signal", "read_features", "read_manifest",
    "roc_curve", "save_ecg", "segment_signal", "sequential_forward_selection",
    "synth_cohort", "synth_ecg", "synth_fwave", "train_decision_tree", "welch_psd",
    "write_features", "write_manifest",
]
