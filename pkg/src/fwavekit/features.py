"""Per-segment f-wave features and their per-patient averages."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from ._validation import Outcome, check_sampling_rate
from .ecg_io import MAX_SEGMENTS, FWaveSegment
from .spectral import (ALPHAS, OVERLAP, WINDOW_LEN, c0_complexity, dominant_frequency,
                       normalize_psd, welch_psd)

BASE_COLUMNS = ("patient_id", "outcome", "df_hz", "nfwa_percent")


def c0_column(alpha) -> str:
    return f"c0_a{float(alpha):g}"


def table_columns(alphas=ALPHAS):
    return list(BASE_COLUMNS) + [c0_column(a) for a in alphas] + ["n_segments"]


def _samples(segment):
    return segment.samples if isinstance(segment, FWaveSegment) else np.asarray(segment, dtype=float)


def fwa_rms(segment) -> float:
    """Root-mean-square f-wave amplitude, in the units of the samples."""
    x = _samples(segment)
    if x.size == 0:
        raise ValueError("empty segment")
    return float(np.sqrt(np.mean(np.square(x))))


def nfwa(fwa_mv, median_r_mv) -> float:
    """f-wave amplitude as a percentage of the median R-peak amplitude."""
    if not median_r_mv > 0:
        raise ValueError("median R amplitude must be positive")
    if fwa_mv < 0:
        raise ValueError("f-wave amplitude must be non-negative")
    return 100.0 * fwa_mv / median_r_mv


def spectral_features(samples, fs, alphas=ALPHAS, window_len=WINDOW_LEN, overlap=OVERLAP):
    """Return ``(df_hz, [c0 for each alpha])`` for one segment, C0 as fractions."""
    spec = normalize_psd(welch_psd(samples, fs, window_len, overlap))
    return dominant_frequency(spec), [c0_complexity(spec, a) for a in alphas]


@dataclass(frozen=True)
class PatientFeatures:
    patient_id: str
    df_hz: float
    nfwa_percent: float
    c0_percent: dict
    n_segments: int
    outcome: Outcome | None = None

    def __post_init__(self):
        if not 1 <= self.n_segments <= MAX_SEGMENTS:
            raise ValueError(f"n_segments must lie in [1, {MAX_SEGMENTS}]")
        object.__setattr__(self, "outcome", Outcome.parse(self.outcome))
        object.__setattr__(self, "df_hz", float(self.df_hz))
        object.__setattr__(self, "nfwa_percent", float(self.nfwa_percent))
        object.__setattr__(self, "c0_percent",
                           {float(a): float(v) for a, v in self.c0_percent.items()})

    def value(self, column):
        if column == "df_hz":
            return self.df_hz
        if column == "nfwa_percent":
            return self.nfwa_percent
        for a, v in self.c0_percent.items():
            if c0_column(a) == column:
                return v
        raise KeyError(column)


def patient_features(segments, median_r_mv, alphas=ALPHAS, window_len=WINDOW_LEN,
                     overlap=OVERLAP, outcome=None) -> PatientFeatures:
    """Average DF, nFWA and C0 (percent) over a patient's segments."""
    segments = list(segments)
    if not segments:
        raise ValueError("no segments")
    if len(segments) > MAX_SEGMENTS:
        raise ValueError(f"at most {MAX_SEGMENTS} segments per patient")
    ids = {s.patient_id for s in segments}
    if len(ids) != 1:
        raise ValueError(f"segments belong to several patients: {sorted(ids)}")
    alphas = [float(a) for a in alphas]
    dfs, nfwas, c0s = [], [], []
    for seg in segments:
        df, c0 = spectral_features(seg.samples, seg.sampling_rate_hz, alphas,
                                   window_len, overlap)
        dfs.append(df)
        nfwas.append(nfwa(fwa_rms(seg), median_r_mv))
        c0s.append(c0)
    c0_mean = np.mean(np.asarray(c0s) * 100.0, axis=0)
    return PatientFeatures(
        patient_id=ids.pop(),
        df_hz=float(np.mean(dfs)),
        nfwa_percent=float(np.mean(nfwas)),
        c0_percent=dict(zip(alphas, map(float, c0_mean))),
        n_segments=len(segments),
        outcome=outcome,
    )


class SpectralFeatureTransformer(TransformerMixin, BaseEstimator):
    """Map f-wave segments (rows) to ``[DF, C0(alpha_1), ...]``.

    Stateless; ``fit`` only validates. C0 columns are fractions in [0, 1].
    """

    def __init__(self, sampling_rate_hz=977.0, alphas=ALPHAS, window_len=WINDOW_LEN,
                 overlap=OVERLAP):
        self.sampling_rate_hz = sampling_rate_hz
        self.alphas = alphas
        self.window_len = window_len
        self.overlap = overlap

    def fit(self, X, y=None):
        check_sampling_rate(self.sampling_rate_hz)
        X = check_array(X, ensure_min_features=self.window_len)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = check_array(X, ensure_min_features=self.window_len)
        out = np.empty((X.shape[0], 1 + len(self.alphas)))
        for i, row in enumerate(X):
            df, c0 = spectral_features(row, self.sampling_rate_hz, self.alphas,
                                       self.window_len, self.overlap)
            out[i, 0] = df
            out[i, 1:] = c0
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["df_hz"] + [c0_column(a) for a in self.alphas], dtype=object)


def features_csv(rows, alphas=ALPHAS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table_columns(alphas))
    for r in rows:
        w.writerow([r.patient_id, r.outcome.value if r.outcome else "",
                    repr(float(r.df_hz)), repr(float(r.nfwa_percent))]
                   + [repr(float(r.c0_percent[float(a)])) for a in alphas]
                   + [r.n_segments])
    return buf.getvalue()


def write_features(rows, path, alphas=ALPHAS):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(features_csv(rows, alphas), encoding="utf-8")


def read_features(path):
    """Read a feature table; returns ``(rows, alphas)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:4] != list(BASE_COLUMNS) or header[-1] != "n_segments":
            raise ValueError(f"{path}: not a feature table")
        c0_cols = header[4:-1]
        if not all(c.startswith("c0_a") for c in c0_cols):
            raise ValueError(f"{path}: unexpected columns {c0_cols}")
        alphas = [float(c[4:]) for c in c0_cols]
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} columns")
            rows.append(PatientFeatures(
                patient_id=rec[0],
                outcome=Outcome.parse(rec[1]),
                df_hz=float(rec[2]),
                nfwa_percent=float(rec[3]),
                c0_percent={a: float(v) for a, v in zip(alphas, rec[4:-1])},
                n_segments=int(rec[-1]),
            ))
    return rows, alphas


def feature_matrix(rows, columns):
    """Stack ``columns`` of labelled rows into ``(X, y)`` with AF coded as 1."""
    labelled = [r for r in rows if r.outcome is not None]
    X = np.array([[r.value(c) for c in columns] for r in labelled], dtype=float)
    y = np.array([r.outcome.code for r in labelled], dtype=int)
    return X.reshape(len(labelled), len(columns)), y

