"""Input validation helpers shared by the signal and estimator modules."""

from __future__ import annotations

import enum

import numpy as np


class Outcome(str, enum.Enum):
    """Follow-up outcome after ablation. ``AF`` is the positive class."""

    SR = "SR"
    AF = "AF"

    @property
    def code(self) -> int:
        return 1 if self is Outcome.AF else 0

    @classmethod
    def parse(cls, value):
        if value is None or isinstance(value, cls):
            return value
        text = str(value).strip()
        if text in ("", "null", "None"):
            return None
        aliases = {
            "SR": cls.SR, "MAINTAINEDSR": cls.SR, "0": cls.SR,
            "AF": cls.AF, "RELAPSEDAF": cls.AF, "1": cls.AF,
        }
        try:
            return aliases[text.upper()]
        except KeyError:
            raise ValueError(f"unknown outcome label {value!r}") from None


def check_signal(samples, name="samples", min_length=1) -> np.ndarray:
    """Return ``samples`` as a finite 1-D float array of at least ``min_length``."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    if x.size < min_length:
        raise ValueError(
            f"{name} too short: {x.size} samples, need at least {min_length}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_sampling_rate(fs) -> float:
    fs = float(fs)
    if not np.isfinite(fs) or fs <= 0:
        raise ValueError(f"non-positive sampling rate: {fs}")
    return fs


def check_positive(value, name) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_binary_labels(y, require_both=True) -> np.ndarray:
    """Map outcome labels (``Outcome``, 'SR'/'AF', or 0/1) to an int array with AF=1."""
    y = np.asarray(y, dtype=object).ravel()
    codes = np.empty(y.size, dtype=int)
    for i, label in enumerate(y):
        if isinstance(label, (bool, np.bool_)):
            codes[i] = int(label)
            continue
        if isinstance(label, (int, np.integer, float, np.floating)) and label in (0, 1):
            codes[i] = int(label)
            continue
        parsed = Outcome.parse(label)
        if parsed is None:
            raise ValueError("missing outcome label")
        codes[i] = parsed.code
    if require_both and np.unique(codes).size < 2:
        raise ValueError("both outcome classes (SR and AF) must be present")
    return codes
