"""Conditioning of lead V1: baseline wander, powerline and high-frequency noise.

All recursive filters run forward and backward (zero phase) as second-order
sections, padded at each end by reflection over roughly one filter time
constant.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import pywt
from scipy import signal

from ._validation import check_positive, check_sampling_rate, check_signal

FILTER_ORDER = 4
WAVELET = "sym4"


class PreprocessError(ValueError):
    """A preprocessing stage failed; ``stage`` names which one."""

    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class FilterSpec:
    highpass_cutoff_hz: float = 0.5
    notch_freq_hz: float = 50.0
    notch_bandwidth_hz: float = 1.0
    lowpass_cutoff_hz: float = 70.0
    wavelet_levels: int = 4

    def validate(self, fs):
        nyq = check_sampling_rate(fs) / 2
        for name in ("highpass_cutoff_hz", "notch_freq_hz",
                     "notch_bandwidth_hz", "lowpass_cutoff_hz"):
            check_positive(getattr(self, name), name)
        if int(self.wavelet_levels) < 1:
            raise ValueError("wavelet_levels must be a positive integer")
        if not self.highpass_cutoff_hz < self.lowpass_cutoff_hz < nyq:
            raise ValueError(
                "need highpass_cutoff_hz < lowpass_cutoff_hz < sampling_rate/2")
        if not self.notch_freq_hz < nyq:
            raise ValueError("notch_freq_hz must be below sampling_rate/2")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown FilterSpec fields: {sorted(unknown)}")
        return cls(**data)


def _zero_phase(sos, x, padlen, padtype="odd"):
    min_len = 3 * 2 * sos.shape[0]
    if x.size <= min_len:
        raise ValueError(
            f"signal too short for zero-phase filtering: {x.size} samples, "
            f"need more than {min_len}")
    padlen = int(min(padlen, x.size - 1))
    return signal.sosfiltfilt(sos, x, padtype=padtype, padlen=padlen)


def remove_baseline(samples, fs, cutoff_hz=0.5, order=FILTER_ORDER):
    """Zero-phase Butterworth high-pass; removes DC and baseline wander."""
    x = check_signal(samples)
    fs = check_sampling_rate(fs)
    cutoff_hz = check_positive(cutoff_hz, "cutoff_hz")
    if fs <= 2 * cutoff_hz:
        raise ValueError("sampling rate must exceed twice the cutoff")
    sos = signal.butter(order, cutoff_hz, btype="highpass", fs=fs, output="sos")
    # mirror padding: an odd reflection about an R-peak at the record edge
    # would inject a level step that rings for seconds
    return _zero_phase(sos, x, round(fs / cutoff_hz), padtype="even")


def lowpass(samples, fs, cutoff_hz=70.0, order=FILTER_ORDER):
    x = check_signal(samples)
    fs = check_sampling_rate(fs)
    cutoff_hz = check_positive(cutoff_hz, "cutoff_hz")
    if cutoff_hz >= fs / 2:
        raise ValueError("low-pass cutoff must be below sampling_rate/2")
    sos = signal.butter(order, cutoff_hz, btype="lowpass", fs=fs, output="sos")
    return _zero_phase(sos, x, 3 * round(fs / cutoff_hz))


def notch_powerline(samples, fs, f0=50.0, bw=1.0):
    """Zero-phase second-order band-stop centred on ``f0`` with -3 dB width ``bw``."""
    x = check_signal(samples)
    fs = check_sampling_rate(fs)
    f0 = check_positive(f0, "f0")
    bw = check_positive(bw, "bw")
    if f0 >= fs / 2:
        raise ValueError(f"notch frequency {f0:g} Hz must be below sampling_rate/2")
    b, a = signal.iirnotch(f0, f0 / bw, fs=fs)
    return _zero_phase(signal.tf2sos(b, a), x, round(fs / bw))


def wavelet_denoise(samples, levels=4, wavelet=WAVELET):
    """Soft-threshold wavelet detail coefficients with the universal threshold.

    The noise level is the median absolute deviation of the finest detail
    coefficients divided by 0.6745; the threshold is
    ``sigma * sqrt(2 * ln N)`` and is applied to every detail level.
    """
    levels = int(levels)
    if levels < 1:
        raise ValueError("levels must be a positive integer")
    x = np.array(check_signal(samples, min_length=2 ** levels))
    coeffs = pywt.wavedec(x, wavelet, level=levels, mode="symmetric")
    sigma = np.median(np.abs(coeffs[-1])) / 0.6745
    thr = sigma * np.sqrt(2.0 * np.log(x.size))
    if thr > 0:
        coeffs = [coeffs[0]] + [pywt.threshold(c, thr, mode="soft") for c in coeffs[1:]]
    return pywt.waverec(coeffs, wavelet, mode="symmetric")[:x.size]


def preprocess_signal(samples, fs, spec: FilterSpec | None = None):
    """High-pass, notch, low-pass, then wavelet denoising, in that order."""
    spec = (spec or FilterSpec()).validate(fs)
    stages = (
        ("baseline", lambda v: remove_baseline(v, fs, spec.highpass_cutoff_hz)),
        ("notch", lambda v: notch_powerline(v, fs, spec.notch_freq_hz,
                                            spec.notch_bandwidth_hz)),
        ("lowpass", lambda v: lowpass(v, fs, spec.lowpass_cutoff_hz)),
        ("wavelet", lambda v: wavelet_denoise(v, spec.wavelet_levels)),
    )
    x = samples
    for name, stage in stages:
        try:
            x = stage(x)
        except ValueError as exc:
            raise PreprocessError(name, str(exc)) from exc
    return x


def preprocess_pipeline(record, spec: FilterSpec | None = None, lead="V1"):
    """Return the conditioned ``lead`` of an :class:`~fwavekit.ecg_io.EcgRecord`."""
    if lead not in record.leads:
        raise PreprocessError("input", f"lead {lead} missing")
    return preprocess_signal(record.leads[lead], record.sampling_rate_hz, spec)
