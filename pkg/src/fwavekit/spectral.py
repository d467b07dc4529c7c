"""Welch spectrum on a fixed 0.1 Hz grid, band normalization, DF and C0.

C0 splits the band-normalized spectrum at ``theta = alpha * mean(PSD_n)``:
bins above theta form the regular part and are zeroed, what remains is the
irregular part, and C0 is the irregular share of the in-band mass.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from ._validation import check_positive, check_sampling_rate, check_signal

BAND_HZ = (3.0, 25.0)
RESOLUTION_HZ = 0.1
WINDOW_LEN = 4000
OVERLAP = 3000
ALPHAS = (1.5, 1.75, 2.0, 2.25, 2.5)

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class PowerSpectrum:
    freqs_hz: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)
    band: tuple = BAND_HZ
    normalized: bool = False

    def __post_init__(self):
        f = np.array(self.freqs_hz, dtype=float)
        p = np.array(self.power, dtype=float)
        if f.shape != p.shape or f.ndim != 1:
            raise ValueError("freqs_hz and power must be 1-D and equal length")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise ValueError("freqs_hz must be strictly increasing")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("power must be finite and non-negative")
        lo, hi = (float(b) for b in self.band)
        if not lo < hi:
            raise ValueError("band must satisfy f_l < f_u")
        f.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "power", p)
        object.__setattr__(self, "band", (lo, hi))
        if self.normalized and abs(self.in_band()[1].sum() - 1.0) > _NORM_TOL:
            raise ValueError("normalized spectrum must sum to 1 in band")

    def band_mask(self) -> np.ndarray:
        lo, hi = self.band
        # half-bin slack keeps grid points like 3.0000000000000004 in band
        eps = 1e-6 * RESOLUTION_HZ
        return (self.freqs_hz >= lo - eps) & (self.freqs_hz <= hi + eps)

    def in_band(self):
        m = self.band_mask()
        return self.freqs_hz[m], self.power[m]


def fft_length(fs, window_len=WINDOW_LEN, resolution_hz=RESOLUTION_HZ) -> int:
    """Smallest power of two >= window_len whose bin spacing is <= resolution_hz."""
    n = 1 << int(np.ceil(np.log2(max(window_len, 1))))
    while fs / n > resolution_hz:
        n <<= 1
    return n


def welch_psd(samples, fs, window_len=WINDOW_LEN, overlap=OVERLAP,
              resolution_hz=RESOLUTION_HZ, band=BAND_HZ) -> PowerSpectrum:
    """Hamming-window Welch periodogram resampled onto a uniform grid.

    Each windowed section is zero-padded to :func:`fft_length`, the averaged
    one-sided density (``fs * sum(w**2)`` normalization) is then linearly
    interpolated onto ``0, resolution_hz, 2*resolution_hz, ...`` up to
    Nyquist. Only full windows stepped by ``window_len - overlap`` are used.
    """
    fs = check_sampling_rate(fs)
    window_len = int(window_len)
    overlap = int(overlap)
    if window_len < 1 or not 0 <= overlap < window_len:
        raise ValueError("need window_len >= 1 and 0 <= overlap < window_len")
    x = check_signal(samples, min_length=window_len)
    resolution_hz = check_positive(resolution_hz, "resolution_hz")
    nfft = fft_length(fs, window_len, resolution_hz)
    f_native, p_native = signal.welch(
        x, fs=fs, window="hamming", nperseg=window_len, noverlap=overlap,
        nfft=nfft, detrend=False, scaling="density", average="mean")
    n_grid = int(np.floor((fs / 2) / resolution_hz + 1e-9)) + 1
    # rounded so that bin k reads as k * resolution exactly (6.1, not 6.1000000000000005)
    grid = np.round(np.arange(n_grid) * resolution_hz, 9)
    power = np.interp(grid, f_native, p_native)
    return PowerSpectrum(grid, np.clip(power, 0.0, None), band=band)


def normalize_psd(spec: PowerSpectrum) -> PowerSpectrum:
    """Keep in-band bins only and scale them to unit sum."""
    f, p = spec.in_band()
    total = p.sum()
    if f.size == 0 or not total > 0:
        raise ValueError("zero in-band power, cannot normalize")
    return PowerSpectrum(f, p / total, band=spec.band, normalized=True)


def dominant_frequency(spec: PowerSpectrum) -> float:
    """Frequency of the largest in-band bin; the lowest one wins ties."""
    f, p = spec.in_band()
    if f.size == 0:
        raise ValueError("spectrum has no bins inside the band")
    return float(f[int(np.argmax(p))])


def c0_threshold(spec: PowerSpectrum, alpha) -> float:
    _, p = spec.in_band()
    return float(alpha) * float(p.mean())


def c0_partition(spec: PowerSpectrum, alpha):
    """Return ``(theta, above)``; ``above`` flags the in-band regular bins."""
    if not spec.normalized:
        raise ValueError("C0 requires a normalized spectrum (see normalize_psd)")
    alpha = check_positive(alpha, "alpha")
    _, p = spec.in_band()
    theta = c0_threshold(spec, alpha)
    return theta, p > theta


def c0_complexity(spec: PowerSpectrum, alpha) -> float:
    """Share of in-band mass in bins at or below ``alpha * mean``; in [0, 1]."""
    _, above = c0_partition(spec, alpha)
    _, p = spec.in_band()
    irregular = np.where(above, 0.0, p).sum()
    return float(irregular / p.sum())


def spectrum_csv(spec: PowerSpectrum, alpha) -> str:
    """Text of ``freq_hz,power,above_theta`` over the in-band bins."""
    norm = spec if spec.normalized else normalize_psd(spec)
    _, above = c0_partition(norm, alpha)
    f, p = spec.in_band()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", "power", "above_theta"])
    for fi, pi, ai in zip(f, p, above):
        w.writerow([f"{fi:.1f}", repr(float(pi)), "true" if ai else "false"])
    return buf.getvalue()
