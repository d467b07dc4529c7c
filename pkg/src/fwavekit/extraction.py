"""R-peak detection, ventricular (QRST) cancellation and per-record f-wave extraction."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from ._validation import check_sampling_rate, check_signal
from .ecg_io import MAX_SEGMENTS, SEGMENT_SECONDS, STATUS_TOO_SHORT, FWaveSegment, segment_signal
from .preprocess import FilterSpec, preprocess_pipeline

logger = logging.getLogger(__name__)

REFRACTORY_S = 0.25
BEAT_PRE_S = 0.3
BEAT_POST_S = 0.5
CROSSFADE_S = 0.02
MIN_COHERENCE = 0.5

STATUS_NO_BEATS = "no beats"


def _pan_tompkins_feature(x, fs):
    sos = signal.butter(2, [5.0, min(25.0, 0.45 * fs)], btype="bandpass", fs=fs, output="sos")
    bp = signal.sosfiltfilt(sos, x, padlen=min(x.size - 1, int(fs)))
    deriv = np.gradient(bp) * fs
    win = max(1, int(round(0.15 * fs)))
    # centred integration window keeps the energy bump aligned with the QRS
    integ = np.convolve(deriv ** 2, np.ones(win) / win, mode="same")
    return bp, integ


def detect_r_peaks(samples, fs) -> np.ndarray:
    """Locate R-peaks with a Pan-Tompkins style detector.

    Band-pass 5-25 Hz, differentiate, square, integrate over 150 ms, then
    classify integrator maxima against adaptive signal/noise levels (with
    search-back over long gaps). Each accepted QRS is placed on the largest
    absolute input sample within +-75 ms. Peaks closer than 250 ms are
    merged, keeping the larger one.

    Returns strictly increasing sample indices; an empty array means no
    beats were found.
    """
    fs = check_sampling_rate(fs)
    x = check_signal(samples, min_length=int(np.ceil(2 * fs)))
    refractory = int(round(REFRACTORY_S * fs))
    if not np.any(x != x[0]):
        return np.empty(0, dtype=int)
    _, integ = _pan_tompkins_feature(x - np.mean(x), fs)
    if not np.max(integ) > 0:
        return np.empty(0, dtype=int)

    cand, _ = signal.find_peaks(integ, distance=max(1, refractory))
    if cand.size == 0:
        return np.empty(0, dtype=int)
    heights = integ[cand]

    # learning phase over the first 2 s
    init = integ[: int(2 * fs)]
    spk = 0.25 * np.max(init)
    npk = 0.5 * np.mean(init)
    thr = npk + 0.25 * (spk - npk)

    accepted = []
    rr_mean = None
    for c, h in zip(cand, heights):
        if accepted and rr_mean is not None and c - accepted[-1] > 1.66 * rr_mean:
            # search back for a missed beat between the last QRS and this candidate
            lo, hi = accepted[-1] + refractory, c - refractory
            between = [(cc, hh) for cc, hh in zip(cand, heights) if lo <= cc <= hi]
            if between:
                cc, hh = max(between, key=lambda t: t[1])
                if hh > 0.5 * thr:
                    accepted.append(int(cc))
                    spk = 0.25 * hh + 0.75 * spk
        if h > thr:
            accepted.append(int(c))
            spk = 0.125 * h + 0.875 * spk
            if len(accepted) >= 2:
                rr = np.diff(accepted[-9:])
                rr_mean = float(np.mean(rr))
        else:
            npk = 0.125 * h + 0.875 * npk
        thr = npk + 0.25 * (spk - npk)

    if not accepted:
        return np.empty(0, dtype=int)

    half = int(round(0.075 * fs))
    ax = np.abs(x - np.median(x))
    peaks = []
    for c in sorted(set(accepted)):
        lo, hi = max(0, c - half), min(x.size, c + half + 1)
        peaks.append(lo + int(np.argmax(ax[lo:hi])))
    return _enforce_refractory(np.asarray(peaks), ax, refractory)


def _enforce_refractory(peaks, amplitude, refractory):
    peaks = np.unique(peaks)
    kept = []
    for p in peaks:
        if kept and p - kept[-1] < refractory:
            if amplitude[p] > amplitude[kept[-1]]:
                kept[-1] = p
            continue
        kept.append(int(p))
    return np.asarray(kept, dtype=int)


def median_r_amplitude(samples, r_indices) -> float:
    """Median over beats of ``|samples[r]|``."""
    x = np.asarray(samples, dtype=float)
    r = np.asarray(r_indices, dtype=int)
    if r.size == 0:
        raise ValueError("no R-peaks given")
    if r.min() < 0 or r.max() >= x.size:
        raise ValueError("R-peak index out of range")
    return float(np.median(np.abs(x[r])))


@dataclass(frozen=True)
class BeatMatrix:
    """Beat-aligned windows around R-peaks; rows are complete windows only."""

    beats: np.ndarray = field(repr=False)
    r_indices: np.ndarray
    pre: int
    post: int

    @property
    def width(self) -> int:
        return self.pre + self.post


def beat_matrix(samples, fs, r_indices, pre_s=BEAT_PRE_S, post_s=BEAT_POST_S) -> BeatMatrix:
    x = np.asarray(samples, dtype=float)
    pre = int(round(pre_s * fs))
    post = int(round(post_s * fs))
    r = np.asarray(r_indices, dtype=int)
    full = r[(r - pre >= 0) & (r + post <= x.size)]
    beats = np.array([x[i - pre:i + post] for i in full]).reshape(full.size, pre + post)
    return BeatMatrix(beats, full, pre, post)


def _fade(width, n_fade):
    w = np.ones(width)
    if n_fade > 0:
        ramp = (np.arange(n_fade) + 0.5) / n_fade
        w[:n_fade] = ramp
        w[-n_fade:] = ramp[::-1]
    return w


def cancel_qrst(samples, fs, r_indices, pre_s=BEAT_PRE_S, post_s=BEAT_POST_S,
                crossfade_s=CROSSFADE_S) -> np.ndarray:
    """Subtract an amplitude-adapted rank-1 ventricular template from each beat.

    The template is the dominant right singular vector of the beat matrix;
    each beat (including edge beats, over their in-bounds part) is fitted
    by least squares to it and the scaled template is subtracted, tapered
    over ``crossfade_s`` at both window ends. Where windows of adjacent beats
    overlap, their estimates are averaged with the taper weights. With
    fewer than three complete beats the mean beat is used as template.

    The isoelectric level, the median of the samples outside every beat
    window, is removed before fitting and is absent from the output. The
    template is only subtracted when the beats agree on it, i.e. when
    ``mean(c)**2 / mean(c**2) >= MIN_COHERENCE`` for the per-beat
    projections ``c``; otherwise the input is returned unchanged.
    """
    fs = check_sampling_rate(fs)
    x = check_signal(samples)
    r = np.unique(np.asarray(r_indices, dtype=int))
    r = r[(r >= 0) & (r < x.size)]
    if r.size == 0:
        raise ValueError("cannot cancel without beats")
    bm = beat_matrix(x, fs, r, pre_s, post_s)
    if bm.beats.shape[0] == 0:
        raise ValueError("cannot cancel without beats: no complete beat window")
    covered = np.zeros(x.size, dtype=bool)
    for ri in r:
        covered[max(ri - bm.pre, 0):ri + bm.post] = True
    # high-pass filtering moves the isoelectric line to the mean of the QRST
    # train; re-reference to the level seen between beat windows
    baseline = float(np.median(x[~covered])) if np.count_nonzero(~covered) >= 0.1 * fs else 0.0
    xb = x - baseline
    beats = bm.beats - baseline
    if beats.shape[0] >= 3:
        _, s, vt = np.linalg.svd(beats, full_matrices=False)
        template = vt[0] if s[0] > 0 else np.zeros(bm.width)
    else:
        logger.debug("fewer than 3 complete beats, using average-beat template")
        template = beats.mean(axis=0)

    coefs = beats @ template
    if coefs.sum() < 0:
        template, coefs = -template, -coefs
    power = np.mean(coefs ** 2)
    coherence = coefs.mean() ** 2 / power if power > 0 else 0.0
    if coherence < MIN_COHERENCE:
        # per-beat amplitudes scatter around zero: no phase-locked ventricular
        # activity, the dominant direction is atrial and must be kept
        logger.debug("beat template incoherent (%.3f), nothing cancelled", coherence)
        return x.copy()

    taper = _fade(bm.width, int(round(crossfade_s * fs)))
    estimate = np.zeros(x.size)
    weight = np.zeros(x.size)
    for ri in r:
        lo, hi = ri - bm.pre, ri + bm.post
        a, b = max(lo, 0), min(hi, x.size)
        seg_t = template[a - lo:b - lo]
        denom = seg_t @ seg_t
        coef = (xb[a:b] @ seg_t) / denom if denom > 0 else 0.0
        w = taper[a - lo:b - lo]
        estimate[a:b] += w * coef * seg_t
        weight[a:b] += w
    overlap = weight > 1
    estimate[overlap] /= weight[overlap]
    return xb - estimate


@dataclass
class ExtractionResult:
    patient_id: str
    sampling_rate_hz: float
    status: str
    outcome: object = None
    conditioned: np.ndarray | None = field(default=None, repr=False)
    fwave: np.ndarray | None = field(default=None, repr=False)
    r_indices: np.ndarray | None = field(default=None, repr=False)
    median_r_mv: float | None = None
    segments: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def extract_fwaves(record, spec: FilterSpec | None = None, lead="V1",
                   max_segments=MAX_SEGMENTS) -> ExtractionResult:
    """Preprocess, detect beats, cancel QRST and cut 6-s f-wave segments.

    R amplitude is measured on the conditioned lead before cancellation.
    Records that are too short or beatless come back with a non-ok status
    instead of raising; malformed inputs still raise.
    """
    fs = record.sampling_rate_hz
    base = dict(patient_id=record.patient_id, sampling_rate_hz=fs, outcome=record.outcome)
    if record.n_samples < int(round(SEGMENT_SECONDS * fs)):
        return ExtractionResult(status=STATUS_TOO_SHORT, **base)
    x = preprocess_pipeline(record, spec, lead=lead)
    r = detect_r_peaks(x, fs)
    if r.size == 0:
        return ExtractionResult(status=STATUS_NO_BEATS, conditioned=x, **base)
    try:
        f = cancel_qrst(x, fs, r)
    except ValueError:
        return ExtractionResult(status=STATUS_NO_BEATS, conditioned=x, r_indices=r, **base)
    seg = segment_signal(f, fs, max_segments=max_segments)
    segments = [FWaveSegment(record.patient_id, i, s, fs) for i, s in enumerate(seg.segments)]
    return ExtractionResult(status=seg.status, conditioned=x, fwave=f, r_indices=r,
                            median_r_mv=median_r_amplitude(x, r), segments=segments, **base)
