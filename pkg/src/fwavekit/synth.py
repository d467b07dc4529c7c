"""Synthetic f-waves, AF ECGs and labelled cohorts with known ground truth.

The atrial model is a frequency-modulated sawtooth-like sum of a
fundamental and geometrically decaying harmonics, mixed by power fraction
with band-limited Gaussian noise. Organized activity has a low noise
fraction over the whole atrial band; disorganized activity is dominated by
a narrow low-frequency noise blob with only a weak periodic component.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from ._validation import Outcome, check_sampling_rate
from .ecg_io import EcgRecord, ManifestEntry, save_ecg, write_manifest


@dataclass(frozen=True)
class FWaveModel:
    fundamental_hz: float = 6.0
    n_harmonics: int = 3
    harmonic_decay: float = 0.5
    amplitude_mv: float = 0.1
    freq_modulation_hz: float = 0.15
    freq_modulation_depth: float = 0.1
    broadband_noise_fraction: float = 0.15
    noise_band_hz: tuple = (3.0, 25.0)

    def validate(self, fs=None):
        if not 3.0 <= self.fundamental_hz <= 12.0:
            raise ValueError("fundamental_hz must lie in [3, 12]")
        if int(self.n_harmonics) != self.n_harmonics or self.n_harmonics < 0:
            raise ValueError("n_harmonics must be a non-negative integer")
        if not 0.0 < self.harmonic_decay <= 1.0:
            raise ValueError("harmonic_decay must lie in (0, 1]")
        if not (np.isfinite(self.amplitude_mv) and self.amplitude_mv >= 0):
            raise ValueError("amplitude_mv must be finite and non-negative")
        if self.freq_modulation_hz < 0 or self.freq_modulation_depth < 0:
            raise ValueError("frequency modulation parameters must be >= 0")
        if self.freq_modulation_depth >= self.fundamental_hz:
            raise ValueError("freq_modulation_depth must stay below the fundamental")
        if not 0.0 <= self.broadband_noise_fraction <= 1.0:
            raise ValueError("broadband_noise_fraction must lie in [0, 1]")
        lo, hi = self.noise_band_hz
        if not 0 < lo < hi or (fs is not None and hi >= fs / 2):
            raise ValueError("noise_band_hz must satisfy 0 < low < high < fs/2")
        return self

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


# cohort presets: the slow 0.3 Hz rate wander widens the organized peaks
# the way real f-wave spectra are widened
ORGANIZED_MODEL = FWaveModel(freq_modulation_depth=0.3)
DISORGANIZED_MODEL = FWaveModel(
    fundamental_hz=6.5,
    freq_modulation_depth=0.3,
    n_harmonics=1,
    harmonic_decay=0.3,
    broadband_noise_fraction=0.75,
    noise_band_hz=(4.5, 8.5),
)


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _unit_rms(x):
    rms = np.sqrt(np.mean(x ** 2))
    return x / rms if rms > 0 else x


def _band_noise(rng, n, fs, band):
    white = rng.standard_normal(n)
    sos = signal.butter(4, band, btype="bandpass", fs=fs, output="sos")
    return _unit_rms(signal.sosfiltfilt(sos, white))


def synth_fwave(model: FWaveModel, fs, duration_s, seed=0) -> np.ndarray:
    """Sample the atrial model; RMS equals ``amplitude_mv / sqrt(2)``."""
    fs = check_sampling_rate(fs)
    model.validate(fs)
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    n = int(round(duration_s * fs))
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    inst = model.fundamental_hz + model.freq_modulation_depth * np.sin(
        2 * np.pi * model.freq_modulation_hz * t + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * np.cumsum(inst) / fs + rng.uniform(0, 2 * np.pi)
    organized = np.zeros(n)
    for k in range(1, int(model.n_harmonics) + 2):
        if k * (model.fundamental_hz + model.freq_modulation_depth) >= fs / 2:
            break
        organized += model.harmonic_decay ** (k - 1) * np.sin(k * phase)
    noise = _band_noise(rng, n, fs, model.noise_band_hz)
    q = model.broadband_noise_fraction
    mix = np.sqrt(1 - q) * _unit_rms(organized) + np.sqrt(q) * noise
    return model.amplitude_mv / np.sqrt(2) * mix


def qrst_template(fs, amplitude_mv=1.0):
    """Gaussian-bump QRS with a smooth T wave; returns (offsets, waveform)."""
    tau = np.arange(int(round(-0.2 * fs)), int(round(0.5 * fs)) + 1) / fs

    def bump(center, width):
        return np.exp(-0.5 * ((tau - center) / width) ** 2)

    wave = (-0.12 * bump(-0.025, 0.008) + bump(0.0, 0.010)
            - 0.2 * bump(0.03, 0.009) + 0.25 * bump(0.28, 0.045))
    wave /= wave[np.argmin(np.abs(tau))]
    return np.rint(tau * fs).astype(int), amplitude_mv * wave


@dataclass(frozen=True)
class SynthTruth:
    fwave: np.ndarray = field(repr=False)
    r_indices: np.ndarray


def synth_ecg(fwave: FWaveModel, mean_rr_s=0.8, rr_jitter_s=0.05,
              ventricular_amplitude_mv=1.0, noise_sigma_mv=0.02, fs=977.0,
              duration_s=30.0, seed=0, patient_id="synthetic", outcome=None):
    """Build a single-lead (V1) AF ECG: f-wave + QRST train + white noise.

    R times start at 0 s and advance by ``mean_rr_s + rr_jitter_s * N(0, 1)``
    (floored at 0.3 s). Returns ``(EcgRecord, SynthTruth)``.
    """
    fs = check_sampling_rate(fs)
    if mean_rr_s < 0.3:
        raise ValueError("mean_rr_s must be at least 0.3 s")
    if rr_jitter_s < 0 or noise_sigma_mv < 0 or ventricular_amplitude_mv < 0:
        raise ValueError("jitter, noise and amplitude must be non-negative")
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    fw_seed, rr_seed, noise_seed = _seed_sequence(seed).spawn(3)
    atrial = synth_fwave(fwave, fs, duration_s, fw_seed)
    n = atrial.size

    rng = np.random.default_rng(rr_seed)
    times = []
    t_r = 0.0
    while t_r < duration_s:
        times.append(t_r)
        t_r += max(0.3, mean_rr_s + rr_jitter_s * rng.standard_normal())
    r_idx = np.array(sorted({int(round(t * fs)) for t in times}), dtype=int)
    r_idx = r_idx[r_idx < n]

    ventricular = np.zeros(n)
    offsets, wave = qrst_template(fs, ventricular_amplitude_mv)
    for r in r_idx:
        pos = r + offsets
        ok = (pos >= 0) & (pos < n)
        ventricular[pos[ok]] += wave[ok]

    noise = noise_sigma_mv * np.random.default_rng(noise_seed).standard_normal(n)
    record = EcgRecord(patient_id=patient_id, sampling_rate_hz=fs,
                       leads={"V1": atrial + ventricular + noise}, outcome=outcome)
    return record, SynthTruth(atrial, r_idx)


@dataclass
class SynthCohort:
    records: list
    truths: list
    manifest_path: Path | None = None


def _jitter_model(model, rng):
    return model.replace(
        fundamental_hz=float(np.clip(model.fundamental_hz + rng.uniform(-0.6, 0.6), 3.0, 12.0)),
        amplitude_mv=float(model.amplitude_mv * np.exp(0.25 * rng.standard_normal())),
        broadband_noise_fraction=float(np.clip(
            model.broadband_noise_fraction + rng.uniform(-0.4, 0.4), 0.0, 1.0)),
    )


def synth_cohort(n_sr=40, n_af=40, organized_model=ORGANIZED_MODEL,
                 disorganized_model=DISORGANIZED_MODEL, seed=0, out_dir=None,
                 fs=977.0, duration_s=30.0, noise_sigma_mv=0.02) -> SynthCohort:
    """Generate ``n_sr`` organized (SR-labelled) and ``n_af`` disorganized patients.

    Each patient gets jittered atrial parameters, heart rate and QRS
    amplitude. With ``out_dir`` the records are written under
    ``out_dir/records`` together with ``out_dir/manifest.csv``.
    """
    if n_sr < 1 or n_af < 1:
        raise ValueError("n_sr and n_af must both be >= 1")
    organized_model.validate(fs)
    disorganized_model.validate(fs)
    children = _seed_sequence(seed).spawn(n_sr + n_af)
    records, truths = [], []
    for i, child in enumerate(children):
        outcome = Outcome.SR if i < n_sr else Outcome.AF
        base = organized_model if outcome is Outcome.SR else disorganized_model
        param_seed, ecg_seed = child.spawn(2)
        rng = np.random.default_rng(param_seed)
        model = _jitter_model(base, rng)
        record, truth = synth_ecg(
            model,
            mean_rr_s=float(rng.uniform(0.65, 1.0)),
            rr_jitter_s=float(rng.uniform(0.03, 0.1)),
            ventricular_amplitude_mv=float(np.exp(0.2 * rng.standard_normal())),
            noise_sigma_mv=noise_sigma_mv,
            fs=fs, duration_s=duration_s, seed=ecg_seed,
            patient_id=f"P{i + 1:03d}", outcome=outcome)
        records.append(record)
        truths.append(truth)

    manifest_path = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        entries = []
        for rec in records:
            path = out_dir / "records" / f"{rec.patient_id}.csv"
            save_ecg(rec, path)
            entries.append(ManifestEntry(rec.patient_id, path, rec.outcome))
        manifest_path = out_dir / "manifest.csv"
        write_manifest(entries, manifest_path)
    return SynthCohort(records, truths, manifest_path)
