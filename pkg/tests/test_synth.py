import numpy as np
import pytest

from conftest import FS
from fwavekit.ecg_io import load_ecg, read_manifest
from fwavekit.spectral import c0_complexity, dominant_frequency, normalize_psd, welch_psd
from fwavekit.synth import (DISORGANIZED_MODEL, ORGANIZED_MODEL, FWaveModel, synth_cohort,
                            synth_ecg, synth_fwave)


def test_organized_fwave_dominant_frequency():
    model = FWaveModel(fundamental_hz=6.0, n_harmonics=2, broadband_noise_fraction=0.0)
    x = synth_fwave(model, FS, 6, seed=0)
    assert abs(dominant_frequency(welch_psd(x, FS)) - 6.0) <= 0.1


def test_zero_amplitude():
    x = synth_fwave(ORGANIZED_MODEL.replace(amplitude_mv=0.0), FS, 6, seed=0)
    assert not np.any(x)


def test_fwave_deterministic():
    a = synth_fwave(DISORGANIZED_MODEL, FS, 10, seed=7)
    np.testing.assert_array_equal(a, synth_fwave(DISORGANIZED_MODEL, FS, 10, seed=7))
    assert not np.array_equal(a, synth_fwave(DISORGANIZED_MODEL, FS, 10, seed=8))


def test_fwave_rms_matches_amplitude():
    # organized and noise parts are each unit-RMS; their cross term is small, not zero
    x = synth_fwave(ORGANIZED_MODEL, FS, 30, seed=1)
    assert np.sqrt(np.mean(x ** 2)) == pytest.approx(ORGANIZED_MODEL.amplitude_mv / np.sqrt(2),
                                                     rel=0.02)


def test_fwave_energy_in_atrial_band():
    x = synth_fwave(DISORGANIZED_MODEL, FS, 30, seed=1)
    spec = welch_psd(x, FS)
    _, inband = spec.in_band()
    assert inband.sum() / spec.power.sum() > 0.95


@pytest.mark.parametrize("field,value", [
    ("fundamental_hz", 2.0), ("fundamental_hz", 13.0), ("n_harmonics", -1),
    ("harmonic_decay", 0.0), ("amplitude_mv", -1.0), ("broadband_noise_fraction", 1.5),
    ("freq_modulation_hz", -0.1),
])
def test_invalid_model(field, value):
    with pytest.raises(ValueError):
        synth_fwave(ORGANIZED_MODEL.replace(**{field: value}), FS, 6)


def test_regular_r_marks():
    rec, truth = synth_ecg(ORGANIZED_MODEL, mean_rr_s=1.0, rr_jitter_s=0.0, duration_s=30)
    np.testing.assert_array_equal(truth.r_indices, np.arange(30) * 977)
    assert rec.n_samples == 29310


def test_zero_ventricular_amplitude():
    rec, truth = synth_ecg(ORGANIZED_MODEL, ventricular_amplitude_mv=0.0,
                           noise_sigma_mv=0.0, seed=4)
    np.testing.assert_array_equal(rec.lead("V1"), truth.fwave)


@pytest.mark.parametrize("kwargs", [dict(mean_rr_s=0.2), dict(rr_jitter_s=-1),
                                    dict(noise_sigma_mv=-1), dict(duration_s=0)])
def test_invalid_ecg_parameters(kwargs):
    with pytest.raises(ValueError):
        synth_ecg(ORGANIZED_MODEL, **kwargs)


def test_cohort_files_and_determinism(tmp_path):
    a = synth_cohort(3, 2, seed=11, out_dir=tmp_path / "a", duration_s=8)
    b = synth_cohort(3, 2, seed=11, out_dir=tmp_path / "b", duration_s=8)
    entries = read_manifest(a.manifest_path)
    assert [e.outcome.value for e in entries] == ["SR"] * 3 + ["AF"] * 2
    for e in entries:
        other = tmp_path / "b" / "records" / e.ecg_path.name
        assert e.ecg_path.read_bytes() == other.read_bytes()
        assert load_ecg(e.ecg_path).patient_id == e.patient_id
    assert a.manifest_path.read_bytes() == b.manifest_path.read_bytes()


def test_cohort_size_error():
    with pytest.raises(ValueError):
        synth_cohort(0, 3)


def test_organized_has_higher_c0_on_average():
    def c0(model, seed):
        x = synth_fwave(model, FS, 6, seed=seed)
        return c0_complexity(normalize_psd(welch_psd(x, FS)), 2.0)
    sr = np.mean([c0(ORGANIZED_MODEL, s) for s in range(10)])
    af = np.mean([c0(DISORGANIZED_MODEL, s) for s in range(10)])
    assert sr > af


def test_c0_trend_with_harmonics():
    # more organized harmonics above theta leave less mass in the irregular part
    def mean_c0(k):
        model = FWaveModel(n_harmonics=k, harmonic_decay=0.8, broadband_noise_fraction=0.0)
        vals = []
        for s in range(8):
            spec = normalize_psd(welch_psd(synth_fwave(model, FS, 6, seed=s), FS))
            vals.append(c0_complexity(spec, 2.0))
        return np.mean(vals)
    trend = [mean_c0(k) for k in (0, 1, 2, 3)]
    assert trend == sorted(trend) or trend == sorted(trend, reverse=True)
