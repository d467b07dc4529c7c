import numpy as np
import pytest

from fwavekit.synth import ORGANIZED_MODEL, synth_ecg

FS = 977.0

_criteria = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
            _criteria[item.nodeid] = [marker.args[0], doc, None]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    entry = _criteria.get(report.nodeid)
    if entry is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        if entry[2] in (None, "PASS"):
            entry[2] = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, doc, status in sorted(_criteria.values(), key=lambda e: e[0]):
        terminalreporter.write_line(f"[{status or 'NOT RUN'}] criterion {number}: {doc}")


def sine(freq, seconds, fs=FS, amplitude=1.0):
    t = np.arange(int(round(seconds * fs))) / fs
    return amplitude * np.sin(2 * np.pi * freq * t)


@pytest.fixture(scope="session")
def synthetic_ecg():
    """Default 30 s synthetic record: 1 mV QRST, 0.1 mV f-wave, 0.02 mV noise."""
    return synth_ecg(ORGANIZED_MODEL, mean_rr_s=0.8, rr_jitter_s=0.05,
                     ventricular_amplitude_mv=1.0, noise_sigma_mv=0.02,
                     fs=FS, duration_s=30.0, seed=3)
