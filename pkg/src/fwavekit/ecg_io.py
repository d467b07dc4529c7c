"""ECG record types, on-disk formats and fixed-length segmentation.

A record is stored as two files sharing a stem::

    <name>.csv        header "t,<lead1>,<lead2>,...", one sample per row,
                      lead values in integer ADC units
    <name>.meta.json  {"patient_id", "sampling_rate_hz", "resolution_bits",
                       "scale_mv_per_unit", "outcome": "SR"|"AF"|null}

A cohort is a manifest CSV ``patient_id,ecg_path,outcome`` with paths
relative to the manifest's directory.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ._validation import Outcome, check_sampling_rate

SEGMENT_SECONDS = 6.0
MAX_SEGMENTS = 5

STATUS_OK = "ok"
STATUS_TOO_SHORT = "too short"


class EcgFormatError(ValueError):
    """Raised for malformed ECG files, with file and line context."""

    def __init__(self, path, message, line=None):
        where = f"{path}" if line is None else f"{path}:{line}"
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line


@dataclass(frozen=True)
class EcgRecord:
    """A multi-lead ECG in millivolts."""

    patient_id: str
    sampling_rate_hz: float
    leads: dict
    resolution_bits: int = 16
    outcome: Outcome | None = None

    def __post_init__(self):
        check_sampling_rate(self.sampling_rate_hz)
        if not self.leads:
            raise ValueError("record has no leads")
        if self.resolution_bits < 1:
            raise ValueError("resolution_bits must be a positive integer")
        leads = {}
        lengths = set()
        for name, values in self.leads.items():
            arr = np.array(values, dtype=float)
            if arr.ndim != 1 or arr.size < 1:
                raise ValueError(f"lead {name!r} must be a non-empty 1-D sequence")
            arr.setflags(write=False)
            leads[str(name)] = arr
            lengths.add(arr.size)
        if len(lengths) != 1:
            raise ValueError(f"mismatched lead lengths: {sorted(lengths)}")
        object.__setattr__(self, "leads", leads)
        object.__setattr__(self, "outcome", Outcome.parse(self.outcome))

    @property
    def n_samples(self) -> int:
        return next(iter(self.leads.values())).size

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sampling_rate_hz

    def lead(self, name="V1") -> np.ndarray:
        try:
            return self.leads[name]
        except KeyError:
            raise KeyError(f"lead {name} missing") from None


@dataclass(frozen=True)
class FWaveSegment:
    """One 6-second window of extracted atrial activity."""

    patient_id: str
    segment_index: int
    samples: np.ndarray = field(repr=False)
    sampling_rate_hz: float

    def __post_init__(self):
        fs = check_sampling_rate(self.sampling_rate_hz)
        x = np.array(self.samples, dtype=float)
        expected = segment_length(fs)
        if x.ndim != 1 or x.size != expected:
            raise ValueError(
                f"segment must hold {expected} samples at {fs:g} Hz, got {x.size}")
        if not 0 <= self.segment_index < MAX_SEGMENTS:
            raise ValueError(f"segment_index must be in [0, {MAX_SEGMENTS})")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)


class Segmentation(NamedTuple):
    segments: list
    status: str


def segment_length(fs, segment_seconds=SEGMENT_SECONDS) -> int:
    return int(round(segment_seconds * fs))


def segment_signal(samples, sampling_rate_hz, segment_seconds=SEGMENT_SECONDS,
                   max_segments=MAX_SEGMENTS) -> Segmentation:
    """Chop a signal into consecutive non-overlapping windows.

    The trailing partial window is discarded and at most ``max_segments``
    windows are kept, earliest first. A signal shorter than one window gives
    an empty list with status ``"too short"``.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("samples must be a non-empty 1-D sequence")
    fs = check_sampling_rate(sampling_rate_hz)
    if segment_seconds <= 0:
        raise ValueError("segment_seconds must be positive")
    if max_segments < 1:
        raise ValueError("max_segments must be a positive integer")
    L = segment_length(fs, segment_seconds)
    n = min(x.size // L, int(max_segments))
    if n == 0:
        return Segmentation([], STATUS_TOO_SHORT)
    return Segmentation([x[i * L:(i + 1) * L].copy() for i in range(n)], STATUS_OK)


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    name = p.name[:-4] if p.name.lower().endswith(".csv") else p.name
    return p.with_name(name + ".meta.json")


def _read_sidecar(path):
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        raise FileNotFoundError(f"missing sidecar {meta_path}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise EcgFormatError(meta_path, f"invalid JSON ({exc.msg})", exc.lineno) from None
    if not isinstance(meta, dict):
        raise EcgFormatError(meta_path, "sidecar must be a JSON object")
    for key in ("patient_id", "sampling_rate_hz"):
        if key not in meta:
            raise EcgFormatError(meta_path, f"missing key {key!r}")
    try:
        fs = float(meta["sampling_rate_hz"])
    except (TypeError, ValueError):
        raise EcgFormatError(meta_path, "sampling_rate_hz is not a number") from None
    if not np.isfinite(fs) or fs <= 0:
        raise EcgFormatError(meta_path, f"non-positive sampling rate: {fs:g}")
    scale = float(meta.get("scale_mv_per_unit", 1.0))
    if not np.isfinite(scale) or scale <= 0:
        raise EcgFormatError(meta_path, "scale_mv_per_unit must be positive")
    bits = int(meta.get("resolution_bits", 16))
    try:
        outcome = Outcome.parse(meta.get("outcome"))
    except ValueError as exc:
        raise EcgFormatError(meta_path, str(exc)) from None
    return str(meta["patient_id"]), fs, bits, scale, outcome


def load_ecg(path) -> EcgRecord:
    """Read a record from its CSV file and ``.meta.json`` sidecar."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing ECG file {path}")
    patient_id, fs, bits, scale, outcome = _read_sidecar(path)

    with open(path, encoding="utf-8", newline="") as fh:
        header_line = fh.readline()
        body = fh.read()
    header = [h.strip() for h in next(csv.reader([header_line]), [])]
    if len(header) < 2 or header[0] != "t" or any(not h for h in header[1:]):
        raise EcgFormatError(path, "malformed header, expected 't,<lead>,...'", 1)
    if len(set(header[1:])) != len(header) - 1:
        raise EcgFormatError(path, "duplicate lead names in header", 1)

    ncols = len(header)
    rows = []
    for lineno, line in enumerate(body.splitlines(), start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != ncols:
            raise EcgFormatError(
                path, f"mismatched lead lengths: expected {ncols} columns, "
                f"got {len(parts)}", lineno)
        rows.append(parts)
    if not rows:
        raise EcgFormatError(path, "no samples")
    try:
        data = np.array(rows, dtype=float)
    except ValueError:
        for lineno, parts in enumerate(rows, start=2):
            try:
                [float(v) for v in parts]
            except ValueError:
                raise EcgFormatError(path, "non-numeric value", lineno) from None
        raise
    leads = {name: data[:, j + 1] * scale for j, name in enumerate(header[1:])}
    return EcgRecord(patient_id=patient_id, sampling_rate_hz=fs, leads=leads,
                     resolution_bits=bits, outcome=outcome)


def _atomic_write_text(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    os.replace(tmp, path)


def save_ecg(record: EcgRecord, path, scale_mv_per_unit=0.001):
    """Write ``record`` as CSV + sidecar, quantizing leads to integer units.

    Values that are exact multiples of ``scale_mv_per_unit`` round-trip
    through :func:`load_ecg` bit-exactly.
    """
    path = Path(path)
    scale = float(scale_mv_per_unit)
    if not np.isfinite(scale) or scale <= 0:
        raise ValueError("scale_mv_per_unit must be positive")
    names = list(record.leads)
    units = np.column_stack([np.rint(record.leads[n] / scale) for n in names])
    limit = 2 ** (record.resolution_bits - 1)
    if units.size and (units.min() < -limit or units.max() > limit - 1):
        raise ValueError(
            f"values exceed {record.resolution_bits}-bit range at "
            f"{scale:g} mV/unit")
    units = units.astype(np.int64)
    fs = record.sampling_rate_hz

    buf = io.StringIO()
    buf.write("t," + ",".join(names) + "\n")
    for i, row in enumerate(units):
        buf.write(f"{i / fs:.6f}," + ",".join(str(v) for v in row) + "\n")
    meta = {
        "patient_id": record.patient_id,
        "sampling_rate_hz": fs,
        "resolution_bits": record.resolution_bits,
        "scale_mv_per_unit": scale,
        "outcome": record.outcome.value if record.outcome else None,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write_text(path, buf.getvalue())
    _atomic_write_text(sidecar_path(path), json.dumps(meta, indent=2) + "\n")


@dataclass(frozen=True)
class ManifestEntry:
    patient_id: str
    ecg_path: Path
    outcome: Outcome | None


def read_manifest(path) -> list:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing manifest {path}")
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["patient_id", "ecg_path", "outcome"]:
            raise EcgFormatError(path, "manifest header must be 'patient_id,ecg_path,outcome'", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or not any(c.strip() for c in row):
                continue
            if len(row) != 3:
                raise EcgFormatError(path, "expected 3 columns", lineno)
            pid, ecg_path, outcome = (c.strip() for c in row)
            ecg = Path(ecg_path)
            if not ecg.is_absolute():
                ecg = path.parent / ecg
            try:
                entries.append(ManifestEntry(pid, ecg, Outcome.parse(outcome)))
            except ValueError as exc:
                raise EcgFormatError(path, str(exc), lineno) from None
    return entries


def write_manifest(entries, path):
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["patient_id", "ecg_path", "outcome"])
    for e in entries:
        ecg = Path(e.ecg_path)
        try:
            ecg = ecg.relative_to(path.parent)
        except ValueError:
            pass
        writer.writerow([e.patient_id, ecg.as_posix(), e.outcome.value if e.outcome else ""])
    path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write_text(path, buf.getvalue())
