"""Command-line interface: synth, extract, features, evaluate, plot-psd.

All commands share a working directory (``--out``)::

    manifest.csv, records/        written by ``synth``
    segments/<id>.csv             f-wave segments, one column per segment
    segments/<id>.meta.json       sampling rate, outcome, median R amplitude
    skip_report.csv               patients dropped by ``extract`` and why
    features.csv                  per-patient feature table
    table1.csv, table2.csv        group statistics / classification summary
    evaluation.json               full per-repetition evaluation data
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import Outcome
from .ecg_io import FWaveSegment, load_ecg, read_manifest
from .evaluation import holdout_evaluate, sequential_forward_selection
from .extraction import extract_fwaves
from .features import c0_column, feature_matrix, patient_features, read_features, write_features
from .preprocess import FilterSpec
from .spectral import ALPHAS, c0_partition, normalize_psd, welch_psd
from .stats import HIGHER, LOWER, RocThresholdClassifier, mann_whitney_u, median_iqr
from .synth import synth_cohort
from .tree import SplitBudgetTreeClassifier, train_decision_tree

logger = logging.getLogger("fwavekit")

PAIR_COLUMNS = ("df_hz", "c0_a2")


@dataclass
class RunConfig:
    out_dir: Path
    manifest: Path | None = None
    seed: int = 0
    alphas: tuple = ALPHAS
    repetitions: int = 100
    train_fraction: float = 2 / 3
    filter_spec: FilterSpec = field(default_factory=FilterSpec)
    jobs: int = 1

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if self.manifest is not None:
            self.manifest = Path(self.manifest)
        if any(not a > 0 for a in self.alphas):
            raise ValueError("alphas must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")

    @property
    def segments_dir(self) -> Path:
        return self.out_dir / "segments"

    @property
    def features_path(self) -> Path:
        return self.out_dir / "features.csv"


def index_label(column) -> str:
    if column == "df_hz":
        return "DF"
    if column == "nfwa_percent":
        return "nFWA"
    return f"C0[alpha={column[4:]}]"


def default_direction(column) -> str:
    """Side of the threshold associated with relapse: DF higher, nFWA and C0 lower."""
    return HIGHER if column == "df_hz" else LOWER


def _write_atomic(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    os.replace(tmp, path)


# -- synth -------------------------------------------------------------------

def cmd_synth(config: RunConfig, n_sr=40, n_af=40, duration_s=30.0, fs=977.0):
    cohort = synth_cohort(n_sr, n_af, seed=config.seed, out_dir=config.out_dir,
                          fs=fs, duration_s=duration_s)
    return cohort.manifest_path


# -- extract -----------------------------------------------------------------

def _segment_paths(seg_dir, pid):
    return seg_dir / f"{pid}.csv", seg_dir / f"{pid}.meta.json"


def _extract_one(args):
    pid, ecg_path, outcome, spec, seg_dir = args
    csv_path, meta_path = _segment_paths(seg_dir, pid)
    for p in (csv_path, meta_path):
        p.unlink(missing_ok=True)
    try:
        record = load_ecg(ecg_path)
        res = extract_fwaves(record, spec)
    except (OSError, ValueError, KeyError) as exc:
        return pid, f"error: {exc}"
    if not res.ok:
        return pid, res.status
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"segment_{s.segment_index}" for s in res.segments])
    for row in zip(*(s.samples for s in res.segments)):
        w.writerow([repr(float(v)) for v in row])
    label = outcome if outcome is not None else record.outcome
    meta = {
        "patient_id": pid,
        "outcome": label.value if label else None,
        "sampling_rate_hz": record.sampling_rate_hz,
        "median_r_mv": res.median_r_mv,
        "n_beats": int(res.r_indices.size),
        "n_segments": len(res.segments),
    }
    _write_atomic(csv_path, buf.getvalue())
    _write_atomic(meta_path, json.dumps(meta, indent=2) + "\n")
    return pid, None


def cmd_extract(config: RunConfig):
    """Run preprocessing, QRST cancellation and segmentation for every patient.

    Returns the skip report as a list of ``(patient_id, reason)``.
    """
    if config.manifest is None:
        raise ValueError("extract needs a manifest")
    entries = read_manifest(config.manifest)
    if not entries:
        raise ValueError(f"{config.manifest}: empty manifest")
    config.segments_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(e.patient_id, e.ecg_path, e.outcome, config.filter_spec, config.segments_dir)
            for e in entries]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_extract_one, jobs))
    else:
        results = [_extract_one(j) for j in jobs]
    skipped = [(pid, reason) for pid, reason in results if reason is not None]
    for pid, reason in skipped:
        logger.warning("skipped %s: %s", pid, reason)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["patient_id", "reason"])
    w.writerows(skipped)
    _write_atomic(config.out_dir / "skip_report.csv", buf.getvalue())
    return skipped


# -- features ----------------------------------------------------------------

def load_segments(seg_dir, pid):
    csv_path, meta_path = _segment_paths(Path(seg_dir), pid)
    if not meta_path.exists() or not csv_path.exists():
        raise FileNotFoundError(f"missing segments for patient {pid}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    fs = float(meta["sampling_rate_hz"])
    segments = [FWaveSegment(pid, i, data[:, i], fs) for i in range(data.shape[1])]
    return segments, meta


def cmd_features(config: RunConfig):
    seg_dir = config.segments_dir
    metas = sorted(seg_dir.glob("*.meta.json")) if seg_dir.is_dir() else []
    if not metas:
        raise FileNotFoundError(f"no extracted segments under {seg_dir}")
    rows = []
    for meta_path in metas:
        pid = json.loads(meta_path.read_text(encoding="utf-8"))["patient_id"]
        segments, meta = load_segments(seg_dir, pid)
        rows.append(patient_features(segments, meta["median_r_mv"], config.alphas,
                                     outcome=meta.get("outcome")))
    write_features(rows, config.features_path, config.alphas)
    return rows


# -- evaluate ----------------------------------------------------------------

def _fmt(v):
    return f"{v:.4f}"


def cmd_evaluate(config: RunConfig, features_path=None):
    """Write table1.csv, table2.csv and evaluation.json; returns the JSON payload."""
    path = Path(features_path) if features_path else config.features_path
    rows, alphas = read_features(path)
    columns = ["df_hz", "nfwa_percent"] + [c0_column(a) for a in alphas]
    X, y = feature_matrix(rows, columns)
    n_af = int(y.sum())
    n_sr = int(y.size - n_af)
    if n_af == 0 or n_sr == 0:
        raise ValueError("evaluation needs both SR and AF patients")

    table1 = []
    for j, col in enumerate(columns):
        sr_med, sr_iqr = median_iqr(X[y == 0, j])
        af_med, af_iqr = median_iqr(X[y == 1, j])
        _, p = mann_whitney_u(X[y == 0, j], X[y == 1, j])
        table1.append({"index": index_label(col), "median_SR": sr_med, "iqr_SR": sr_iqr,
                       "median_AF": af_med, "iqr_AF": af_iqr, "p_value": p})

    common = dict(repetitions=config.repetitions, train_fraction=config.train_fraction,
                  seed=config.seed)
    reports = []
    for j, col in enumerate(columns):
        clf = RocThresholdClassifier(direction=default_direction(col))
        reports.append(holdout_evaluate(X[:, [j]], y, clf, name=index_label(col), **common))

    selected = sequential_forward_selection(X, y, columns, seed=config.seed)
    tree_sets = []
    if all(c in columns for c in PAIR_COLUMNS):
        tree_sets.append(list(PAIR_COLUMNS))
    if selected and selected not in tree_sets:
        tree_sets.append(selected)
    for cols in tree_sets:
        idx = [columns.index(c) for c in cols]
        name = "Tree[" + " + ".join(index_label(c) for c in cols) + "]"
        rep = holdout_evaluate(X[:, idx], y, SplitBudgetTreeClassifier(max_splits=5),
                               name=name, **common)
        rep.model = train_decision_tree(X[:, idx], y, feature_ids=cols).describe()
        reports.append(rep)

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "median_SR", "iqr_SR", "median_AF", "iqr_AF", "p_value"])
    for r in table1:
        w.writerow([r["index"], _fmt(r["median_SR"]), _fmt(r["iqr_SR"]),
                    _fmt(r["median_AF"]), _fmt(r["iqr_AF"]), f"{r['p_value']:.6g}"])
    _write_atomic(out / "table1.csv", buf.getvalue())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "Se", "Sp", "Acc", "AUC"])
    for rep in reports:
        w.writerow([rep.name, _fmt(rep.mean_se), _fmt(rep.mean_sp), _fmt(rep.mean_acc),
                    _fmt(rep.mean_auc)])
    _write_atomic(out / "table2.csv", buf.getvalue())

    payload = {
        "n_sr": n_sr,
        "n_af": n_af,
        "seed": config.seed,
        "repetitions": config.repetitions,
        "train_fraction": config.train_fraction,
        "table1": table1,
        "selected_features": selected,
        "reports": [rep.to_dict() for rep in reports],
    }
    _write_atomic(out / "evaluation.json", json.dumps(payload, indent=1, sort_keys=True) + "\n")
    return payload


# -- plot-psd ----------------------------------------------------------------

def psd_partition_csv(samples, fs, alpha) -> str:
    spec = normalize_psd(welch_psd(samples, fs))
    theta, above = c0_partition(spec, alpha)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", "psd_n", "theta", "above_theta"])
    for f, p, a in zip(spec.freqs_hz, spec.power, above):
        w.writerow([f"{f:.1f}", repr(float(p)), repr(theta), "true" if a else "false"])
    return buf.getvalue()


def cmd_plot_psd(config: RunConfig, patient_id, segment_index=0, alpha=2.0, output=None):
    try:
        segments, _ = load_segments(config.segments_dir, patient_id)
    except FileNotFoundError:
        raise ValueError(f"unknown patient {patient_id!r}") from None
    if not 0 <= segment_index < len(segments):
        raise ValueError(f"patient {patient_id} has no segment {segment_index}")
    seg = segments[segment_index]
    text = psd_partition_csv(seg.samples, seg.sampling_rate_hz, alpha)
    path = Path(output) if output else (
        config.out_dir / f"psd_{patient_id}_seg{segment_index}_a{alpha:g}.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_atomic(path, text)
    return path


# -- argument parsing --------------------------------------------------------

def _alphas(text):
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid alpha list {text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("alphas must be positive")
    return values


def build_parser():
    parser = argparse.ArgumentParser(prog="fwavekit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, type=Path, help="working directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("synth", help="write a synthetic labelled cohort")
    common(p)
    p.add_argument("--n-sr", type=int, default=40)
    p.add_argument("--n-af", type=int, default=40)
    p.add_argument("--duration", type=float, default=30.0, help="seconds per record")
    p.add_argument("--fs", type=float, default=977.0)

    p = sub.add_parser("extract", help="extract f-wave segments from a cohort")
    common(p)
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--filter-config", type=Path, help="JSON file with FilterSpec fields")
    p.add_argument("--highpass-hz", type=float)
    p.add_argument("--powerline-hz", type=float)
    p.add_argument("--notch-bandwidth-hz", type=float)
    p.add_argument("--lowpass-hz", type=float)
    p.add_argument("--wavelet-levels", type=int)

    p = sub.add_parser("features", help="compute the per-patient feature table")
    common(p)
    p.add_argument("--alphas", type=_alphas, default=ALPHAS)

    p = sub.add_parser("evaluate", help="group statistics and hold-out classification")
    common(p)
    p.add_argument("--features", type=Path, help="feature table (default OUT/features.csv)")
    p.add_argument("--repetitions", type=int, default=100)
    p.add_argument("--train-fraction", type=float, default=2 / 3)

    p = sub.add_parser("plot-psd", help="normalized PSD with the C0 partition")
    common(p)
    p.add_argument("--patient", required=True)
    p.add_argument("--segment", type=int, default=0)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--output", type=Path)
    return parser


def _filter_spec(args):
    spec = FilterSpec()
    if args.filter_config:
        spec = FilterSpec.from_dict(json.loads(args.filter_config.read_text(encoding="utf-8")))
    overrides = {
        "highpass_cutoff_hz": args.highpass_hz,
        "notch_freq_hz": args.powerline_hz,
        "notch_bandwidth_hz": args.notch_bandwidth_hz,
        "lowpass_cutoff_hz": args.lowpass_hz,
        "wavelet_levels": args.wavelet_levels,
    }
    return replace(spec, **{k: v for k, v in overrides.items() if v is not None})


def main(argv=None):
    logging.basicConfig(level=os.environ.get("FWAVEKIT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(out_dir=args.out, seed=args.seed)
        if args.command == "synth":
            path = cmd_synth(config, args.n_sr, args.n_af, args.duration, args.fs)
            print(path)
        elif args.command == "extract":
            config = replace(config, manifest=args.manifest, jobs=args.jobs,
                             filter_spec=_filter_spec(args))
            skipped = cmd_extract(config)
            print(f"extracted; {len(skipped)} patient(s) skipped")
        elif args.command == "features":
            rows = cmd_features(replace(config, alphas=args.alphas))
            print(f"{len(rows)} patients -> {config.features_path}")
        elif args.command == "evaluate":
            config = replace(config, repetitions=args.repetitions,
                             train_fraction=args.train_fraction)
            cmd_evaluate(config, args.features)
            print(config.out_dir / "table2.csv")
        elif args.command == "plot-psd":
            print(cmd_plot_psd(config, args.patient, args.segment, args.alpha, args.output))
    except (OSError, ValueError, KeyError) as exc:
        print(f"fwavekit {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
