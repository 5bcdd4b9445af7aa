"""``fallsense`` command line: generate, train, replay, diag.

Options can also come from a ``key = value`` file passed with ``--config``;
flags on the command line win over the file. Keys are option names with
dashes or underscores (``vote_threshold = 4``).

Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .csi_pipeline import (
    CSI_WINDOW,
    DopplerParams,
    DwtConfig,
    csi_tensor,
    doppler_phase_shift,
    doppler_shift,
    motion_statistic,
    phase,
)
from .errors import DataError, FallSenseError
from .formats import (
    class_label,
    load_arrays,
    read_csi_trace,
    read_imu_trace,
    save_arrays,
    write_csi_trace,
    write_imu_trace,
    write_json,
    write_series,
    write_verdict_log,
)
from .fusion import FusionConfig, run_session, summarize
from .imu_pipeline import FilterConfig, extract_features, magnitude_streams
from .neural import CnnModel, MlpModel, TrainConfig, evaluate, load_weights, save_weights, train
from .neural.training import CSI_RECIPE, IMU_RECIPE, stratified_split
from .sensor_model import DEFAULT_RATE_HZ, CsiFrame, CsiGeometry, imu_trace_from_array
from .synth import (
    CLASS_NAMES,
    CSI_COUNTS,
    SCENARIOS,
    TABLE1_COUNTS,
    gen_csi_dataset,
    gen_imu_dataset,
    gen_scenario,
    scenario_spec,
)

log = logging.getLogger("fallsense")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
CSI_CLASS_NAMES = ("static", "motion")
SEED_ENV = "FALLSENSE_SEED"


class UsageError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs once flags, config file and env are merged."""

    paths: dict = field(default_factory=dict)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    rate: float = DEFAULT_RATE_HZ
    verbosity: int = 0


def run_config(args) -> RunConfig:
    paths = {k: getattr(args, k) for k in ("imu", "csi", "mlp", "cnn", "dataset", "out")
             if getattr(args, k, None) is not None}
    fusion = FusionConfig()
    if hasattr(args, "vote_threshold"):
        fusion = FusionConfig(
            step=args.step, window=args.window, vote_threshold=args.vote_threshold,
            stage2_window=args.stage2_window, imu_quiet_threshold=args.quiet_threshold,
            filter=FilterConfig(alpha=args.alpha),
        )
    cfg = TrainConfig()
    if hasattr(args, "epochs"):
        recipe = IMU_RECIPE if args.kind == "imu" else CSI_RECIPE
        cfg = replace(
            recipe,
            learning_rate=recipe.learning_rate if args.lr is None else args.lr,
            momentum=recipe.momentum if args.momentum is None else args.momentum,
            batch_size=recipe.batch_size if args.batch_size is None else args.batch_size,
            epochs=recipe.epochs if args.epochs is None else args.epochs,
            seed=args.seed,
            train_fraction=args.train_fraction,
        )
    return RunConfig(paths, fusion, cfg, getattr(args, "rate", DEFAULT_RATE_HZ), args.verbose)


# ---------------------------------------------------------------------------
# generate


def _parse_counts(text: str, allowed) -> dict:
    out = {}
    for part in text.split(","):
        name, sep, value = part.partition("=")
        name = name.strip()
        if not sep or name not in allowed:
            raise UsageError(f"bad count {part!r}; expected name=N with name in {sorted(allowed)}")
        try:
            out[name] = int(value)
        except ValueError:
            raise UsageError(f"bad count {part!r}") from None
    return out


def cmd_generate(args) -> int:
    out = Path(args.out)
    seed = args.seed
    if args.scenario:
        spec = scenario_spec(args.scenario, seed)
        imu, csi, impact = gen_scenario(spec)
        out.mkdir(parents=True, exist_ok=True)
        write_imu_trace(imu, out / "imu.csv")
        write_csi_trace(csi, out / "csi.csv")
        write_json({
            "kind": "scenario", "scenario": spec.name, "seed": seed, "rate": DEFAULT_RATE_HZ,
            "segments": [[s.action, s.duration, s.csi] for s in spec.segments],
            "expected": spec.expected, "impact_time": impact, "version": __version__,
        }, out / "manifest.json")
        log.info("scenario %s seed %d: %d IMU samples, %d CSI frames -> %s",
                 spec.name, seed, len(imu), len(csi), out)
        return EXIT_OK

    if args.classes == "table1":
        imu_counts = {c.value: n for c, n in TABLE1_COUNTS.items()}
    else:
        imu_counts = _parse_counts(args.classes, CLASS_NAMES)
    csi_counts = dict(CSI_COUNTS) if args.csi_counts is None \
        else _parse_counts(args.csi_counts, CSI_COUNTS)
    imu = gen_imu_dataset(imu_counts, seed)
    csi = gen_csi_dataset(csi_counts, seed)
    save_arrays(out, {
        "kind": "dataset", "seed": seed, "rate": DEFAULT_RATE_HZ, "version": __version__,
        "imu_counts": imu_counts, "csi_counts": csi_counts,
        "imu_classes": list(CLASS_NAMES), "csi_classes": list(CSI_CLASS_NAMES),
        "imu_columns": ["t", "acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z"],
    }, {"imu_raw": imu.raw, "imu_labels": imu.labels, "csi_raw": csi.raw, "csi_labels": csi.labels})
    log.info("dataset seed %d: %d IMU windows, %d CSI windows -> %s",
             seed, len(imu.labels), len(csi.labels), out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# train


def imu_inputs(raw: np.ndarray, cfg: FilterConfig = FilterConfig()) -> np.ndarray:
    """Feature matrix for a stack of (30, 7) IMU windows."""
    return np.array([extract_features(*magnitude_streams(imu_trace_from_array(w), cfg))
                     for w in raw]).reshape(-1, 20)


def csi_inputs(raw: np.ndarray, dwt: DwtConfig = DwtConfig()) -> np.ndarray:
    """Rate-of-change tensors for a stack of (30, 212) CSI windows."""
    out = []
    for w in raw:
        frames = [CsiFrame.from_raw_row(j / DEFAULT_RATE_HZ, row) for j, row in enumerate(w)]
        out.append(csi_tensor(frames, dwt))
    return np.array(out).reshape(-1, CSI_WINDOW - 1, 106)


def classification_report(labels, pred, names) -> dict:
    n = len(names)
    cm = np.zeros((n, n), dtype=np.int64)
    np.add.at(cm, (labels, pred), 1)
    per_class = {}
    for i, name in enumerate(names):
        tp = int(cm[i, i])
        predicted, actual = int(cm[:, i].sum()), int(cm[i].sum())
        per_class[name] = {
            "precision": tp / predicted if predicted else 0.0,
            "recall": tp / actual if actual else 0.0,
            "support": actual,
        }
    return {"confusion_matrix": cm.tolist(), "per_class": per_class}


def cmd_train(args) -> int:
    rc = run_config(args)
    cfg = rc.train
    if args.kind == "imu":
        manifest, arrays = load_arrays(args.dataset, ("imu_raw", "imu_labels"))
        inputs = imu_inputs(arrays["imu_raw"])
        labels = arrays["imu_labels"].astype(np.int64)
        n_classes = args.n_classes or len(manifest.get("imu_classes", CLASS_NAMES))
        names = [class_label(i, manifest.get("imu_classes", CLASS_NAMES)) for i in range(n_classes)]
    else:
        manifest, arrays = load_arrays(args.dataset, ("csi_raw", "csi_labels"))
        inputs = csi_inputs(arrays["csi_raw"])
        labels = arrays["csi_labels"].astype(np.int64)
        n_classes, names = 2, list(CSI_CLASS_NAMES)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise DataError(f"labels span [{labels.min()}, {labels.max()}] but the model has {n_classes} classes")

    mask = stratified_split(labels, cfg.train_fraction, cfg.seed)
    if args.kind == "imu":
        model = MlpModel.create(n_classes, seed=cfg.seed).set_normalization(inputs[mask])
    else:
        model = CnnModel.create(seed=cfg.seed)
    model, history = train(model, inputs[mask], labels[mask], cfg)
    loss, acc = evaluate(model, inputs[~mask], labels[~mask])
    pred = model.predict(inputs[~mask]) if (~mask).any() else np.zeros(0, dtype=np.int64)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    weight_path = out / ("mlp.fsw" if args.kind == "imu" else "cnn.fsw")
    save_weights(model, weight_path)
    report = {
        "kind": args.kind, "dataset": str(args.dataset), "dataset_seed": manifest.get("seed"),
        "config": cfg.as_dict(), "n_classes": n_classes, "class_names": names,
        "n_train": int(mask.sum()), "n_test": int((~mask).sum()),
        "test_loss": loss, "test_accuracy": acc,
        "history": history, "weights": weight_path.name,
        "weights_sha256": hashlib.sha256(weight_path.read_bytes()).hexdigest(),
        **classification_report(labels[~mask], pred, names),
    }
    write_json(report, out / f"{args.kind}_report.json")
    print(f"{args.kind}: test accuracy {acc:.4f} on {report['n_test']} windows -> {weight_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay


def replay(imu_path, csi_path, mlp_path, cnn_path, fusion: FusionConfig = FusionConfig(),
           rate: float = DEFAULT_RATE_HZ):
    imu = read_imu_trace(imu_path, rate)
    csi = read_csi_trace(csi_path, rate)
    mlp = load_weights(mlp_path, expected_kind=MlpModel.KIND)
    cnn = load_weights(cnn_path, expected_kind=CnnModel.KIND)
    return run_session(imu, csi, mlp, cnn, fusion)


def cmd_replay(args) -> int:
    rc = run_config(args)
    verdicts = replay(args.imu, args.csi, args.mlp, args.cnn, rc.fusion, rc.rate)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = CLASS_NAMES
    write_verdict_log(verdicts, out / "verdicts.csv", names)
    if args.series:
        write_series(verdicts, out / "series.csv", names)
    summary = summarize(verdicts)
    write_json(summary, out / "summary.json")
    print(" ".join(f"{k}={summary[k]}" for k in ("EMERGENCY", "REMINDER", "MISJUDGMENT",
                                                 "vote_fired", "ticks")))
    return EXIT_OK


# ---------------------------------------------------------------------------
# diag


def cmd_diag(args) -> int:
    if args.csi is None and args.velocity is None:
        raise UsageError("diag needs --csi and/or --velocity")
    if args.velocity is not None:
        geom = CsiGeometry(carrier_frequency=args.f0) if args.f0 else CsiGeometry()
        df = doppler_shift(DopplerParams(args.velocity, math.radians(args.angle), geom))
        print(f"doppler_hz={df!r} phase_shift_rad={doppler_phase_shift(df, geom)!r}")
    if args.csi is not None:
        trace = read_csi_trace(args.csi, args.rate)
        frames = list(trace)
        print("t0,motion_statistic,mean_phase")
        for i in range(0, len(frames) - CSI_WINDOW + 1, CSI_WINDOW):
            block = frames[i:i + CSI_WINDOW]
            stat = motion_statistic(csi_tensor(block))
            mean_phase = float(np.mean([phase(f) for f in block]))
            print(f"{block[0].t:.6f},{stat:.6f},{mean_phase:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--config", help="key = value file with option defaults")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _fusion_options(p):
    d = FusionConfig()
    g = p.add_argument_group("fusion")
    g.add_argument("--step", type=float, default=d.step)
    g.add_argument("--window", type=float, default=d.window)
    g.add_argument("--vote-threshold", type=int, default=d.vote_threshold)
    g.add_argument("--stage2-window", type=float, default=d.stage2_window)
    g.add_argument("--quiet-threshold", type=float, default=d.imu_quiet_threshold,
                   help="max post-vote linear acceleration (m/s^2) for a motionless phone")
    g.add_argument("--alpha", type=float, default=d.filter.alpha, help="gravity EWMA weight")


def build_parser(seed: int) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fallsense", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthetic dataset or scenario traces")
    _common(g)
    what = g.add_mutually_exclusive_group(required=True)
    what.add_argument("--classes", help="'table1' or name=N,... for the IMU dataset")
    what.add_argument("--scenario", choices=SCENARIOS)
    g.add_argument("--csi-counts", help="static=N,motion=N (default 820/800)")
    g.add_argument("--seed", type=int, default=seed)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train the IMU MLP or the CSI CNN")
    _common(t)
    t.add_argument("kind", choices=("imu", "csi"))
    t.add_argument("--dataset", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--lr", type=float)
    t.add_argument("--momentum", type=float)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int, default=seed)
    t.add_argument("--train-fraction", type=float, default=0.7)
    t.add_argument("--n-classes", type=int, help="MLP output width (default: dataset classes)")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("replay", help="run recorded traces through the fusion engine")
    _common(r)
    r.add_argument("--imu", required=True)
    r.add_argument("--csi", required=True)
    r.add_argument("--mlp", required=True)
    r.add_argument("--cnn", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--series", action="store_true", help="also write series.csv")
    r.add_argument("--rate", type=float, default=DEFAULT_RATE_HZ)
    _fusion_options(r)
    r.set_defaults(func=cmd_replay)

    d = sub.add_parser("diag", help="CSI motion statistic, phase and Doppler diagnostics")
    _common(d)
    d.add_argument("--csi")
    d.add_argument("--rate", type=float, default=DEFAULT_RATE_HZ)
    d.add_argument("--velocity", type=float, help="radial speed in m/s")
    d.add_argument("--angle", type=float, default=0.0, help="degrees")
    d.add_argument("--f0", type=float, help="carrier frequency in Hz")
    d.set_defaults(func=cmd_diag)
    return parser


def read_config(path) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_args(argv, seed: int):
    parser = build_parser(seed)
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        values = read_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        subparser.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        try:
            args = parse_args(argv, default_seed())
        except SystemExit as exc:
            return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(message)s", stream=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        print(f"fallsense: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"fallsense: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FallSenseError, AssertionError) as exc:
        print(f"fallsense: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
