"""On-disk formats: CSV traces, verdict logs and dataset directories.

Floats in trace files are written with ``repr`` so a write/read cycle
reproduces every value bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CorruptFile, SchemaMismatch
from .fusion import DetectionVerdict
from .sensor_model import (
    DEFAULT_RATE_HZ,
    N_ANTENNAS,
    N_SUBCARRIERS,
    CsiFrame,
    ImuSample,
    Trace,
    check_rate,
)

IMU_HEADER = ("t", "acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z")
CSI_HEADER = ("t",) + tuple(
    f"a{a}_sc{k}_{part}"
    for part in ("re", "im")
    for a in range(N_ANTENNAS)
    for k in range(N_SUBCARRIERS)
)
VERDICT_HEADER = ("t", "stage1_class", "p_fall", "votes", "alert")
MANIFEST = "manifest.json"


def _write_rows(path, header, rows):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _read_rows(path, header):
    with open(path, encoding="ascii") as fh:
        lines = [ln.rstrip("\r\n") for ln in fh]
    if not lines or tuple(lines[0].split(",")) != header:
        got = lines[0][:60] if lines else "<empty file>"
        raise SchemaMismatch(f"{path}: unexpected header {got!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != len(header):
            raise CorruptFile(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise CorruptFile(f"{path}:{lineno}: {exc}") from None
    return rows


def write_imu_trace(trace: Trace, path) -> None:
    _write_rows(path, IMU_HEADER,
                ((s.t, s.acc_x, s.acc_y, s.acc_z, s.gyr_x, s.gyr_y, s.gyr_z) for s in trace))


def read_imu_trace(path, rate: float = DEFAULT_RATE_HZ) -> Trace:
    trace = Trace(tuple(ImuSample(*row) for row in _read_rows(path, IMU_HEADER)), rate)
    return check_rate(trace, rate)


def write_csi_trace(trace: Trace, path) -> None:
    _write_rows(path, CSI_HEADER, ((f.t, *f.raw_row()) for f in trace))


def read_csi_trace(path, rate: float = DEFAULT_RATE_HZ) -> Trace:
    rows = _read_rows(path, CSI_HEADER)
    trace = Trace(tuple(CsiFrame.from_raw_row(r[0], r[1:]) for r in rows), rate)
    return check_rate(trace, rate)


def class_label(index: int, names) -> str:
    return names[index] if index < len(names) else f"class{index}"


def verdict_lines(verdicts, class_names=()) -> list[str]:
    out = [",".join(VERDICT_HEADER)]
    for v in verdicts:
        out.append(f"{v.t:.6f},{class_label(v.stage1_class, class_names)},"
                   f"{v.p_fall:.6f},{v.votes},{v.alert.value}")
    return out


def write_verdict_log(verdicts, path, class_names=()) -> None:
    Path(path).write_text("\n".join(verdict_lines(verdicts, class_names)) + "\n", encoding="ascii")


def write_series(verdicts: list[DetectionVerdict], path, class_names=()) -> None:
    """Plot-ready per-tick table: all class probabilities plus the Stage II outcome."""
    n_classes = len(verdicts[0].stage1_probs) if verdicts else len(class_names)
    cols = ["t"] + [f"p_{class_label(i, class_names)}" for i in range(n_classes)]
    cols += ["votes", "suspended", "vote_fired", "stage2_motion", "alert"]
    lines = [",".join(cols)]
    for v in verdicts:
        motion = "" if v.stage2_motion is None else str(int(v.stage2_motion))
        lines.append(",".join([f"{v.t:.6f}", *(f"{p:.6f}" for p in v.stage1_probs),
                               str(v.votes), str(int(v.suspended)), str(int(v.vote_fired)),
                               motion, v.alert.value]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"{path}: {exc}") from None


def save_arrays(directory, manifest: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write ``name.npy`` for every array plus a sorted-key JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, arr in arrays.items():
        np.save(directory / f"{name}.npy", arr, allow_pickle=False)
    write_json({**manifest, "arrays": sorted(arrays)}, directory / MANIFEST)


def load_arrays(directory, names) -> tuple[dict, dict[str, np.ndarray]]:
    directory = Path(directory)
    manifest = read_json(directory / MANIFEST)
    out = {}
    for name in names:
        if name not in manifest.get("arrays", ()):
            raise SchemaMismatch(f"{directory}: dataset has no {name!r} array")
        try:
            out[name] = np.load(directory / f"{name}.npy", allow_pickle=False)
        except ValueError as exc:
            raise CorruptFile(f"{directory / name}.npy: {exc}") from None
    return manifest, out
