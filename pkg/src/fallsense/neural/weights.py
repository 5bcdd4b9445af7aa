"""Binary weight files.

Layout (little-endian)::

    b"FSNN"  u16 version  u8 model kind  u16 n_entries
    n_entries x { u8 name_len, name (utf-8), u32 rows, u32 cols }
    float32 payload, entries in table order, row-major
    u32 CRC32 of every preceding byte

Vectors are stored as 1 x n. Kind 0 is the feature MLP (including its
z-score parameters), kind 1 the CSI CNN.
"""

from __future__ import annotations

import struct
import zlib
from collections import OrderedDict
from pathlib import Path

import numpy as np

from ..errors import CorruptFile, SchemaMismatch, ShapeMismatch
from .cnn import CnnModel
from .mlp import MlpModel

MAGIC = b"FSNN"
VERSION = 1
KINDS = {MlpModel.KIND: MlpModel, CnnModel.KIND: CnnModel}


def _as_2d_shape(a: np.ndarray) -> tuple[int, int]:
    if a.ndim == 1:
        return 1, a.shape[0]
    return a.shape[0], int(np.prod(a.shape[1:]))


def to_bytes(model) -> bytes:
    head = bytearray(MAGIC)
    head += struct.pack("<HBH", VERSION, model.KIND, len(model.params))
    payload = bytearray()
    for name, arr in model.params.items():
        rows, cols = _as_2d_shape(arr)
        raw = name.encode("utf-8")
        head += struct.pack("<B", len(raw)) + raw + struct.pack("<II", rows, cols)
        payload += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    body = bytes(head + payload)
    return body + struct.pack("<I", zlib.crc32(body))


def from_bytes(data: bytes, expected_kind: int | None = None, n_classes: int | None = None):
    if len(data) < 13 or data[:4] != MAGIC:
        raise CorruptFile("not a weight file (bad magic or too short)")
    body, crc = data[:-4], struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(body) != crc:
        raise CorruptFile("checksum mismatch")
    version, kind, n_entries = struct.unpack_from("<HBH", body, 4)
    if version != VERSION:
        raise SchemaMismatch(f"unsupported weight file version {version}")
    if kind not in KINDS:
        raise SchemaMismatch(f"unknown model kind {kind}")
    if expected_kind is not None and kind != expected_kind:
        raise SchemaMismatch(f"file holds model kind {kind}, expected {expected_kind}")
    pos = 9
    table = []
    for _ in range(n_entries):
        (nlen,) = struct.unpack_from("<B", body, pos)
        pos += 1
        name = body[pos:pos + nlen].decode("utf-8")
        pos += nlen
        rows, cols = struct.unpack_from("<II", body, pos)
        pos += 8
        table.append((name, rows, cols))
    expected_size = pos + 4 * sum(r * c for _, r, c in table)
    if expected_size != len(body):
        raise CorruptFile("payload size does not match the layer table")

    cls = KINDS[kind]
    params = OrderedDict()
    for name, rows, cols in table:
        n = rows * cols
        flat = np.frombuffer(body, dtype="<f4", count=n, offset=pos).astype(np.float64)
        pos += 4 * n
        params[name] = flat
    # restore true shapes from the model's declared layout
    if cls is MlpModel:
        c = params["out_b"].size if "out_b" in params else None
        if n_classes is not None and c != n_classes:
            raise ShapeMismatch(f"file declares {c} output classes, expected {n_classes}")
        template = MlpModel.create(n_classes=c or 1).expected_shapes()
    else:
        template = CnnModel.create().expected_shapes()
    if set(template) != set(params):
        raise ShapeMismatch(f"layer names {sorted(params)} do not match {sorted(template)}")
    for (name, rows, cols) in table:
        shape = template[name]
        if int(np.prod(shape)) != rows * cols or _as_2d_shape(np.empty(shape)) != (rows, cols):
            raise ShapeMismatch(f"{name}: file shape {rows}x{cols} incompatible with {shape}")
        params[name] = params[name].reshape(shape)
    return cls(params)


def save_weights(model, path) -> None:
    Path(path).write_bytes(to_bytes(model))


def load_weights(path, expected_kind: int | None = None, n_classes: int | None = None):
    data = Path(path).read_bytes()
    try:
        return from_bytes(data, expected_kind, n_classes)
    except struct.error as exc:
        raise CorruptFile(f"truncated layer table: {exc}") from None
