"""Dataset readers and the binary model container.

Container layout (all integers little-endian)::

    magic            8 bytes  b"RANDNN\\x00\\x1a"
    format version   uint32
    config length    uint64, then that many bytes of UTF-8 JSON
    block count      uint32
    per block        uint16 name length, name, uint64 payload length, .npy payload
    checksum         32-byte SHA-256 of everything above
"""

import csv
import hashlib
import io
import json
import re
import struct

import numpy as np

from . import rvfl
from .config import config_from_dict
from .exceptions import (
    ArtifactError,
    ArtifactVersionError,
    ChecksumError,
    DataFormatError,
    StructureError,
)
from .models import Model, init_model, network_arrays, network_from_arrays
from .structures import GraphData, TreeData

MAGIC = b"RANDNN\x00\x1a"
FORMAT_VERSION = 1
_DIGEST_SIZE = 32
_COLUMN = re.compile(r"^([xy])(\d+)$")


def load_timeseries(path):
    """Read a delimited file with header ``x0..xD[, y0..yO]``.

    Returns ``(X, Y)`` with ``Y`` None when the file has no target columns.
    Rows are samples (or time steps) in file order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    first = text.splitlines()[0] if text else ""
    delimiter = next((d for d in (",", "\t", ";") if d in first), ",")
    reader = csv.reader(io.StringIO(text), delimiter=delimiter, skipinitialspace=True)
    header = next(reader, None)
    if not header:
        raise DataFormatError(f"{path}: empty file, expected a header row")
    header = [h.strip() for h in header]
    kinds = []
    for name in header:
        m = _COLUMN.match(name)
        if m is None:
            raise DataFormatError(f"{path}: line 1: column {name!r} is not of the form x<i> or y<i>")
        kinds.append(m.group(1))
    x_cols = [i for i, k in enumerate(kinds) if k == "x"]
    y_cols = [i for i, k in enumerate(kinds) if k == "y"]
    for prefix, cols in (("x", x_cols), ("y", y_cols)):
        if [header[i] for i in cols] != [f"{prefix}{j}" for j in range(len(cols))]:
            raise DataFormatError(f"{path}: line 1: {prefix} columns must be numbered from 0 in order")
    if not x_cols:
        raise DataFormatError(f"{path}: line 1: no input columns")
    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataFormatError(f"{path}: line {line}: expected {len(header)} fields, found {len(row)}")
        try:
            values = [float(cell) for cell in row]
        except ValueError:
            bad = next(c for c in row if not _is_float(c))
            raise DataFormatError(f"{path}: line {line}: non-numeric value {bad!r}") from None
        if not all(np.isfinite(values)):
            raise DataFormatError(f"{path}: line {line}: non-finite value")
        rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    data = np.array(rows)
    return data[:, x_cols], (data[:, y_cols] if y_cols else None)


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _record_target(record):
    target = record.get("target")
    return None if target is None else np.atleast_1d(np.asarray(target, dtype=np.float64))


def load_structures(path):
    """Read one JSON record per line.

    Trees: ``{"type": "tree", "labels": [[...], ...], "children": [[1, 2], [], []]}``.
    Graphs: ``{"type": "graph", "features": [[...], ...], "edges": [[0, 1], ...],
    "directed": false}``. Both accept an optional ``"id"`` and ``"target"``.
    Blank lines are skipped.
    """
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: line {line_no}: invalid JSON: {exc.msg}") from None
            if not isinstance(record, dict):
                raise DataFormatError(f"{path}: line {line_no}: record must be a JSON object")
            where = f"{path}: line {line_no} (id {record.get('id', line_no)!r})"
            kind = record.get("type")
            try:
                if kind == "tree":
                    out.append(TreeData(record["labels"], record["children"], _record_target(record)))
                elif kind == "graph":
                    out.append(
                        GraphData(
                            record["features"],
                            record.get("edges", []),
                            bool(record.get("directed", False)),
                            _record_target(record),
                        )
                    )
                else:
                    raise DataFormatError(f"unknown record type {kind!r}")
            except KeyError as exc:
                raise DataFormatError(f"{where}: missing field {exc.args[0]!r}") from None
            except (StructureError, DataFormatError, ValueError, TypeError) as exc:
                raise StructureError(f"{where}: {exc}") from None
    if not out:
        raise DataFormatError(f"{path}: no structure records")
    return out


def _npy_bytes(array):
    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(array), allow_pickle=False)
    return buf.getvalue()


def dump_model(model: Model, materialize=None) -> bytes:
    """Serialize ``model``; ``materialize=False`` stores only the seed.

    Fitted parts (readout coefficients, autoencoder encoders) are always
    stored.
    """
    materialize = model.config.materialize_weights if materialize is None else bool(materialize)
    if model.kind == "deep_rvfl":
        materialize = True
    blocks = dict(network_arrays(model)) if materialize else {}
    readout_meta = None
    if model.readout is not None:
        r = model.readout
        blocks["readout.beta"] = r.beta
        readout_meta = {"lam": r.lam, "loss_kind": r.loss_kind, "converged": r.converged, "n_iter": r.n_iter}
    header = {
        "config": model.config.to_dict(),
        "input_dim": model.input_dim,
        "materialized": materialize,
        "readout": readout_meta,
    }
    cfg_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION), struct.pack("<Q", len(cfg_bytes)), cfg_bytes]
    parts.append(struct.pack("<I", len(blocks)))
    for name, array in blocks.items():
        name_bytes = name.encode("utf-8")
        payload = _npy_bytes(array)
        parts += [struct.pack("<H", len(name_bytes)), name_bytes, struct.pack("<Q", len(payload)), payload]
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def save_model(model: Model, path, materialize=None):
    data = dump_model(model, materialize)
    with open(path, "wb") as fh:
        fh.write(data)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise ArtifactError("truncated artifact")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))[0]


def parse_model(data: bytes) -> Model:
    if len(data) < len(MAGIC) + 4 + _DIGEST_SIZE or not data.startswith(MAGIC):
        raise ArtifactError("not a model artifact (bad magic header)")
    body, digest = data[:-_DIGEST_SIZE], data[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumError("artifact checksum mismatch; file is corrupted")
    reader = _Reader(body)
    reader.take(len(MAGIC))
    version = reader.unpack("<I")
    if version != FORMAT_VERSION:
        raise ArtifactVersionError(f"artifact format version {version}, this build reads {FORMAT_VERSION}")
    header = json.loads(reader.take(reader.unpack("<Q")).decode("utf-8"))
    blocks = {}
    for _ in range(reader.unpack("<I")):
        name = reader.take(reader.unpack("<H")).decode("utf-8")
        payload = reader.take(reader.unpack("<Q"))
        blocks[name] = np.load(io.BytesIO(payload), allow_pickle=False)
    if reader.pos != len(body):
        raise ArtifactError("trailing bytes after the last block")
    cfg = config_from_dict(header["config"])
    input_dim = int(header["input_dim"])
    if header["materialized"]:
        model = Model(cfg, input_dim, network_from_arrays(cfg, input_dim, blocks))
    else:
        model = init_model(cfg, input_dim)
    meta = header["readout"]
    if meta is not None:
        readout = rvfl.Readout(
            blocks["readout.beta"], meta["lam"], meta["loss_kind"], meta["converged"], meta["n_iter"]
        )
        model = model.with_readout(readout)
    return model


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        return parse_model(fh.read())
