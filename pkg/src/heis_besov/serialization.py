"""HBSF binary arrays, canonical JSON and CSV output.

HBSF layout (little-endian):
    b"HBSF" | u32 version | u32 dtype code | u32 ndim | u64 dims[ndim]
    | u32 metadata length | metadata (UTF-8 JSON, sorted keys) | payload
Dtype codes: 0 float64, 1 complex128.

Small arrays also have a JSON form (see ``to_json_array``); readers dispatch
on the file suffix.
"""
from __future__ import annotations

import csv
import io
import json
import math
import struct
from pathlib import Path

import numpy as np

MAGIC = b"HBSF"
VERSION = 1
_CODES = {0: np.dtype("<f8"), 1: np.dtype("<c16")}


def _code(a: np.ndarray) -> int:
    return 1 if np.iscomplexobj(a) else 0


def to_hbsf(array, metadata: dict | None = None) -> bytes:
    a = np.asarray(array)
    code = _code(a)
    a = np.asarray(a, dtype=_CODES[code], order="C")
    meta = canonical_json(metadata or {}).encode()
    head = MAGIC + struct.pack("<III", VERSION, code, a.ndim)
    head += struct.pack(f"<{a.ndim}Q", *a.shape)
    head += struct.pack("<I", len(meta)) + meta
    return head + a.tobytes()


def from_hbsf(data: bytes) -> tuple[np.ndarray, dict]:
    if data[:4] != MAGIC:
        raise ValueError("not an HBSF file (bad magic)")
    version, code, ndim = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise ValueError(f"unsupported HBSF version {version}")
    if code not in _CODES:
        raise ValueError(f"unknown HBSF dtype code {code}")
    off = 16
    dims = struct.unpack_from(f"<{ndim}Q", data, off)
    off += 8 * ndim
    (mlen,) = struct.unpack_from("<I", data, off)
    off += 4
    meta = json.loads(data[off:off + mlen].decode()) if mlen else {}
    off += mlen
    dt = _CODES[code]
    count = int(np.prod(dims)) if dims else 1
    if len(data) - off != count * dt.itemsize:
        raise ValueError("HBSF payload size does not match its dimensions")
    arr = np.frombuffer(data, dtype=dt, count=count, offset=off).reshape(dims)
    return arr.copy(), meta


def write_hbsf(path, array, metadata: dict | None = None) -> None:
    Path(path).write_bytes(to_hbsf(array, metadata))


def read_hbsf(path) -> tuple[np.ndarray, dict]:
    return from_hbsf(Path(path).read_bytes())


JSON_LIMIT = 1 << 16  # largest array written in JSON form alongside HBSF


def to_json_array(array, metadata: dict | None = None) -> dict:
    """{"format", "version", "dtype", "shape", "real", "imag"?, "metadata"}, row-major."""
    a = np.asarray(array)
    code = _code(a)
    a = np.asarray(a, dtype=_CODES[code])
    d = {"format": "HBSF-JSON", "version": VERSION, "dtype": "complex128" if code else "float64",
         "shape": list(a.shape), "real": a.real.ravel().tolist(), "metadata": metadata or {}}
    if code:
        d["imag"] = a.imag.ravel().tolist()
    return d


def from_json_array(d: dict) -> tuple[np.ndarray, dict]:
    if d.get("format") != "HBSF-JSON":
        raise ValueError("not an HBSF-JSON document")
    shape = tuple(int(x) for x in d["shape"])
    count = int(np.prod(shape)) if shape else 1
    re = np.asarray(d["real"], dtype=float)
    if re.size != count or (d["dtype"] == "complex128" and len(d.get("imag", ())) != count):
        raise ValueError("HBSF-JSON payload size does not match its shape")
    a = re + 1j * np.asarray(d["imag"], dtype=float) if d["dtype"] == "complex128" else re
    return a.reshape(shape), d.get("metadata", {})


def read_array(path) -> tuple[np.ndarray, dict]:
    """HBSF binary, or its JSON form when the suffix is .json."""
    p = Path(path)
    if p.suffix.lower() == ".json":
        return from_json_array(json.loads(p.read_text()))
    return read_hbsf(p)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, non-finite floats as strings."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2)


def write_json(path, obj) -> None:
    Path(path).write_text(canonical_json(obj) + "\n")


def to_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def write_csv(path, header: list[str], rows) -> None:
    Path(path).write_text(to_csv(header, rows))
