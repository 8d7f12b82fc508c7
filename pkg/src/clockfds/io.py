"""Result tables and environment checkpoints.

Checkpoint layout (little-endian): ``b"FDSC"``, format version (uint32), ``N``,
``D``, ``chi`` (uint32 each), ``chi`` float64 corner values, ``chi * D * chi``
float64 half-row entries (row-major ``u, s, u'``), then the two log scales as
float64.  Environments smaller than ``chi`` are zero-padded.  A JSON sidecar
next to the binary holds provenance.
"""

from __future__ import annotations

import csv
import json
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .ctmrg import Environment
from .observables import ObservableRecord

__all__ = [
    "CSV_COLUMNS",
    "format_row",
    "append_records",
    "read_records",
    "write_checkpoint",
    "read_checkpoint",
    "CHECKPOINT_VERSION",
]

CSV_COLUMNS = (
    "run_id", "N", "T", "beta", "chi", "h", "M", "xi", "f",
    "iterations", "converged", "eps_final", "config_hash",
)
CHECKPOINT_MAGIC = b"FDSC"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.12g" % v
    return str(v)


def format_row(rec: ObservableRecord) -> list[str]:
    return [_fmt(getattr(rec, c)) for c in CSV_COLUMNS]


def append_records(path, records) -> None:
    """Append records to a CSV, writing the header for a new file; flushed and fsynced.

    A partial final line left by an interrupted write is dropped first.
    """
    path = Path(path)
    _drop_partial_line(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(format_row(r))
        fh.flush()
        os.fsync(fh.fileno())


def _drop_partial_line(path: Path) -> None:
    if not path.exists() or path.stat().st_size == 0:
        return
    with open(path, "rb+") as fh:
        data = fh.read()
        if data.endswith(b"\n"):
            return
        fh.truncate(data.rfind(b"\n") + 1)


def _parse(row: dict) -> ObservableRecord:
    return ObservableRecord(
        N=int(row["N"]), T=float(row["T"]), beta=float(row["beta"]), chi=int(row["chi"]),
        h=float(row["h"]), M=float(row["M"]), xi=float(row["xi"]), f=float(row["f"]),
        iterations=int(row["iterations"]), converged=row["converged"].strip() in ("1", "True", "true"),
        eps_final=float(row["eps_final"]), run_id=row["run_id"], config_hash=row["config_hash"],
    )


def read_records(path) -> list[ObservableRecord]:
    """Parse a results CSV; a truncated final line (interrupted write) is skipped."""
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        if tuple(reader.fieldnames) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        for row in reader:
            if None in row.values() or None in row:
                continue
            try:
                out.append(_parse(row))
            except (TypeError, ValueError):
                continue
    return out


def write_checkpoint(path, env: Environment, provenance: dict | None = None) -> None:
    """Write ``env`` atomically (temp file + rename) and its JSON sidecar."""
    path = Path(path)
    full = env.padded()
    chi, D = full.chi, full.N
    N = int((provenance or {}).get("N", D))
    payload = _HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, N, D, chi)
    payload += np.ascontiguousarray(full.C, dtype="<f8").tobytes()
    payload += np.ascontiguousarray(full.T, dtype="<f8").tobytes()
    payload += struct.pack("<dd", env.log_scale_C, env.log_scale_T)
    side = dict(provenance or {})
    side["dim"] = env.dim
    if env.parity is not None:
        side["parity"] = [int(p) for p in env.parity]
    _atomic_write(path, payload)
    _atomic_write(path.with_suffix(path.suffix + ".json"), json.dumps(side, indent=1, sort_keys=True).encode())


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_checkpoint(path) -> tuple[Environment, dict]:
    """Inverse of `write_checkpoint`; the sidecar is optional."""
    path = Path(path)
    data = path.read_bytes()
    magic, version, N, D, chi = _HEADER.unpack_from(data, 0)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint (magic {magic!r})")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off = _HEADER.size
    expected = off + 8 * (chi + chi * D * chi + 2)
    if len(data) != expected:
        raise ValueError(f"{path}: size {len(data)} != expected {expected}")
    C = np.frombuffer(data, "<f8", chi, off).copy()
    off += 8 * chi
    T = np.frombuffer(data, "<f8", chi * D * chi, off).reshape(chi, D, chi).copy()
    off += 8 * chi * D * chi
    lc, lt = struct.unpack_from("<dd", data, off)
    side_path = path.with_suffix(path.suffix + ".json")
    side = json.loads(side_path.read_text()) if side_path.exists() else {}
    dim = int(side.get("dim", chi))
    par = np.asarray(side["parity"], dtype=np.int8) if "parity" in side else None
    env = Environment(chi, C[:dim], T[:dim, :, :dim], lc, lt, par)
    return env, side
