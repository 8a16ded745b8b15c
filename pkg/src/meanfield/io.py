"""Deterministic file writers shared by the solvers and the CLI."""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

MFC1_MAGIC = b"MFC1"
_MFC1_DIMS = struct.Struct("<qq")
FLOAT_FMT = "%.12g"


def write_csv(path: str | Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    """Comma-separated columns with a header line and ``%.12g`` numbers."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",")


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def write_mfc1(path: str | Path, matrix: np.ndarray) -> None:
    """Binary matrix: magic ``MFC1``, rows and columns as little-endian int64, then float64 LE row-major."""
    m = np.ascontiguousarray(matrix, dtype="<f8")
    if m.ndim != 2:
        raise DomainError("MFC1 stores 2-D matrices only")
    with open(path, "wb") as fh:
        fh.write(MFC1_MAGIC)
        fh.write(_MFC1_DIMS.pack(*m.shape))
        fh.write(m.tobytes())


def read_mfc1(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    head = len(MFC1_MAGIC) + _MFC1_DIMS.size
    if raw[:4] != MFC1_MAGIC or len(raw) < head:
        raise DomainError(f"{path}: not an MFC1 file")
    rows, cols = _MFC1_DIMS.unpack(raw[4:head])
    if len(raw) != head + 8 * rows * cols:
        raise DomainError(f"{path}: payload size does not match {rows}x{cols}")
    return np.frombuffer(raw, dtype="<f8", offset=head).reshape(rows, cols).copy()


def write_json(path: str | Path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
