"""
Replicate-matrix export.

CSV: long format ``replicate,year,total``.

Binary (little-endian):
  b"FBMX0001" | uint32 tag length | tag (utf-8) | uint64 M | uint64 n_years | uint64 seed
  | uint64 year ids (n_years) | float64 values, row-major (replicate, year)
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from floodbound.errors import ValidationError
from floodbound.params.dataclasses import ReplicateMatrix


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAGIC = b"FBMX0001"
MATRIX_COLUMNS = ("replicate", "year", "total")


def matrix_frame(matrix: ReplicateMatrix) -> pd.DataFrame:
    M, n_years = matrix.values.shape
    return pd.DataFrame(
        {
            "replicate": np.repeat(np.arange(M), n_years),
            "year": np.tile(matrix.years, M),
            "total": matrix.values.reshape(-1),
        },
        columns=list(MATRIX_COLUMNS),
    )


def method_from_name(path: PathLike) -> str:
    stem = Path(path).stem
    return stem[len("matrix_") :] if stem.startswith("matrix_") else stem


def write_matrix_csv(matrix: ReplicateMatrix, path: PathLike) -> Path:
    path = Path(path)
    matrix_frame(matrix).to_csv(path, index=False)
    logger.info("wrote %s (%s, M=%d, %d years)", path, matrix.method, matrix.M, matrix.n_years)
    return path


def read_matrix_csv(path: PathLike, method: Optional[str] = None, seed: int = 0) -> ReplicateMatrix:
    """Read a long-format matrix CSV back into an M x n_years grid.

    Without ``method`` the tag is taken from a ``matrix_<tag>.csv`` file name, or the bare stem.
    """
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as exc:
        raise ValidationError("file not found", path=path) from exc
    except pd.errors.EmptyDataError as exc:
        raise ValidationError("empty matrix file", path=path) from exc
    if tuple(df.columns) != MATRIX_COLUMNS:
        raise ValidationError(f"expected header {','.join(MATRIX_COLUMNS)!r}", path=path, line=1)

    wide = df.pivot(index="replicate", columns="year", values="total").sort_index().sort_index(axis=1)
    if wide.isna().to_numpy().any():
        raise ValidationError("matrix CSV is missing (replicate, year) cells", path=path)
    return ReplicateMatrix(
        values=wide.to_numpy(dtype=float),
        years=wide.columns.to_numpy(dtype=np.int64),
        method=method_from_name(path) if method is None else method,
        seed=int(seed),
    )


def write_matrix_binary(matrix: ReplicateMatrix, path: PathLike) -> Path:
    path = Path(path)
    tag = matrix.method.encode("utf-8")
    M, n_years = matrix.values.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(tag)))
        fh.write(tag)
        fh.write(struct.pack("<QQQ", M, n_years, int(matrix.seed) & 0xFFFFFFFFFFFFFFFF))
        fh.write(np.asarray(matrix.years, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(matrix.values, dtype="<f8").tobytes())
    logger.info("wrote %s (%d bytes of values)", path, M * n_years * 8)
    return path


def read_matrix_binary(path: PathLike) -> ReplicateMatrix:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise ValidationError("file not found", path=path) from exc
    if data[:8] != MAGIC:
        raise ValidationError("not a floodbound matrix file (bad magic)", path=path)
    try:
        pos = 8
        (tag_len,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + tag_len > len(data):
            raise ValidationError("truncated matrix header", path=path)
        tag = data[pos : pos + tag_len].decode("utf-8")
        pos += tag_len
        M, n_years, seed = struct.unpack_from("<QQQ", data, pos)
    except struct.error as exc:
        raise ValidationError("truncated matrix header", path=path) from exc
    except UnicodeDecodeError as exc:
        raise ValidationError("method tag is not utf-8", path=path) from exc
    pos += 24
    expected = pos + 8 * n_years + 8 * M * n_years
    if len(data) != expected:
        raise ValidationError(f"truncated matrix file ({len(data)} bytes, expected {expected})", path=path)
    years = np.frombuffer(data, dtype="<u8", count=n_years, offset=pos).astype(np.int64)
    pos += 8 * n_years
    values = np.frombuffer(data, dtype="<f8", count=M * n_years, offset=pos).reshape(M, n_years).copy()
    return ReplicateMatrix(values=values, years=years, method=tag, seed=int(seed))
