"""Binary FeatureMatrix files: header {magic, u64 N, u64 d} + N*d little-endian float32, plus a JSON sidecar"""
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError

from ..errors import DatasetFormatError
from ..io_utils import atomic_write_bytes, atomic_write_json, read_json
from .schemas import FeatureMeta

MAGIC = b"TAPEFM1"
_HEADER = struct.Struct("<7sQQ")

PathLike = Union[str, Path]


@dataclass
class FeatureMatrix:
    values: np.ndarray
    meta: FeatureMeta

    @property
    def source(self) -> str:
        return self.meta.source

    @property
    def shape(self):
        return self.values.shape


def sidecar_path(path: PathLike) -> Path:
    return Path(path).with_suffix(".json")


def write_matrix(path: PathLike, values: np.ndarray, magic: bytes = MAGIC) -> Path:
    values = np.ascontiguousarray(values, dtype="<f4")
    rows, cols = values.shape
    return atomic_write_bytes(path, _HEADER.pack(magic, rows, cols) + values.tobytes(order="C"))


def read_matrix(path: PathLike, magic: bytes = MAGIC) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise DatasetFormatError(f"{path}: truncated matrix header")
    found, rows, cols = _HEADER.unpack_from(data)
    if found != magic:
        raise DatasetFormatError(f"{path}: bad magic {found!r}, expected {magic!r}")
    expected = _HEADER.size + rows * cols * 4
    if len(data) != expected:
        raise DatasetFormatError(f"{path}: expected {expected} bytes for {rows}x{cols}, found {len(data)}")
    return np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(rows, cols).astype(np.float32)


def save_feature_matrix(matrix: FeatureMatrix, path: PathLike) -> Path:
    if matrix.values.shape != (matrix.meta.rows, matrix.meta.cols):
        raise ValueError(f"feature values {matrix.values.shape} disagree with metadata")
    write_matrix(path, matrix.values)
    atomic_write_json(sidecar_path(path), matrix.meta.model_dump())
    return Path(path)


def load_feature_matrix(path: PathLike) -> FeatureMatrix:
    values = read_matrix(path)
    try:
        meta = FeatureMeta.model_validate(read_json(sidecar_path(path)))
    except (OSError, ValidationError, ValueError) as e:
        raise DatasetFormatError(f"{sidecar_path(path)}: unreadable feature sidecar ({e.__class__.__name__})")
    if (meta.rows, meta.cols) != values.shape:
        raise DatasetFormatError(f"{path}: sidecar shape {(meta.rows, meta.cols)} != data shape {values.shape}")
    return FeatureMatrix(values=values, meta=meta)
