"""GNN checkpoints: header {magic "TAPEGNN1", arch, num layers, dims} then weights in layer order.

Each weight block is written as its own float32 matrix (biases as 1 x n),
in the order given by ``parameter_order``. The JSON sidecar holds the config
and final metrics.
"""
import struct
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import scipy.sparse as sp
from pydantic import ValidationError

from ..errors import DatasetFormatError
from ..io_utils import atomic_write_bytes, atomic_write_json, read_json
from .models import GnnModel, normalize_adjacency
from .schemas import CheckpointMeta

MAGIC = b"TAPEGNN1"
_ARCH_CODES = {"gcn": 0, "sage": 1}

PathLike = Union[str, Path]


def parameter_order(model: GnnModel) -> List[str]:
    names = ["proj"] if "proj" in model.params else []
    for layer in range(model.config.num_layers):
        if model.config.arch == "gcn":
            names.append(f"w{layer}")
        else:
            names.extend([f"w_self{layer}", f"w_nbr{layer}", f"b{layer}"])
    return names


def save_checkpoint(model: GnnModel, path: PathLike, meta: CheckpointMeta) -> Path:
    dims = [model.input_dim] + model.dims
    header = MAGIC + struct.pack("<BI", _ARCH_CODES[model.config.arch], model.config.num_layers)
    header += struct.pack(f"<I{len(dims)}Q", len(dims), *dims)
    blocks = []
    for name in parameter_order(model):
        value = np.ascontiguousarray(np.atleast_2d(model.params[name]), dtype="<f4")
        blocks.append(struct.pack("<QQ", *value.shape) + value.tobytes(order="C"))
    atomic_write_bytes(path, header + b"".join(blocks))
    atomic_write_json(Path(path).with_suffix(".json"), meta.model_dump(mode="json"))
    return Path(path)


def load_checkpoint(path: PathLike, adjacency: sp.csr_matrix) -> GnnModel:
    """Rebuild a model from disk; ``adjacency`` is the raw graph it will run on"""
    try:
        meta = CheckpointMeta.model_validate(read_json(Path(path).with_suffix(".json")))
    except (OSError, ValidationError, ValueError) as e:
        raise DatasetFormatError(f"{path}: unreadable checkpoint sidecar ({e.__class__.__name__})")
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise DatasetFormatError(f"{path}: bad checkpoint magic")
    offset = len(MAGIC)
    try:
        arch_code, num_layers = struct.unpack_from("<BI", data, offset)
        offset += struct.calcsize("<BI")
        (num_dims,) = struct.unpack_from("<I", data, offset)
        offset += 4
        dims = list(struct.unpack_from(f"<{num_dims}Q", data, offset))
        offset += 8 * num_dims
        if arch_code != _ARCH_CODES[meta.config.arch] or num_layers != meta.config.num_layers:
            raise DatasetFormatError(f"{path}: header disagrees with sidecar config")

        model = GnnModel(config=meta.config, params={}, adjacency=normalize_adjacency(adjacency, meta.config.arch),
                         input_dim=dims[0], num_classes=dims[-1])
        params: Dict[str, np.ndarray] = {}
        for name in parameter_order(model):
            rows, cols = struct.unpack_from("<QQ", data, offset)
            offset += 16
            size = rows * cols * 4
            if offset + size > len(data):
                raise DatasetFormatError(f"{path}: truncated weights for {name}")
            block = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=offset).reshape(rows, cols)
            offset += size
            params[name] = block.ravel().astype(np.float32) if name.startswith("b") else block.astype(np.float32)
    except struct.error as e:
        raise DatasetFormatError(f"{path}: truncated checkpoint ({e})")
    if offset != len(data):
        raise DatasetFormatError(f"{path}: {len(data) - offset} trailing bytes")
    model.params = params
    return model
