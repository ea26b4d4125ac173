"""GCN and GraphSAGE layers on the numeric tape.

gcn layer:  H' = relu(Â H W)                 Â = D̃^-1/2 (A + I) D̃^-1/2, no bias
sage layer: H' = relu(H W_self + b + Ā H W_nbr)   Ā = row-normalized A (mean of neighbours)

The last layer skips the relu; dropout acts on every layer's input at train time.
"""
from dataclasses import dataclass
from typing import Dict, List

import numpy as np
import scipy.sparse as sp

from ..errors import ShapeError
from ..features.interpreter import glorot
from ..numeric import DropoutKey, Tape, Tensor
from ..numeric.sparse import canonical_csr, is_symmetric
from .schemas import GnnConfig


def normalize_adjacency(a: sp.csr_matrix, arch: str, dtype=np.float32) -> sp.csr_matrix:
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"adjacency must be square, got {a.shape}")
    if not is_symmetric(a, tol=1e-9):
        raise ValueError("normalize_adjacency expects a symmetric adjacency")
    n = a.shape[0]
    wide = sp.csr_matrix(a, dtype=np.float64)
    if arch == "gcn":
        with_loops = wide + sp.identity(n, dtype=np.float64, format="csr")
        degree = np.asarray(with_loops.sum(axis=1)).ravel()
        scale = sp.diags(1.0 / np.sqrt(degree))
        return canonical_csr(scale @ with_loops @ scale, dtype=dtype)
    if arch == "sage":
        degree = np.asarray(wide.sum(axis=1)).ravel()
        inverse = np.divide(1.0, degree, out=np.zeros_like(degree), where=degree > 0)
        return canonical_csr(sp.diags(inverse) @ wide, dtype=dtype)
    raise ValueError(f"unknown architecture {arch!r}")


def layer_dims(input_dim: int, num_classes: int, config: GnnConfig) -> List[int]:
    first = config.input_projection_dim or input_dim
    return [first] + [config.hidden_dim] * (config.num_layers - 1) + [num_classes]


@dataclass
class GnnModel:
    config: GnnConfig
    params: Dict[str, np.ndarray]
    adjacency: sp.csr_matrix
    input_dim: int
    num_classes: int

    @property
    def dims(self) -> List[int]:
        return layer_dims(self.input_dim, self.num_classes, self.config)


def init_params(input_dim: int, num_classes: int, config: GnnConfig, dtype=np.float32) -> Dict[str, np.ndarray]:
    rng = np.random.default_rng(config.seed)
    params: Dict[str, np.ndarray] = {}
    if config.input_projection_dim:
        params["proj"] = glorot(rng, input_dim, config.input_projection_dim, dtype)
    dims = layer_dims(input_dim, num_classes, config)
    for layer, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        if config.arch == "gcn":
            params[f"w{layer}"] = glorot(rng, fan_in, fan_out, dtype)
        else:
            params[f"w_self{layer}"] = glorot(rng, fan_in, fan_out, dtype)
            params[f"w_nbr{layer}"] = glorot(rng, fan_in, fan_out, dtype)
            params[f"b{layer}"] = np.zeros(fan_out, dtype=dtype)
    return params


def build_model(adjacency: sp.csr_matrix, input_dim: int, num_classes: int, config: GnnConfig,
                dtype=np.float32) -> GnnModel:
    return GnnModel(
        config=config,
        params=init_params(input_dim, num_classes, config, dtype),
        adjacency=normalize_adjacency(adjacency, config.arch, dtype),
        input_dim=input_dim,
        num_classes=num_classes,
    )


def forward(tape: Tape, model: GnnModel, params: Dict[str, Tensor], features: np.ndarray,
            train: bool, epoch: int = 0) -> Tensor:
    if features.ndim != 2 or features.shape != (model.adjacency.shape[0], model.input_dim):
        raise ShapeError(f"features {features.shape} do not fit a {model.adjacency.shape[0]}-node graph "
                         f"with input dim {model.input_dim}")
    config = model.config
    h = tape.constant(features)
    if "proj" in params:
        h = tape.matmul(h, params["proj"])
    for layer in range(config.num_layers):
        h = tape.dropout(h, config.dropout, DropoutKey(config.seed, epoch, layer), train)
        if config.arch == "gcn":
            h = tape.spmm(model.adjacency, tape.matmul(h, params[f"w{layer}"]))
        else:
            own = tape.add_bias(tape.matmul(h, params[f"w_self{layer}"]), params[f"b{layer}"])
            h = tape.add(own, tape.matmul(tape.spmm(model.adjacency, h), params[f"w_nbr{layer}"]))
        if layer < config.num_layers - 1:
            h = tape.relu(h)
    return h


def predict(model: GnnModel, features: np.ndarray) -> np.ndarray:
    """Eval-mode logits for every node"""
    tape = Tape()
    params = {name: tape.constant(value, name=name) for name, value in model.params.items()}
    return forward(tape, model, params, features.astype(next(iter(model.params.values())).dtype, copy=False),
                   train=False).value
