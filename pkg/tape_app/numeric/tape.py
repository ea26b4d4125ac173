"""Reverse-mode differentiation for the handful of ops the pipeline trains with.

A ``Tape`` records one forward pass. Parameters are registered by name, every
op appends a record holding its backward closure, and ``backward`` walks the
records in reverse (recording order is already topological).
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from ..errors import NumericError, ShapeError
from .rng import keyed_generator
from .sparse import spmm as _spmm

Array = np.ndarray


class Tensor:
    __slots__ = ("value", "requires_grad", "name")

    def __init__(self, value: Array, requires_grad: bool = False, name: Optional[str] = None):
        self.value = value
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Tensor(name={self.name!r}, shape={self.value.shape}, dtype={self.value.dtype})"


@dataclass(frozen=True)
class DropoutKey:
    seed: int
    epoch: int
    op_id: int


@dataclass
class _Record:
    op: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    backward: Callable[[Array], Sequence[Optional[Array]]]


class Tape:
    def __init__(self):
        self._records: List[_Record] = []
        self._params: Dict[str, Tensor] = {}
        self._consumed = False

    # registry

    def param(self, name: str, value: Array) -> Tensor:
        if name in self._params:
            raise ValueError(f"parameter {name!r} registered twice")
        tensor = Tensor(value, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def constant(self, value: Array, name: Optional[str] = None) -> Tensor:
        return Tensor(np.asarray(value), requires_grad=False, name=name)

    @property
    def parameters(self) -> Dict[str, Tensor]:
        return dict(self._params)

    def _record(self, op: str, value: Array, inputs: Tuple[Tensor, ...],
                backward: Callable[[Array], Sequence[Optional[Array]]]) -> Tensor:
        if not np.all(np.isfinite(value)):
            raise NumericError(f"non-finite values produced by {op}", {"op": op})
        out = Tensor(value, requires_grad=any(t.requires_grad for t in inputs))
        self._records.append(_Record(op, out, inputs, backward))
        return out

    # ops

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
        av, bv = a.value, b.value
        return self._record("matmul", av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"add shape mismatch: {a.shape} vs {b.shape}")
        return self._record("add", a.value + b.value, (a, b), lambda g: (g, g))

    def add_bias(self, x: Tensor, bias: Tensor) -> Tensor:
        if x.value.ndim != 2 or bias.value.shape != (x.shape[1],):
            raise ShapeError(f"add_bias shape mismatch: {x.shape} + {bias.shape}")
        return self._record("add_bias", x.value + bias.value, (x, bias),
                            lambda g: (g, g.sum(axis=0, dtype=np.float64).astype(g.dtype)))

    def relu(self, x: Tensor) -> Tensor:
        active = x.value > 0
        return self._record("relu", np.where(active, x.value, 0).astype(x.value.dtype), (x,),
                            lambda g: (g * active,))

    def dropout(self, x: Tensor, p: float, key: DropoutKey, train: bool) -> Tensor:
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {p}")
        if not train or p == 0.0:
            return x
        rng = keyed_generator(key.seed, key.epoch, key.op_id)
        keep = (rng.random(x.shape) >= p).astype(x.value.dtype) / (1.0 - p)
        return self._record("dropout", x.value * keep, (x,), lambda g: (g * keep,))

    def spmm(self, s: sp.csr_matrix, x: Tensor) -> Tensor:
        value = _spmm(s, x.value)
        st = s.T.tocsr()
        return self._record("spmm", value, (x,), lambda g: (_spmm(st, g),))

    def log_softmax(self, x: Tensor) -> Tensor:
        if x.value.ndim != 2:
            raise ShapeError(f"log_softmax expects a matrix, got {x.shape}")
        wide = x.value.astype(np.float64)
        shifted = wide - wide.max(axis=1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        probs = np.exp(logp)
        dtype = x.value.dtype

        def backward(g):
            g64 = g.astype(np.float64)
            return ((g64 - probs * g64.sum(axis=1, keepdims=True)).astype(dtype),)

        return self._record("log_softmax", logp.astype(dtype), (x,), backward)

    def nll_loss(self, log_probs: Tensor, labels: Array, mask: Array) -> Tensor:
        """Mean negative log-likelihood over the masked rows only"""
        idx = _mask_indices(mask, log_probs.shape[0])
        if idx.size == 0:
            raise ValueError("nll_loss mask selects no rows")
        targets = np.asarray(labels)[idx]
        if np.any(targets < 0) or np.any(targets >= log_probs.shape[1]):
            raise ValueError("nll_loss mask includes rows without a valid label")
        dtype = log_probs.value.dtype
        picked = log_probs.value[idx, targets].astype(np.float64)
        loss = np.asarray(-picked.mean(), dtype=dtype)
        shape = log_probs.shape

        def backward(g):
            grad = np.zeros(shape, dtype=dtype)
            grad[idx, targets] = -float(g) / idx.size
            return (grad,)

        return self._record("nll_loss", loss, (log_probs,), backward)

    def sum(self, x: Tensor) -> Tensor:
        shape, dtype = x.shape, x.value.dtype
        total = np.asarray(x.value.sum(dtype=np.float64), dtype=dtype)
        return self._record("sum", total, (x,), lambda g: (np.full(shape, g, dtype=dtype),))

    # reverse pass

    def backward(self, loss: Tensor) -> Dict[str, Array]:
        if self._consumed:
            raise NumericError("backward already ran on this tape; run a fresh forward pass")
        if not self._records:
            raise NumericError("backward called before any forward op was recorded")
        position = next((i for i, r in enumerate(self._records) if r.output is loss), None)
        if position is None:
            raise NumericError("loss was not produced by this tape")
        if loss.value.size != 1:
            raise ShapeError(f"loss must be scalar, got shape {loss.shape}")
        self._consumed = True

        grads: Dict[int, Array] = {id(loss): np.ones_like(loss.value)}
        for record in reversed(self._records[:position + 1]):
            g_out = grads.pop(id(record.output), None)
            if g_out is None:
                continue
            for tensor, g in zip(record.inputs, record.backward(g_out)):
                if g is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                grads[key] = grads[key] + g if key in grads else g

        return {
            name: grads.get(id(t), np.zeros_like(t.value)).astype(t.value.dtype, copy=False)
            for name, t in self._params.items()
        }


def _mask_indices(mask: Union[Array, Sequence[int]], size: int) -> Array:
    arr = np.asarray(mask)
    if arr.dtype == bool:
        if arr.shape != (size,):
            raise ShapeError(f"boolean mask of shape {arr.shape} for {size} rows")
        return np.flatnonzero(arr)
    return arr.astype(np.int64).ravel()
