from .optim import Adam, AdamState, adam_step
from .rng import keyed_generator, stage_seed
from .sparse import SparseCsr, csr_from_edges, spmm, symmetrize, validate_csr
from .tape import DropoutKey, Tape, Tensor

__all__ = [
    "Adam",
    "AdamState",
    "DropoutKey",
    "SparseCsr",
    "Tape",
    "Tensor",
    "adam_step",
    "csr_from_edges",
    "keyed_generator",
    "spmm",
    "stage_seed",
    "symmetrize",
    "validate_csr",
]
