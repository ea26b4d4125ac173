"""CSR helpers over scipy.sparse.

``SparseCsr`` is ``scipy.sparse.csr_matrix`` with canonical form enforced:
sorted column indices within each row and no duplicate entries.
"""
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import ShapeError

SparseCsr = sp.csr_matrix


def canonical_csr(matrix, dtype=np.float32) -> sp.csr_matrix:
    csr = sp.csr_matrix(matrix, dtype=dtype)
    csr.sum_duplicates()
    csr.sort_indices()
    csr.eliminate_zeros()
    return csr


def csr_from_edges(num_nodes: int, src: Sequence[int], dst: Sequence[int],
                   symmetric: bool = True, dtype=np.float32) -> sp.csr_matrix:
    """Binary adjacency from an edge list; duplicates collapse to a single 1"""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if symmetric:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
    if src.size and (src.min() < 0 or dst.min() < 0 or src.max() >= num_nodes or dst.max() >= num_nodes):
        raise ValueError(f"edge endpoint outside [0, {num_nodes})")
    pairs = np.unique(np.stack([src, dst], axis=1), axis=0) if src.size else np.zeros((0, 2), dtype=np.int64)
    data = np.ones(len(pairs), dtype=dtype)
    coo = sp.coo_matrix((data, (pairs[:, 0], pairs[:, 1])), shape=(num_nodes, num_nodes))
    return canonical_csr(coo, dtype=dtype)


def symmetrize(adjacency: sp.csr_matrix) -> sp.csr_matrix:
    """Union with the transpose, values clipped to 1; idempotent"""
    sym = (adjacency + adjacency.T).tocsr()
    sym.data = np.ones_like(sym.data)
    return canonical_csr(sym, dtype=adjacency.dtype)


def validate_csr(matrix: sp.csr_matrix) -> None:
    rows, cols = matrix.shape
    offsets = matrix.indptr
    if len(offsets) != rows + 1 or offsets[0] != 0 or offsets[-1] != matrix.nnz:
        raise ValueError("CSR row offsets do not cover nnz")
    if np.any(np.diff(offsets) < 0):
        raise ValueError("CSR row offsets must be nondecreasing")
    if matrix.nnz and (matrix.indices.min() < 0 or matrix.indices.max() >= cols):
        raise ValueError("CSR column index out of bounds")
    for row in range(rows):
        seg = matrix.indices[offsets[row]:offsets[row + 1]]
        if seg.size > 1 and np.any(np.diff(seg) <= 0):
            raise ValueError(f"CSR row {row} indices not strictly increasing")


def is_symmetric(matrix: sp.csr_matrix, tol: float = 0.0) -> bool:
    diff = (matrix - matrix.T).tocsr()
    if diff.nnz == 0:
        return True
    return bool(np.abs(diff.data).max() <= tol)


def spmm(s: sp.csr_matrix, d: np.ndarray, out_dtype: Optional[np.dtype] = None) -> np.ndarray:
    """Sparse x dense product with shape checking"""
    if s.shape[1] != d.shape[0]:
        raise ShapeError(f"spmm shape mismatch: {s.shape} x {d.shape}")
    out = np.asarray(s @ d)
    return out.astype(out_dtype or d.dtype, copy=False)


def permute(matrix: sp.csr_matrix, perm: np.ndarray) -> sp.csr_matrix:
    """Relabel nodes: new node i is old node perm[i]"""
    return canonical_csr(matrix[perm][:, perm], dtype=matrix.dtype)
