"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def as_csr(m, dtype=np.float64) -> sp.csr_matrix:
    """Coerce to canonical CSR: sorted indices, summed duplicates, no stored zeros."""
    m = sp.csr_matrix(m, dtype=dtype)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


def check_square(m: sp.spmatrix, name: str = "matrix") -> None:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")


def check_symmetric(m: sp.spmatrix, tol: float = 1e-10, name: str = "matrix") -> None:
    check_square(m, name)
    diff = (m - m.T).tocoo()
    if diff.nnz and np.abs(diff.data).max() > tol:
        raise ValueError(f"{name} is not symmetric (max asymmetry {np.abs(diff.data).max():.3e})")


def check_dense(x, name: str = "array", ndim: int = 2) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_matching_rows(m: sp.spmatrix, x: np.ndarray) -> None:
    if m.shape[1] != x.shape[0]:
        raise ValueError(f"shape mismatch: matrix is {m.shape}, operand has {x.shape[0]} rows")


def check_pairs(pairs, n_rows: int) -> np.ndarray:
    """Validate an (m, 2) integer index array against a row count."""
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError(f"pairs must have shape (m, 2), got {pairs.shape}")
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n_rows):
        raise IndexError(f"pair index out of range for {n_rows} rows")
    return pairs
