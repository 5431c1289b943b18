"""Structure-derived initial node features for signed bipartite graphs.

Two orthonormal embeddings are blended: the bottom-d Laplacian eigenvectors
(trace-minimizing placement of linked cross-partition nodes) and the top-d
left singular vectors of the cosine block matrix (trace-maximizing placement
of similar same-partition nodes). The blend is x = mu * phi + (1 - mu) * psi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import SignedBipartiteGraph, SignMatrices, build_sign_matrices, \
    cosine_block_matrix, degrees, laplacian, symmetrize
from .linalg import smallest_eigenpairs, top_left_singular_vectors
from .validation import as_csr, check_dense

_CACHE_MAGIC = 1195855430.0  # 'GGNF' as a big-endian byte integer
_CACHE_VERSION = 1.0


@dataclass(frozen=True)
class SpectralFeatures:
    phi: np.ndarray
    psi: np.ndarray
    x: np.ndarray
    mu: float
    d: int

    def __post_init__(self):
        if self.phi.shape != self.psi.shape or self.phi.shape != self.x.shape:
            raise ValueError("phi, psi, x must share a shape")
        if self.phi.shape[1] != self.d:
            raise ValueError(f"expected {self.d} columns, got {self.phi.shape[1]}")


def inter_partition_features(lap: sp.spmatrix, d: int, tol: float = 1e-8,
                             seed: int = 0) -> np.ndarray:
    """Eigenvectors of the Laplacian with the d algebraically smallest values."""
    pairs = smallest_eigenpairs(lap, d, tol=tol, seed=seed)
    return pairs.vectors


def intra_partition_features(b: sp.spmatrix, d: int, tol: float = 1e-8,
                             seed: int = 0) -> np.ndarray:
    """Top-d left singular vectors of the cosine block matrix."""
    _, vectors = top_left_singular_vectors(b, d, tol=tol, seed=seed)
    return vectors


def combine_features(phi: np.ndarray, psi: np.ndarray, mu: float) -> SpectralFeatures:
    phi = check_dense(phi, "phi")
    psi = check_dense(psi, "psi")
    if phi.shape != psi.shape:
        raise ValueError(f"shape mismatch: phi {phi.shape} vs psi {psi.shape}")
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    x = mu * phi + (1.0 - mu) * psi
    return SpectralFeatures(phi=phi, psi=psi, x=x, mu=float(mu), d=phi.shape[1])


def signed_laplacian(matrices: SignMatrices) -> sp.csr_matrix:
    """Variant Laplacian D - (A+ - A-) with D from the unsigned degree.

    Exposed as an experimental alternative that repels negatively linked
    endpoints; the default pipeline uses the unsigned Laplacian.
    """
    signed = symmetrize(as_csr(matrices.a_pos - matrices.a_neg))
    unsigned = symmetrize(matrices.a_all)
    return as_csr(sp.diags(degrees(unsigned)) - signed)


def spectral_features(g: SignedBipartiteGraph, edge_subset=None, d: int = 32,
                      mu: float = 0.3, tol: float = 1e-8, seed: int = 0,
                      use_signed_laplacian: bool = False) -> SpectralFeatures:
    """Full feature pipeline from a graph and an edge subset (typically the train split)."""
    matrices = build_sign_matrices(g, edge_subset)
    if use_signed_laplacian:
        lap = signed_laplacian(matrices)
    else:
        lap = laplacian(symmetrize(matrices.a_all))
    phi = inter_partition_features(lap, d, tol=tol, seed=seed)
    b = cosine_block_matrix(matrices.a_all)
    psi = intra_partition_features(b, d, tol=tol, seed=seed)
    return combine_features(phi, psi, mu)


def random_features(n_nodes: int, d: int, seed: int = 0) -> np.ndarray:
    """Seeded random baseline features, scaled to unit expected column norm."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.standard_normal((n_nodes, d)) / np.sqrt(max(n_nodes, 1))


def save_feature_cache(path, feats: SpectralFeatures) -> None:
    """Binary cache: 8 float64 header values, then phi and psi row-major LE."""
    rows, cols = feats.phi.shape
    header = np.array([_CACHE_MAGIC, _CACHE_VERSION, rows, cols, feats.d, feats.mu, 0.0, 0.0])
    with open(path, "wb") as f:
        f.write(header.astype("<f8").tobytes())
        f.write(np.ascontiguousarray(feats.phi, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(feats.psi, dtype="<f8").tobytes())


def load_feature_cache(path) -> SpectralFeatures:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 64:
        raise ValueError(f"feature cache {path} is truncated")
    header = np.frombuffer(raw[:64], dtype="<f8")
    if header[0] != _CACHE_MAGIC:
        raise ValueError(f"feature cache {path} has wrong magic value")
    if header[1] != _CACHE_VERSION:
        raise ValueError(f"unsupported feature cache version {header[1]}")
    rows, cols = int(header[2]), int(header[3])
    d, mu = int(header[4]), float(header[5])
    need = 64 + 2 * rows * cols * 8
    if len(raw) != need:
        raise ValueError(f"feature cache {path} has {len(raw)} bytes, expected {need}")
    body = np.frombuffer(raw[64:], dtype="<f8")
    phi = body[: rows * cols].reshape(rows, cols).copy()
    psi = body[rows * cols:].reshape(rows, cols).copy()
    feats = combine_features(phi, psi, mu)
    if feats.d != d:
        raise ValueError("feature cache header d disagrees with matrix shape")
    return feats
