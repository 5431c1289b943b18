"""Signed bipartite graph data model, edge-list ingestion, splits, and matrix builders.

The joint node ordering used everywhere downstream is: the ``u_count`` U-nodes
first (rows 0..u_count-1), then the ``v_count`` V-nodes.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .validation import as_csr, check_symmetric


class GraphFormatError(ValueError):
    """Malformed or inconsistent edge-list input."""


def _default_sign_tokens() -> dict[str, int]:
    return {"1": 1, "+1": 1, "-1": -1}


@dataclass(frozen=True)
class EdgeListFormat:
    """How raw edge-list text maps to (u, v, sign) triples.

    When ``rating_scale=(low, high)`` is set, the third column is read as a
    numeric rating and thresholded at the midpoint: values strictly above
    (low + high) / 2 become +1, the rest -1. Otherwise the third column must
    be one of the tokens in ``sign_tokens``.
    """

    comment_prefix: str = "#"
    sign_tokens: Mapping[str, int] = field(default_factory=_default_sign_tokens)
    rating_scale: tuple[float, float] | None = None


@dataclass(frozen=True)
class SignedBipartiteGraph:
    u_count: int
    v_count: int
    edges: tuple[tuple[int, int, int], ...]
    u_labels: tuple[str, ...] | None = None
    v_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        seen = set()
        for i, (u, v, s) in enumerate(self.edges):
            if not (0 <= u < self.u_count):
                raise GraphFormatError(f"edge {i}: u index {u} out of range [0, {self.u_count})")
            if not (0 <= v < self.v_count):
                raise GraphFormatError(f"edge {i}: v index {v} out of range [0, {self.v_count})")
            if s not in (1, -1):
                raise GraphFormatError(f"edge {i}: sign must be +1 or -1, got {s}")
            if (u, v) in seen:
                raise GraphFormatError(f"edge {i}: duplicate pair ({u}, {v})")
            seen.add((u, v))

    @property
    def n_nodes(self) -> int:
        return self.u_count + self.v_count

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_positive(self) -> int:
        return sum(1 for _, _, s in self.edges if s == 1)

    @property
    def n_negative(self) -> int:
        return self.n_edges - self.n_positive

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edges as three aligned int64 arrays (u, v, sign)."""
        if not self.edges:
            z = np.zeros(0, dtype=np.int64)
            return z, z.copy(), z.copy()
        arr = np.asarray(self.edges, dtype=np.int64)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    def joint_pairs(self, edge_indices) -> np.ndarray:
        """Joint-index (u_row, v_row) pairs for the given edge indices."""
        idx = np.asarray(edge_indices, dtype=np.int64)
        u, v, _ = self.edge_arrays()
        return np.stack([u[idx], v[idx] + self.u_count], axis=1)

    def edge_signs(self, edge_indices) -> np.ndarray:
        idx = np.asarray(edge_indices, dtype=np.int64)
        _, _, s = self.edge_arrays()
        return s[idx]


@dataclass(frozen=True)
class EdgeSplit:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int
    ratios: tuple[float, float, float]

    def __post_init__(self):
        parts = np.concatenate([self.train, self.validation, self.test])
        if len(np.unique(parts)) != len(parts):
            raise ValueError("split parts overlap")
        if len(parts) and not np.array_equal(np.sort(parts), np.arange(len(parts))):
            raise ValueError("split parts do not cover 0..m-1")

    @property
    def n_edges(self) -> int:
        return len(self.train) + len(self.validation) + len(self.test)


@dataclass(frozen=True)
class SignMatrices:
    """Bi-adjacency indicators of shape u_count x v_count with disjoint supports."""

    a_pos: sp.csr_matrix
    a_neg: sp.csr_matrix
    a_all: sp.csr_matrix


def parse_edge_list(text, fmt: EdgeListFormat | None = None) -> SignedBipartiteGraph:
    """Parse whitespace-separated ``u v sign`` triples into a graph.

    Identifiers are densely re-indexed per partition in first-seen order.
    Duplicate (u, v) lines and unknown sign tokens are errors.
    """
    fmt = fmt or EdgeListFormat()
    if isinstance(text, str):
        stream = io.StringIO(text)
    else:
        stream = text

    u_index: dict[str, int] = {}
    v_index: dict[str, int] = {}
    edges: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int]] = set()
    if fmt.rating_scale is not None:
        midpoint = 0.5 * (fmt.rating_scale[0] + fmt.rating_scale[1])

    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith(fmt.comment_prefix):
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise GraphFormatError(f"line {lineno}: expected 3 fields, got {len(tokens)}")
        u_tok, v_tok, s_tok = tokens
        if fmt.rating_scale is not None:
            try:
                rating = float(s_tok)
            except ValueError:
                raise GraphFormatError(f"line {lineno}: rating {s_tok!r} is not numeric") from None
            sign = 1 if rating > midpoint else -1
        else:
            if s_tok not in fmt.sign_tokens:
                raise GraphFormatError(f"line {lineno}: unknown sign token {s_tok!r}")
            sign = int(fmt.sign_tokens[s_tok])
            if sign not in (1, -1):
                raise GraphFormatError(f"line {lineno}: sign token maps to {sign}, expected +1/-1")
        u = u_index.setdefault(u_tok, len(u_index))
        v = v_index.setdefault(v_tok, len(v_index))
        if (u, v) in seen:
            raise GraphFormatError(f"line {lineno}: duplicate edge ({u_tok}, {v_tok})")
        seen.add((u, v))
        edges.append((u, v, sign))

    return SignedBipartiteGraph(
        u_count=len(u_index),
        v_count=len(v_index),
        edges=tuple(edges),
        u_labels=tuple(u_index),
        v_labels=tuple(v_index),
    )


def load_edge_list(path, fmt: EdgeListFormat | None = None) -> SignedBipartiteGraph:
    with open(path, "r", encoding="utf-8") as f:
        return parse_edge_list(f, fmt)


def split_edges(g: SignedBipartiteGraph, ratios, seed: int) -> EdgeSplit:
    """Deterministic seeded shuffle-split of edge indices.

    Sizes are floor(r_train*m) and floor(r_val*m) with the remainder going to
    the test part, so the partition is exhaustive for any ratio triple.
    """
    r = tuple(float(x) for x in ratios)
    if len(r) != 3 or any(x < 0 for x in r):
        raise ValueError(f"ratios must be 3 non-negative reals, got {ratios}")
    if abs(sum(r) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1 within 1e-9, got sum {sum(r)!r}")
    m = g.n_edges
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(m)
    # guard against 0.7*10 = 6.999... style float droop
    n_train = int(math.floor(r[0] * m + 1e-9))
    n_val = int(math.floor(r[1] * m + 1e-9))
    n_train = min(n_train, m)
    n_val = min(n_val, m - n_train)
    return EdgeSplit(
        train=np.sort(perm[:n_train]),
        validation=np.sort(perm[n_train:n_train + n_val]),
        test=np.sort(perm[n_train + n_val:]),
        seed=int(seed),
        ratios=r,
    )


def save_split(split: EdgeSplit, path) -> None:
    """Write a replayable JSON manifest {seed, ratios, train, validation, test}."""
    doc = {
        "seed": split.seed,
        "ratios": list(split.ratios),
        "train": [int(i) for i in split.train],
        "validation": [int(i) for i in split.validation],
        "test": [int(i) for i in split.test],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)
        f.write("\n")


def load_split(path) -> EdgeSplit:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    try:
        return EdgeSplit(
            train=np.asarray(doc["train"], dtype=np.int64),
            validation=np.asarray(doc["validation"], dtype=np.int64),
            test=np.asarray(doc["test"], dtype=np.int64),
            seed=int(doc["seed"]),
            ratios=tuple(float(x) for x in doc["ratios"]),
        )
    except (KeyError, TypeError) as exc:
        raise GraphFormatError(f"invalid split manifest {path}: {exc}") from exc


def build_sign_matrices(g: SignedBipartiteGraph, subset=None) -> SignMatrices:
    """0/1 bi-adjacency indicators restricted to a set of edge indices."""
    if subset is None:
        idx = np.arange(g.n_edges, dtype=np.int64)
    else:
        idx = np.unique(np.asarray(subset, dtype=np.int64))
        if idx.size and (idx.min() < 0 or idx.max() >= g.n_edges):
            raise IndexError("edge subset index out of range")
    u, v, s = g.edge_arrays()
    u, v, s = u[idx], v[idx], s[idx]
    shape = (g.u_count, g.v_count)

    def indicator(mask):
        return as_csr(sp.coo_matrix(
            (np.ones(int(mask.sum())), (u[mask], v[mask])), shape=shape))

    a_pos = indicator(s == 1)
    a_neg = indicator(s == -1)
    return SignMatrices(a_pos=a_pos, a_neg=a_neg, a_all=as_csr(a_pos + a_neg))


def symmetrize(b: sp.spmatrix) -> sp.csr_matrix:
    """Embed a p x q block into the symmetric (p+q) x (p+q) form with zero diagonal blocks."""
    b = as_csr(b)
    return as_csr(sp.bmat([[None, b], [b.T, None]], format="csr")) if b.nnz else as_csr(
        sp.csr_matrix((b.shape[0] + b.shape[1], b.shape[0] + b.shape[1])))


def degrees(s: sp.spmatrix) -> np.ndarray:
    return np.asarray(as_csr(s).sum(axis=1)).ravel()


def normalize_adjacency(s: sp.spmatrix) -> sp.csr_matrix:
    """Symmetric degree normalization D^{-1/2} S D^{-1/2}.

    Zero-degree rows get a zero inverse root (pseudo-inverse convention), so
    isolated nodes map to all-zero rows and columns. For a non-negative
    symmetric S the result has spectrum inside [-1, 1].
    """
    s = as_csr(s)
    check_symmetric(s, name="adjacency")
    deg = degrees(s)
    with np.errstate(divide="ignore"):
        inv_root = np.where(deg > 0, 1.0 / np.sqrt(np.maximum(deg, 1e-300)), 0.0)
    d = sp.diags(inv_root)
    return as_csr(d @ s @ d)


def laplacian(s: sp.spmatrix) -> sp.csr_matrix:
    """Combinatorial Laplacian D - S with D the row-sum diagonal."""
    s = as_csr(s)
    check_symmetric(s, name="adjacency")
    return as_csr(sp.diags(degrees(s)) - s)


def cosine_block_matrix(a: sp.spmatrix) -> sp.csr_matrix:
    """Block matrix pairing the row- and column-L2-normalized bi-adjacency.

    The output has the row-normalized matrix top-right and the transpose of
    the column-normalized one bottom-left, so the Gram matrix B B^T holds
    u-u cosine similarities in its top-left block and v-v similarities in its
    bottom-right block. Zero rows and columns stay zero.
    """
    a = as_csr(a)
    row_norm = np.sqrt(np.asarray(a.multiply(a).sum(axis=1)).ravel())
    col_norm = np.sqrt(np.asarray(a.multiply(a).sum(axis=0)).ravel())
    with np.errstate(divide="ignore"):
        r_inv = np.where(row_norm > 0, 1.0 / np.maximum(row_norm, 1e-300), 0.0)
        c_inv = np.where(col_norm > 0, 1.0 / np.maximum(col_norm, 1e-300), 0.0)
    b_row = as_csr(sp.diags(r_inv) @ a)
    b_col = as_csr(a @ sp.diags(c_inv))
    p, q = a.shape
    if a.nnz == 0:
        return as_csr(sp.csr_matrix((p + q, p + q)))
    return as_csr(sp.bmat([[None, b_row], [b_col.T, None]], format="csr"))
