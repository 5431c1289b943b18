"""Synthetic signed bipartite graphs for self-tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .graph import SignedBipartiteGraph


def _sample_pairs(u_count: int, v_count: int, m: int, rng) -> np.ndarray:
    """m distinct (u, v) pairs, deterministic in the generator state."""
    total = u_count * v_count
    if m > total:
        raise ValueError(f"cannot place {m} edges in a {u_count}x{v_count} bipartite graph")
    chosen: np.ndarray = np.empty(0, dtype=np.int64)
    while chosen.size < m:
        draw = rng.integers(0, total, size=int(1.5 * (m - chosen.size)) + 8)
        chosen = np.unique(np.concatenate([chosen, draw]))
    # unique() sorts; reshuffle so truncation does not bias toward low indices
    chosen = rng.permutation(chosen)[:m]
    return np.stack([chosen // v_count, chosen % v_count], axis=1)


def planted_graph(u_count: int, v_count: int, n_edges: int, latent_dim: int = 2,
                  noise: float = 0.05, selection_bias: float = 1.5,
                  seed: int = 0) -> SignedBipartiteGraph:
    """Graph whose signs follow latent taste vectors, with label noise.

    Each node gets a unit gaussian latent vector; an edge is positive when
    the endpoint vectors agree (positive inner product), then flipped with
    probability ``noise``. ``selection_bias`` skews which pairs get an edge
    toward agreeing ones, the way interaction data over-samples things people
    expect to like, so the unsigned topology correlates with the sign
    structure. Learnable by design, used by the self-test suite.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    t_u = rng.standard_normal((u_count, latent_dim))
    t_u /= np.linalg.norm(t_u, axis=1, keepdims=True)
    t_v = rng.standard_normal((v_count, latent_dim))
    t_v /= np.linalg.norm(t_v, axis=1, keepdims=True)

    # oversample candidate pairs, keep each with probability sigmoid(bias * dot)
    pairs = np.empty((0, 2), dtype=np.int64)
    attempts = 0
    while pairs.shape[0] < n_edges and attempts < 64:
        attempts += 1
        want = max(n_edges - pairs.shape[0], 1)
        cand = _sample_pairs(u_count, v_count,
                             min(4 * want + 16, u_count * v_count), rng)
        dots = np.einsum("ij,ij->i", t_u[cand[:, 0]], t_v[cand[:, 1]])
        keep = rng.random(len(cand)) < 1.0 / (1.0 + np.exp(-selection_bias * dots))
        pairs = np.concatenate([pairs, cand[keep]])
        key = pairs[:, 0] * v_count + pairs[:, 1]
        _, first = np.unique(key, return_index=True)
        pairs = pairs[np.sort(first)]
    if pairs.shape[0] < n_edges:
        raise RuntimeError(f"could not place {n_edges} edges, graph too small")
    pairs = pairs[rng.permutation(pairs.shape[0])[:n_edges]]

    dots = np.einsum("ij,ij->i", t_u[pairs[:, 0]], t_v[pairs[:, 1]])
    signs = np.where(dots > 0, 1, -1)
    flips = rng.random(n_edges) < noise
    signs = np.where(flips, -signs, signs)
    edges = tuple((int(u), int(v), int(s)) for (u, v), s in zip(pairs, signs))
    return SignedBipartiteGraph(u_count=u_count, v_count=v_count, edges=edges)


def random_graph(u_count: int, v_count: int, n_edges: int, pos_ratio: float = 0.5,
                 seed: int = 0) -> SignedBipartiteGraph:
    """Structureless graph with independently random signs."""
    rng = np.random.Generator(np.random.PCG64(seed))
    pairs = _sample_pairs(u_count, v_count, n_edges, rng)
    signs = np.where(rng.random(n_edges) < pos_ratio, 1, -1)
    edges = tuple((int(u), int(v), int(s)) for (u, v), s in zip(pairs, signs))
    return SignedBipartiteGraph(u_count=u_count, v_count=v_count, edges=edges)


def write_edge_list(g: SignedBipartiteGraph, path) -> None:
    """Serialize in the whitespace triple format the parser reads."""
    with open(path, "w", encoding="utf-8") as f:
        for u, v, s in g.edges:
            f.write(f"u{u} v{v} {s:+d}\n")
