"""Estimator-style front door so the pipeline composes with the sklearn ecosystem."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .features import random_features, spectral_features
from .graph import EdgeSplit, SignedBipartiteGraph
from .model import ModelConfig, predict_scores, score_edges, train


def _require_graph(X) -> SignedBipartiteGraph:
    if not isinstance(X, SignedBipartiteGraph):
        raise TypeError(f"expected a SignedBipartiteGraph, got {type(X).__name__}")
    return X


class SpectralInitializer(BaseEstimator, TransformerMixin):
    """Computes the blended structural embedding of a signed bipartite graph.

    fit() runs both spectral decompositions on the chosen edge subset;
    transform() returns the blended feature matrix, one row per node in
    joint (U then V) order.
    """

    def __init__(self, d=32, mu=0.3, tol=1e-8, seed=0, use_signed_laplacian=False):
        self.d = d
        self.mu = mu
        self.tol = tol
        self.seed = seed
        self.use_signed_laplacian = use_signed_laplacian

    def fit(self, X, y=None, edge_subset=None):
        g = _require_graph(X)
        feats = spectral_features(
            g, edge_subset=edge_subset, d=self.d, mu=self.mu, tol=self.tol,
            seed=self.seed, use_signed_laplacian=self.use_signed_laplacian)
        self.phi_ = feats.phi
        self.psi_ = feats.psi
        self.features_ = feats
        self.n_nodes_ = g.n_nodes
        return self

    def transform(self, X):
        g = _require_graph(X)
        if not hasattr(self, "features_"):
            raise RuntimeError("SpectralInitializer is not fitted")
        if g.n_nodes != self.n_nodes_:
            raise ValueError(f"graph has {g.n_nodes} nodes, fitted on {self.n_nodes_}")
        return self.features_.x


class GegenNetClassifier(BaseEstimator, ClassifierMixin):
    """Link sign classifier over a signed bipartite graph.

    fit() takes the graph plus optional train/validation edge index arrays
    (defaults to training on every edge with no validation). predict() takes
    (u_index, v_index) pairs in partition-local indexing and returns signs in
    {-1, +1}; predict_proba() returns columns ordered as ``classes_``.
    """

    def __init__(self, alpha=1.5, layers=3, embed_dim=32, feature_dim=32, mu=0.3,
                 delta=1.0, dropout=0.5, learning_rate=0.01, weight_decay=1e-5,
                 max_epochs=300, patience=50, seed=0,
                 first_order_coefficient="alpha_plus_half", feature_init="spectral",
                 solver_tol=1e-8):
        self.alpha = alpha
        self.layers = layers
        self.embed_dim = embed_dim
        self.feature_dim = feature_dim
        self.mu = mu
        self.delta = delta
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed
        self.first_order_coefficient = first_order_coefficient
        self.feature_init = feature_init
        self.solver_tol = solver_tol

    def _config(self) -> ModelConfig:
        return ModelConfig(
            layers=self.layers, embed_dim=self.embed_dim, feature_dim=self.feature_dim,
            alpha=self.alpha, delta=self.delta, mu=self.mu, dropout=self.dropout,
            learning_rate=self.learning_rate, weight_decay=self.weight_decay,
            max_epochs=self.max_epochs, patience=self.patience, seed=self.seed,
            first_order_coefficient=self.first_order_coefficient)

    def fit(self, X, y=None, train_edges=None, validation_edges=None, features=None):
        g = _require_graph(X)
        cfg = self._config()
        if self.feature_init not in ("spectral", "random"):
            raise ValueError("feature_init must be 'spectral' or 'random'")
        m = g.n_edges
        if train_edges is None:
            train_edges = np.arange(m, dtype=np.int64)
        train_edges = np.asarray(train_edges, dtype=np.int64)
        if validation_edges is None:
            validation_edges = np.zeros(0, dtype=np.int64)
        validation_edges = np.asarray(validation_edges, dtype=np.int64)
        rest = np.setdiff1d(np.arange(m, dtype=np.int64),
                            np.concatenate([train_edges, validation_edges]))
        split = EdgeSplit(train=np.sort(train_edges), validation=np.sort(validation_edges),
                          test=rest, seed=cfg.seed,
                          ratios=(len(train_edges) / max(m, 1),
                                  len(validation_edges) / max(m, 1),
                                  len(rest) / max(m, 1)))

        if features is not None:
            x = np.asarray(features, dtype=np.float64)
        elif self.feature_init == "spectral":
            x = spectral_features(g, edge_subset=split.train, d=cfg.feature_dim,
                                  mu=cfg.mu, tol=self.solver_tol, seed=cfg.seed).x
        else:
            x = random_features(g.n_nodes, cfg.feature_dim, seed=cfg.seed)

        result = train(g, split, x, cfg)
        self.graph_ = g
        self.config_ = cfg
        self.split_ = split
        self.features_ = x
        self.params_ = result.params
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        self.classes_ = np.array([-1, 1])
        self.z_ = self._embed()
        return self

    def _embed(self):
        from .graph import build_sign_matrices, normalize_adjacency, symmetrize
        from .model import forward
        matrices = build_sign_matrices(self.graph_, self.split_.train)
        a_pos_hat = normalize_adjacency(symmetrize(matrices.a_pos))
        a_neg_hat = normalize_adjacency(symmetrize(matrices.a_neg))
        z, _ = forward(self.params_, self.features_, a_pos_hat, a_neg_hat,
                       self.config_, training=False)
        return z

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise RuntimeError("GegenNetClassifier is not fitted")

    def decision_scores(self, pairs) -> np.ndarray:
        """Positive-sign probability for (u_index, v_index) partition pairs."""
        self._check_fitted()
        pairs = np.asarray(pairs, dtype=np.int64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError(f"pairs must have shape (m, 2), got {pairs.shape}")
        if pairs.size:
            if pairs[:, 0].max() >= self.graph_.u_count or pairs[:, 0].min() < 0:
                raise IndexError("u index out of range")
            if pairs[:, 1].max() >= self.graph_.v_count or pairs[:, 1].min() < 0:
                raise IndexError("v index out of range")
        joint = np.stack([pairs[:, 0], pairs[:, 1] + self.graph_.u_count], axis=1)
        return predict_scores(self.params_, self.z_, joint)

    def predict_proba(self, pairs) -> np.ndarray:
        scores = self.decision_scores(pairs)
        return np.stack([1.0 - scores, scores], axis=1)

    def predict(self, pairs) -> np.ndarray:
        scores = self.decision_scores(pairs)
        return np.where(scores > 0.5, 1, -1)

    def score_split_edges(self, edge_indices) -> np.ndarray:
        """Scores for graph edge indices (e.g. a held-out test part)."""
        self._check_fitted()
        return score_edges(self.graph_, self.split_, self.features_,
                           self.params_, self.config_, edge_indices)
