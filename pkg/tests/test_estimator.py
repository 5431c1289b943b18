import numpy as np
import pytest
from sklearn.base import clone

from gegennet.estimator import GegenNetClassifier, SpectralInitializer
from gegennet.graph import split_edges
from gegennet.metrics import rank_auc
from gegennet.synthetic import planted_graph


@pytest.fixture(scope="module")
def graph():
    return planted_graph(30, 40, 500, latent_dim=1, noise=0.05, seed=2)


@pytest.fixture(scope="module")
def fitted(graph):
    split = split_edges(graph, (0.8, 0.1, 0.1), seed=2)
    clf = GegenNetClassifier(layers=2, embed_dim=8, feature_dim=8, max_epochs=60,
                             patience=60, seed=0)
    clf.fit(graph, train_edges=split.train, validation_edges=split.validation)
    return clf, split


class TestSklearnProtocol:
    def test_get_params_roundtrip(self):
        clf = GegenNetClassifier(alpha=0.5, layers=2)
        params = clf.get_params()
        assert params["alpha"] == 0.5
        assert params["layers"] == 2
        clf2 = GegenNetClassifier(**params)
        assert clf2.get_params() == params

    def test_set_params(self):
        clf = GegenNetClassifier()
        clf.set_params(alpha=1.0, mu=0.4)
        assert clf.alpha == 1.0 and clf.mu == 0.4

    def test_clone(self):
        clf = GegenNetClassifier(layers=2, seed=9)
        cloned = clone(clf)
        assert cloned.get_params() == clf.get_params()

    def test_fit_returns_self(self, graph):
        clf = GegenNetClassifier(layers=1, embed_dim=4, feature_dim=4, max_epochs=3,
                                 patience=3, seed=0)
        assert clf.fit(graph) is clf

    def test_rejects_non_graph(self):
        clf = GegenNetClassifier()
        with pytest.raises(TypeError, match="SignedBipartiteGraph"):
            clf.fit(np.zeros((3, 3)))


class TestPrediction:
    def test_classes_attribute(self, fitted):
        clf, _ = fitted
        assert clf.classes_.tolist() == [-1, 1]

    def test_proba_shape_and_normalization(self, fitted, graph):
        clf, split = fitted
        pairs = [(u, v) for u, v, _ in graph.edges[:10]]
        proba = clf.predict_proba(pairs)
        assert proba.shape == (10, 2)
        assert np.allclose(proba.sum(axis=1), 1.0)
        assert np.all(proba >= 0)

    def test_predict_signs(self, fitted, graph):
        clf, _ = fitted
        pairs = [(u, v) for u, v, _ in graph.edges[:20]]
        preds = clf.predict(pairs)
        assert set(np.unique(preds)) <= {-1, 1}

    def test_held_out_auc_beats_chance(self, fitted, graph):
        clf, split = fitted
        scores = clf.score_split_edges(split.test)
        auc = rank_auc(scores, graph.edge_signs(split.test))
        assert auc > 0.6

    def test_pair_index_validation(self, fitted):
        clf, _ = fitted
        with pytest.raises(IndexError):
            clf.predict([(0, 10_000)])

    def test_unfitted_raises(self):
        clf = GegenNetClassifier()
        with pytest.raises(RuntimeError, match="not fitted"):
            clf.predict([(0, 0)])

    def test_random_feature_init(self, graph):
        clf = GegenNetClassifier(layers=1, embed_dim=4, feature_dim=4, max_epochs=3,
                                 patience=3, seed=0, feature_init="random")
        clf.fit(graph)
        assert clf.features_.shape == (graph.n_nodes, 4)


class TestSpectralInitializer:
    def test_fit_transform(self, graph):
        init = SpectralInitializer(d=6, mu=0.3, seed=0)
        x = init.fit_transform(graph)
        assert x.shape == (graph.n_nodes, 6)
        assert np.abs(init.phi_.T @ init.phi_ - np.eye(6)).max() < 1e-6

    def test_get_params(self):
        init = SpectralInitializer(d=8, mu=0.5)
        params = init.get_params()
        assert params["d"] == 8 and params["mu"] == 0.5
        assert clone(init).get_params() == params

    def test_transform_requires_fit(self, graph):
        with pytest.raises(RuntimeError, match="not fitted"):
            SpectralInitializer().transform(graph)

    def test_transform_checks_node_count(self, graph):
        init = SpectralInitializer(d=4, seed=0).fit(graph)
        other = planted_graph(5, 6, 20, seed=0)
        with pytest.raises(ValueError, match="nodes"):
            init.transform(other)
