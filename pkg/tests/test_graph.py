import io
import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gegennet.graph import (
    EdgeListFormat,
    EdgeSplit,
    GraphFormatError,
    SignedBipartiteGraph,
    build_sign_matrices,
    cosine_block_matrix,
    laplacian,
    load_split,
    normalize_adjacency,
    parse_edge_list,
    save_split,
    split_edges,
    symmetrize,
)
from gegennet.linalg import dense_eig
from gegennet.synthetic import random_graph

from conftest import TOY_TEXT


class TestParse:
    def test_toy_transcription(self, toy_graph):
        assert toy_graph.u_count == 2
        assert toy_graph.v_count == 3
        assert toy_graph.n_positive == 3
        assert toy_graph.n_negative == 1

    def test_empty_input(self):
        g = parse_edge_list("")
        assert g.u_count == 0 and g.v_count == 0 and g.n_edges == 0

    def test_first_seen_reindexing(self):
        g = parse_edge_list("b x 1\na x -1\nb y 1\n")
        assert g.u_labels == ("b", "a")
        assert g.v_labels == ("x", "y")
        assert g.edges[0] == (0, 0, 1)
        assert g.edges[1] == (1, 0, -1)

    def test_comments_and_blank_lines(self):
        g = parse_edge_list("# header\n\nu1 v1 1\n  # indented comment is data? no: stripped\n")
        assert g.n_edges == 1

    def test_malformed_line_reports_number(self):
        with pytest.raises(GraphFormatError, match="line 2"):
            parse_edge_list("u1 v1 1\nu2 v2\n")

    def test_duplicate_edge_rejected(self):
        with pytest.raises(GraphFormatError, match="duplicate"):
            parse_edge_list("u1 v1 1\nu1 v1 -1\n")

    def test_unknown_sign_token(self):
        with pytest.raises(GraphFormatError, match="sign token"):
            parse_edge_list("u1 v1 2\n")

    def test_rating_threshold_mapping(self):
        fmt = EdgeListFormat(rating_scale=(1.0, 10.0))
        g = parse_edge_list("u1 v1 9\nu1 v2 3\nu2 v1 5.5\n", fmt)
        signs = [s for _, _, s in g.edges]
        assert signs == [1, -1, -1]  # midpoint 5.5 maps down

    def test_stream_input(self):
        g = parse_edge_list(io.StringIO(TOY_TEXT))
        assert g.n_edges == 4

    @given(st.lists(st.tuples(st.integers(0, 8), st.integers(0, 8),
                              st.sampled_from([1, -1])), max_size=30, unique_by=lambda t: (t[0], t[1])))
    @settings(max_examples=50, deadline=None)
    def test_roundtrip_through_text(self, triples):
        text = "".join(f"u{u} v{v} {s:+d}\n" for u, v, s in triples)
        g = parse_edge_list(text)
        assert g.n_edges == len(triples)
        relabeled = [(g.u_labels[u], g.v_labels[v], s) for u, v, s in g.edges]
        assert relabeled == [(f"u{u}", f"v{v}", s) for u, v, s in triples]


class TestGraphInvariants:
    def test_out_of_range_index(self):
        with pytest.raises(GraphFormatError):
            SignedBipartiteGraph(u_count=1, v_count=1, edges=((0, 1, 1),))

    def test_duplicate_pair(self):
        with pytest.raises(GraphFormatError):
            SignedBipartiteGraph(u_count=1, v_count=1, edges=((0, 0, 1), (0, 0, -1)))

    def test_bad_sign(self):
        with pytest.raises(GraphFormatError):
            SignedBipartiteGraph(u_count=1, v_count=1, edges=((0, 0, 2),))


class TestSplit:
    def test_review_sized_split(self):
        # floor arithmetic at the Review edge count: 1170 * (0.8, 0.1) -> 936/117
        g = random_graph(50, 60, 1170, seed=0)
        split = split_edges(g, (0.8, 0.1, 0.1), seed=13)
        assert (len(split.train), len(split.validation), len(split.test)) == (936, 117, 117)

    def test_degenerate_ratio_all_train(self):
        g = random_graph(5, 5, 10, seed=0)
        split = split_edges(g, (1.0, 0.0, 0.0), seed=3)
        assert len(split.train) == 10
        assert len(split.validation) == 0 and len(split.test) == 0

    def test_determinism(self):
        g = random_graph(20, 20, 120, seed=1)
        a = split_edges(g, (0.8, 0.1, 0.1), seed=5)
        b = split_edges(g, (0.8, 0.1, 0.1), seed=5)
        assert np.array_equal(a.train, b.train)
        assert np.array_equal(a.validation, b.validation)
        assert np.array_equal(a.test, b.test)

    def test_seed_changes_partition(self):
        g = random_graph(20, 20, 120, seed=1)
        a = split_edges(g, (0.8, 0.1, 0.1), seed=5)
        b = split_edges(g, (0.8, 0.1, 0.1), seed=6)
        assert not np.array_equal(a.train, b.train)

    def test_bad_ratio_sum(self):
        g = random_graph(5, 5, 10, seed=0)
        with pytest.raises(ValueError, match="sum to 1"):
            split_edges(g, (0.8, 0.1, 0.2), seed=0)

    def test_partition_property_many_draws(self):
        # disjoint and exhaustive over 1000 random (m, seed) draws
        rng = np.random.default_rng(0)
        for _ in range(1000):
            m = int(rng.integers(0, 40))
            seed = int(rng.integers(0, 2 ** 62))
            r = rng.dirichlet((1, 1, 1))
            g = random_graph(8, 8, m, seed=0) if m else random_graph(8, 8, 0, seed=0)
            split = split_edges(g, tuple(r / r.sum()), seed=seed)
            joined = np.concatenate([split.train, split.validation, split.test])
            assert np.array_equal(np.sort(joined), np.arange(m))

    def test_floor_arithmetic_robust_to_float_droop(self):
        g = random_graph(5, 5, 10, seed=0)
        split = split_edges(g, (0.7, 0.2, 0.1), seed=0)
        assert (len(split.train), len(split.validation), len(split.test)) == (7, 2, 1)

    def test_manifest_roundtrip(self, tmp_path):
        g = random_graph(10, 10, 60, seed=2)
        split = split_edges(g, (0.8, 0.1, 0.1), seed=9)
        path = tmp_path / "manifest.json"
        save_split(split, path)
        doc = json.loads(path.read_text())
        assert set(doc) == {"seed", "ratios", "train", "validation", "test"}
        loaded = load_split(path)
        assert np.array_equal(loaded.train, split.train)
        assert loaded.seed == split.seed
        assert loaded.ratios == split.ratios

    def test_overlapping_parts_rejected(self):
        with pytest.raises(ValueError):
            EdgeSplit(train=np.array([0, 1]), validation=np.array([1]),
                      test=np.array([2]), seed=0, ratios=(0.5, 0.25, 0.25))


class TestSignMatrices:
    def test_toy_transcription(self, toy_matrices):
        assert toy_matrices.a_pos.toarray().tolist() == [[1, 0, 0], [0, 1, 1]]
        assert toy_matrices.a_neg.toarray().tolist() == [[0, 1, 0], [0, 0, 0]]

    def test_empty_subset(self, toy_graph):
        sm = build_sign_matrices(toy_graph, [])
        assert sm.a_pos.nnz == 0 and sm.a_neg.nnz == 0 and sm.a_all.nnz == 0

    def test_full_subset_nnz(self, toy_matrices):
        assert toy_matrices.a_all.nnz == 4

    def test_disjoint_supports_random(self):
        for seed in range(25):
            g = random_graph(12, 15, 70, seed=seed)
            sm = build_sign_matrices(g)
            overlap = sm.a_pos.multiply(sm.a_neg)
            assert overlap.nnz == 0
            assert np.array_equal(sm.a_all.toarray(), (sm.a_pos + sm.a_neg).toarray())

    def test_subset_out_of_range(self, toy_graph):
        with pytest.raises(IndexError):
            build_sign_matrices(toy_graph, [99])


class TestSymmetrize:
    def test_toy_shape_and_nnz(self, toy_matrices):
        s = symmetrize(toy_matrices.a_all)
        assert s.shape == (5, 5)
        assert s.nnz == 8

    def test_zero_matrix(self):
        s = symmetrize(sp.csr_matrix((2, 3)))
        assert s.shape == (5, 5) and s.nnz == 0

    def test_pos_entry_and_mirror(self, toy_matrices):
        s = symmetrize(toy_matrices.a_pos).toarray()
        assert s[1, 2 + 2] == 1.0  # u2 row, v3 column offset by u_count
        assert s[2 + 2, 1] == 1.0

    def test_bit_exact_symmetry(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            b = sp.random(7, 9, density=0.4, random_state=rng.integers(1 << 31), format="csr")
            s = symmetrize(b).toarray()
            assert np.array_equal(s, s.T)
            assert not s[:7, :7].any() and not s[7:, 7:].any()


class TestNormalize:
    def test_single_edge(self):
        s = symmetrize(sp.csr_matrix(np.array([[1.0]])))
        a_hat = normalize_adjacency(s)
        assert np.allclose(a_hat.toarray(), [[0, 1], [1, 0]])
        vals = np.linalg.eigvalsh(a_hat.toarray())
        assert np.allclose(sorted(vals), [-1, 1])

    def test_toy_hand_degrees(self, toy_matrices):
        # d(u1)=2, d(v1)=1, d(v2)=2 on the complete toy adjacency
        a_hat = normalize_adjacency(symmetrize(toy_matrices.a_all)).toarray()
        assert a_hat[0, 2] == pytest.approx(1 / np.sqrt(2 * 1), abs=1e-12)
        assert a_hat[0, 3] == pytest.approx(1 / np.sqrt(2 * 2), abs=1e-12)

    def test_isolated_node_zero_row(self):
        g = parse_edge_list("u1 v1 1\nu2 v1 1\n")
        sm = build_sign_matrices(g, [0])  # u2 becomes isolated
        a_hat = normalize_adjacency(symmetrize(sm.a_all)).toarray()
        assert not a_hat[1].any() and not a_hat[:, 1].any()

    def test_spectrum_in_unit_interval_and_symmetric(self):
        # bipartite normalized spectra live in [-1, 1] and mirror around 0
        rng = np.random.default_rng(7)
        for seed in range(8):
            g = random_graph(40, 55, 350, seed=seed)
            a_hat = normalize_adjacency(symmetrize(build_sign_matrices(g).a_all))
            vals = dense_eig(a_hat).values
            assert vals.min() >= -1 - 1e-10 and vals.max() <= 1 + 1e-10
            assert np.allclose(np.sort(vals), -np.sort(vals)[::-1], atol=1e-10)


class TestLaplacian:
    def test_single_edge(self):
        lap = laplacian(symmetrize(sp.csr_matrix(np.array([[1.0]]))))
        assert np.array_equal(lap.toarray(), [[1, -1], [-1, 1]])
        assert np.allclose(np.linalg.eigvalsh(lap.toarray()), [0, 2])

    def test_toy_diagonal(self, toy_matrices):
        lap = laplacian(symmetrize(toy_matrices.a_all))
        assert lap.diagonal().tolist() == [2, 2, 1, 2, 1]

    def test_zero_matrix(self):
        lap = laplacian(sp.csr_matrix((4, 4)))
        assert lap.nnz == 0

    def test_nullspace_per_component(self):
        for seed in range(5):
            g = random_graph(15, 20, 60, seed=seed)
            s = symmetrize(build_sign_matrices(g).a_all)
            lap = laplacian(s)
            n_comp, labels = sp.csgraph.connected_components(s, directed=False)
            for c in range(n_comp):
                indicator = (labels == c).astype(np.float64)
                assert np.abs(lap @ indicator).max() < 1e-12

    def test_positive_semidefinite(self):
        g = random_graph(10, 12, 50, seed=3)
        lap = laplacian(symmetrize(build_sign_matrices(g).a_all))
        assert np.linalg.eigvalsh(lap.toarray()).min() > -1e-10


class TestCosineBlock:
    def test_toy_row_normalization(self, toy_matrices):
        b = cosine_block_matrix(toy_matrices.a_all).toarray()
        assert np.allclose(b[0, 2:], [1 / np.sqrt(2), 1 / np.sqrt(2), 0])

    def test_toy_gram_entry(self, toy_matrices):
        b = cosine_block_matrix(toy_matrices.a_all)
        gram = (b @ b.T).toarray()
        assert gram[0, 1] == pytest.approx(0.5, abs=1e-12)

    def test_identity_like_passthrough(self):
        a = sp.csr_matrix(np.eye(3))
        b = cosine_block_matrix(a).toarray()
        assert np.allclose(b[:3, 3:], np.eye(3))
        assert np.allclose(b[3:, :3], np.eye(3))

    def test_gram_blocks_are_row_and_column_cosines(self):
        rng = np.random.default_rng(11)
        a = sp.csr_matrix((rng.random((6, 8)) < 0.4).astype(np.float64))
        b = cosine_block_matrix(a)
        gram = (b @ b.T).toarray()
        dense = a.toarray()
        rn = np.linalg.norm(dense, axis=1, keepdims=True)
        rn[rn == 0] = 1
        br = dense / rn
        cn = np.linalg.norm(dense, axis=0, keepdims=True)
        cn[cn == 0] = 1
        bc = dense / cn
        assert np.allclose(gram[:6, :6], br @ br.T, atol=1e-12)
        assert np.allclose(gram[6:, 6:], bc.T @ bc, atol=1e-12)

    def test_zero_rows_stay_zero(self):
        a = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
        b = cosine_block_matrix(a).toarray()
        assert not b[1].any()
