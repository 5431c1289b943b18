import numpy as np
import pytest
import scipy.sparse as sp

from gegennet.graph import build_sign_matrices, parse_edge_list

TOY_TEXT = "u1 v1 +1\nu1 v2 -1\nu2 v2 +1\nu2 v3 +1\n"


@pytest.fixture
def toy_graph():
    return parse_edge_list(TOY_TEXT)


@pytest.fixture
def toy_matrices(toy_graph):
    return build_sign_matrices(toy_graph)


def random_symmetric(rng, n, scale_into_unit=False):
    m = rng.standard_normal((n, n))
    m = 0.5 * (m + m.T)
    if scale_into_unit:
        m /= np.abs(np.linalg.eigvalsh(m)).max() + 1e-12
    return m


def random_bipartite_adjacency(rng, p, q, density=0.2):
    """Random unsigned bi-adjacency block as csr."""
    mask = rng.random((p, q)) < density
    return sp.csr_matrix(mask.astype(np.float64))
