import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsgc.exceptions import (DimensionMismatch, DuplicateEdge, IndexOutOfRange,
                             NotSymmetric, RaggedFeatures, SelfLoop, TooLarge)
from nsgc.graph import (adjacency, augmented_adjacency, basis_matrix, build_graph,
                        check_symmetric, dump_graphs, load_graphs, permutation_matrix,
                        permute_graph, permute_matrix)
from nsgc.linalg import eig_sym

from conftest import random_graph


def test_build_smallest_and_complete(p2, k3):
    assert p2.num_nodes == 2 and p2.edges == ((0, 1),)
    assert k3.num_edges == 3
    assert p2.edge_feat.shape == (1, 0)


@pytest.mark.parametrize("rec, exc", [
    ({"num_nodes": 2, "edges": [[0, 0]]}, SelfLoop),
    ({"num_nodes": 2, "edges": [[0, 2]]}, IndexOutOfRange),
    ({"num_nodes": 3, "edges": [[0, 1], [1, 0]]}, DuplicateEdge),
    ({"num_nodes": 2, "edges": [], "node_feat": [[1.0]]}, RaggedFeatures),
    ({"num_nodes": 2, "edges": [], "node_feat": [[1.0], [1.0, 2.0]]}, RaggedFeatures),
    ({"num_nodes": 3, "edges": [[0, 1], [1, 2]], "edge_feat": [[1.0]]}, RaggedFeatures),
    ({"num_nodes": 300, "edges": []}, TooLarge),
])
def test_build_rejects(rec, exc):
    with pytest.raises(exc):
        build_graph(rec)


def test_adjacency_examples(p2, k3):
    np.testing.assert_array_equal(adjacency(p2), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(adjacency(k3), np.ones((3, 3)) - np.eye(3))
    empty = build_graph(num_nodes=3, edges=[])
    np.testing.assert_array_equal(adjacency(empty), np.zeros((3, 3)))


def test_augmented_adjacency_examples(p2, k3):
    np.testing.assert_array_equal(augmented_adjacency(p2), np.ones((2, 2)))
    np.testing.assert_array_equal(augmented_adjacency(k3), np.ones((3, 3)))
    np.testing.assert_array_equal(augmented_adjacency(build_graph(num_nodes=3, edges=[])), np.eye(3))


def test_basis_matrix_examples(p2, k3):
    # D~ = diag(2, 2) for P2, D~ = 3I for K3
    np.testing.assert_allclose(basis_matrix(p2, "sym_norm"), np.full((2, 2), 0.5), atol=1e-15)
    np.testing.assert_array_equal(basis_matrix(p2, "laplacian"), [[1, -1], [-1, 1]])
    np.testing.assert_allclose(basis_matrix(k3, "rw_norm"), np.full((3, 3), 1 / 3), atol=1e-15)


def test_rw_norm_is_not_symmetric(rng):
    g = build_graph(num_nodes=3, edges=[(0, 1), (1, 2)])
    with pytest.raises(NotSymmetric):
        check_symmetric(basis_matrix(g, "rw_norm"))


def test_rw_norm_similar_to_sym_norm(rng):
    g = random_graph(rng, 9)
    deg = augmented_adjacency(g).sum(axis=1)
    sym = basis_matrix(g, "sym_norm")
    rw = basis_matrix(g, "rw_norm")
    np.testing.assert_allclose(np.diag(deg ** -0.5) @ sym @ np.diag(deg ** 0.5), rw, atol=1e-14)


def test_permutation_examples(p2):
    ident = np.arange(2)
    np.testing.assert_array_equal(permute_matrix(adjacency(p2), ident), adjacency(p2))
    np.testing.assert_array_equal(permute_matrix(adjacency(p2), [1, 0]), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(permute_matrix(np.diag([1.0, 2.0]), [1, 0]), np.diag([2.0, 1.0]))
    with pytest.raises(DimensionMismatch):
        permute_matrix(np.eye(3), [1, 0])


def test_permute_matrix_is_conjugation(rng):
    s = rng.standard_normal((6, 6))
    m = rng.permutation(6)
    big_m = permutation_matrix(m)
    np.testing.assert_array_equal(permute_matrix(s, m), big_m @ s @ big_m.T)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2 ** 31 - 1))
def test_adjacency_commutes_with_permutation(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, node_dim=2)
    m = rng.permutation(n)
    np.testing.assert_array_equal(adjacency(permute_graph(g, m)), permute_matrix(adjacency(g), m))
    np.testing.assert_array_equal(augmented_adjacency(g) - adjacency(g), np.eye(n))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2 ** 31 - 1))
def test_spectrum_bounds(n, seed):
    g = random_graph(np.random.default_rng(seed), n)
    sym = eig_sym(basis_matrix(g, "sym_norm")).eigvals
    assert sym.max() <= 1 + 1e-12 and sym.min() >= -1 - 1e-12
    assert eig_sym(basis_matrix(g, "laplacian")).eigvals.min() >= -1e-10


def test_json_round_trip(tmp_path, rng):
    g = random_graph(rng, 5, node_dim=3, edge_dim=2, target=1.5)
    path = tmp_path / "g.json"
    dump_graphs([g], path)
    back = load_graphs(path)[0]
    assert back.edges == g.edges and back.target == 1.5
    np.testing.assert_array_equal(back.node_feat, g.node_feat)
    np.testing.assert_array_equal(back.edge_feat, g.edge_feat)
    single = tmp_path / "one.json"
    single.write_text(json.dumps({"num_nodes": 2, "edges": [[0, 1]], "node_feat": [[1], [2]]}))
    assert load_graphs(single)[0].num_nodes == 2
