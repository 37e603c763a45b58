"""GIN encoder: hand-computed layers, invariances, gradient flow."""

import numpy as np
import pytest

from subgcl import autodiff as ad
from subgcl.data import Graph
from subgcl.encoder import EncoderConfig, Embeddings, GinEncoder
from subgcl.errors import DimensionError, DomainError, ParameterError

from conftest import check_gradients, make_rng


def small_encoder(input_dim=1, hidden=4, layers=2, proj=3, seed=0, **kw):
    store = ad.ParameterStore()
    cfg = EncoderConfig(input_dim=input_dim, hidden_dim=hidden, layers=layers, projection_dim=proj, **kw)
    return GinEncoder(cfg, store, "enc", make_rng(seed)), store


def two_triangles():
    edges = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)]
    return Graph.build(6, np.ones((6, 1)), edges)


def test_config_validation():
    with pytest.raises(ParameterError):
        EncoderConfig(input_dim=0)
    with pytest.raises(ParameterError):
        EncoderConfig(input_dim=1, layers=0)
    with pytest.raises(ParameterError):
        EncoderConfig(input_dim=1, graph_readout="max")


def test_single_layer_matches_hand_arithmetic():
    enc, store = small_encoder(input_dim=1, hidden=2, layers=1)
    # overwrite with fixed weights and recompute by hand with plain numpy
    w1 = np.array([[1.0, -1.0]])
    b1 = np.array([0.5, 0.25])
    w2 = np.array([[2.0, 0.0], [1.0, 1.0]])
    b2 = np.array([-0.1, 0.2])
    eps = 0.5
    store["enc.layer0.w1"].data = w1
    store["enc.layer0.b1"].data = b1
    store["enc.layer0.w2"].data = w2
    store["enc.layer0.b2"].data = b2
    store["enc.layer0.eps"].data = np.asarray(eps)

    x = np.array([[1.0], [2.0]])
    adj = np.array([[0.0, 1.0], [1.0, 0.0]])
    got = enc.node_embeddings(x, adj).data

    mixed = (1.0 + eps) * x + adj @ x
    hidden = np.maximum(mixed @ w1 + b1, 0.0)
    want = hidden @ w2 + b2
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_isolated_node_sees_only_itself():
    enc, store = small_encoder(input_dim=2, hidden=3, layers=2)
    x = np.array([[0.3, -1.2]])
    adj = np.zeros((1, 1))
    out = enc.node_embeddings(x, adj)
    assert out.shape == (1, 3)
    assert np.all(np.isfinite(out.data))


def test_permutation_equivariance_and_invariant_readout():
    g = two_triangles()
    enc, _ = small_encoder(input_dim=1, hidden=5, layers=3, seed=4)
    rng = make_rng(8)
    perm = rng.permutation(g.num_nodes)
    h = Graph.build(
        g.num_nodes,
        g.node_features[np.argsort(perm)][np.argsort(np.argsort(perm))] * 0 + 1.0,
        [(int(perm[u]), int(perm[v])) for u, v in g.edges],
    )
    out_g = enc.node_embeddings(g.node_features, g.adjacency()).data
    out_h = enc.node_embeddings(h.node_features, h.adjacency()).data
    np.testing.assert_allclose(out_h[perm], out_g, atol=1e-9)

    emb_g = enc.encode_graph(g).graph.data
    emb_h = enc.encode_graph(h).graph.data
    np.testing.assert_allclose(emb_g, emb_h, atol=1e-9)


def test_distinguishes_cycle_from_bridged_triangles():
    # same node count but different degree structure; embeddings must differ
    cycle = Graph.build(6, np.ones((6, 1)), [(i, (i + 1) % 6) for i in range(6)])
    enc, _ = small_encoder(input_dim=1, hidden=4, layers=3, seed=2)
    a = enc.encode_graph(cycle).graph.data
    b = enc.encode_graph(two_triangles()).graph.data
    assert not np.allclose(a, b)


def test_subgraph_readout_weighted_mean_identity():
    # mean readouts per subgraph, weighted by |S_i| / N, equal the graph mean
    g = two_triangles()
    enc, _ = small_encoder(input_dim=1, hidden=4, layers=2, seed=1, graph_readout="mean")
    sets = [np.array([0, 1, 2]), np.array([3, 4, 5])]
    emb = enc.encode_graph(g)
    node = enc.node_embeddings(g.node_features, g.adjacency())
    subs = enc.readout(node, sets, "mean").data
    weights = np.array([3.0, 3.0]) / 6.0
    np.testing.assert_allclose(weights @ subs, emb.graph.data[0], atol=1e-12)


def test_readout_rejects_empty_set_and_bad_mode():
    enc, _ = small_encoder()
    node = enc.node_embeddings(np.ones((3, 1)), np.zeros((3, 3)))
    with pytest.raises(DomainError):
        enc.readout(node, [np.array([], dtype=int)], "sum")
    with pytest.raises(ParameterError):
        enc.readout(node, [np.array([0])], "median")


def test_feature_dim_mismatch():
    enc, _ = small_encoder(input_dim=2)
    with pytest.raises(DimensionError):
        enc.node_embeddings(np.ones((3, 1)), np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        enc.node_embeddings(np.ones((3, 2)), np.zeros((3, 4)))


def test_encode_returns_all_granularities():
    g = two_triangles()
    enc, _ = small_encoder(input_dim=1, hidden=4, proj=3)
    sets = [np.array([0, 1, 2]), np.array([3, 4, 5])]
    emb = enc.encode(g.node_features, g.adjacency(), sets)
    assert isinstance(emb, Embeddings)
    assert emb.node.shape == (6, 4)
    assert emb.subgraph.shape == (2, 4)
    assert emb.graph.shape == (1, 4)
    assert emb.projected.shape == (1, 3)


def randomize_params(store, rng, scale=0.4):
    """Move every parameter off its init point so no ReLU sits exactly at 0.

    Zero bias init can leave whole layers exactly at the kink, where the
    subgradient convention and finite differences legitimately disagree.
    """
    for _, v in store.items():
        v.data = v.data + rng.normal(scale=scale, size=v.data.shape)


@pytest.mark.parametrize("seed", range(5))
def test_encoder_gradients_match_finite_differences(seed):
    g = two_triangles()
    enc, store = small_encoder(input_dim=1, hidden=3, layers=2, proj=2, seed=seed)
    randomize_params(store, make_rng(1000 + seed))
    coeff = ad.Value(make_rng(seed).normal(size=(1, 2)))

    def build():
        emb = enc.encode_graph(g)
        return ad.reduce_sum(ad.mul(emb.projected, coeff))

    check_gradients(build, store.values(), rtol=1e-4, atol=1e-6)


def test_gradient_flows_through_weighted_adjacency():
    # differentiable edge weights are the bridge to the view generator
    g = two_triangles()
    enc, _ = small_encoder(input_dim=1, hidden=3, layers=2)
    w = ad.Value(np.full(g.num_edges, 0.9), requires_grad=True)

    def build():
        adj = ad.adjacency_from_edges(w, g.edges[:, 0], g.edges[:, 1], g.num_nodes)
        emb = enc.encode(g.node_features, adj)
        return ad.reduce_sum(emb.graph)

    check_gradients(build, [w], rtol=1e-4, atol=1e-6)
