"""Graph isomorphism network encoder with subgraph and graph readouts.

Each layer computes MLP((1 + eps) * h_v + sum of neighbour h_u) where the
MLP is linear -> ReLU -> linear and eps is a learned scalar per layer.  The
adjacency may carry differentiable edge weights, which is how augmented
views stay connected to the view-generator parameters.  A two-layer
projection head maps graph embeddings into the contrastive space; linear
probes consume the pre-projection embeddings.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import DimensionError, ParameterError

READOUTS = ("sum", "mean")


@dataclass
class EncoderConfig:
    input_dim: int
    hidden_dim: int = 32
    layers: int = 3
    projection_dim: int = 32
    graph_readout: str = "sum"
    subgraph_readout: str = "mean"

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_dim < 1 or self.projection_dim < 1:
            raise ParameterError("encoder dimensions must be positive")
        if self.layers < 1:
            raise ParameterError(f"need at least one layer, got {self.layers}")
        if self.graph_readout not in READOUTS or self.subgraph_readout not in READOUTS:
            raise ParameterError(f"readout modes must be one of {READOUTS}")


@dataclass
class Embeddings:
    """Per-granularity encoder outputs for one graph."""

    node: ad.Value
    subgraph: ad.Value | None
    graph: ad.Value
    projected: ad.Value


def glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


# Biases start with small noise rather than exact zeros.  With zero biases and
# relu, a graph whose node features are all identical collapses every layer to
# a single scalar per node (positive homogeneity keeps the rank at one), and
# training then has to crawl out of that degenerate regime; a little bias
# noise puts the units in varied regimes from the first step.
BIAS_INIT_SCALE = 0.01


def bias_init(rng, size):
    return BIAS_INIT_SCALE * rng.standard_normal(size)


class GinEncoder:
    """GIN message passing over dense (possibly weighted) adjacencies.

    Parameters are registered into the supplied store under ``prefix`` so a
    single optimiser and checkpoint can cover several encoders.
    """

    def __init__(self, config, store, prefix, rng):
        self.config = config
        self.prefix = prefix
        self._p = {}
        in_dim = config.input_dim
        for layer in range(config.layers):
            h = config.hidden_dim
            self._p[f"layer{layer}.w1"] = store.add(
                f"{prefix}.layer{layer}.w1", glorot(rng, in_dim, h)
            )
            self._p[f"layer{layer}.b1"] = store.add(f"{prefix}.layer{layer}.b1", bias_init(rng, h))
            self._p[f"layer{layer}.w2"] = store.add(
                f"{prefix}.layer{layer}.w2", glorot(rng, h, h)
            )
            self._p[f"layer{layer}.b2"] = store.add(f"{prefix}.layer{layer}.b2", bias_init(rng, h))
            self._p[f"layer{layer}.eps"] = store.add(f"{prefix}.layer{layer}.eps", 0.0)
            in_dim = h
        p = config.projection_dim
        self._p["proj.w1"] = store.add(f"{prefix}.proj.w1", glorot(rng, config.hidden_dim, p))
        self._p["proj.b1"] = store.add(f"{prefix}.proj.b1", bias_init(rng, p))
        self._p["proj.w2"] = store.add(f"{prefix}.proj.w2", glorot(rng, p, p))
        self._p["proj.b2"] = store.add(f"{prefix}.proj.b2", bias_init(rng, p))

    def node_embeddings(self, x, adj):
        """(N, hidden_dim) node embeddings from features and dense adjacency."""
        x = ad.as_value(x)
        adj = ad.as_value(adj)
        n = x.shape[0]
        if x.ndim != 2 or x.shape[1] != self.config.input_dim:
            raise DimensionError(
                f"feature matrix {x.shape} does not match input_dim {self.config.input_dim}"
            )
        if adj.shape != (n, n):
            raise DimensionError(f"adjacency {adj.shape} does not match {n} nodes")
        h = x
        for layer in range(self.config.layers):
            mixed = ad.add(
                ad.mul(h, ad.add(1.0, self._p[f"layer{layer}.eps"])),
                ad.matmul(adj, h),
            )
            hidden = ad.relu(
                ad.add_bias(ad.matmul(mixed, self._p[f"layer{layer}.w1"]), self._p[f"layer{layer}.b1"])
            )
            h = ad.add_bias(ad.matmul(hidden, self._p[f"layer{layer}.w2"]), self._p[f"layer{layer}.b2"])
        return h

    def readout(self, node_embs, index_sets, mode):
        """Stack one pooled row per index set; empty sets are rejected."""
        if mode not in READOUTS:
            raise ParameterError(f"readout mode must be one of {READOUTS}, got {mode!r}")
        rows = []
        for idx in index_sets:
            part = ad.gather_rows(node_embs, np.asarray(idx, dtype=np.int64))
            if mode == "sum":
                rows.append(ad.reduce_sum(part, axis=0, keepdims=True))
            else:
                rows.append(ad.reduce_mean(part, axis=0, keepdims=True))
        return ad.concat(rows, axis=0)

    def project(self, graph_embs):
        """(M, projection_dim) contrastive-space projection of graph embeddings."""
        hidden = ad.relu(ad.add_bias(ad.matmul(graph_embs, self._p["proj.w1"]), self._p["proj.b1"]))
        return ad.add_bias(ad.matmul(hidden, self._p["proj.w2"]), self._p["proj.b2"])

    def encode(self, x, adj, subgraph_sets=None):
        """Full per-graph pass: node, optional subgraph, graph, projected."""
        node = self.node_embeddings(x, adj)
        n = node.shape[0]
        graph = self.readout(node, [np.arange(n)], self.config.graph_readout)
        sub = None
        if subgraph_sets is not None:
            sub = self.readout(node, subgraph_sets, self.config.subgraph_readout)
        return Embeddings(node=node, subgraph=sub, graph=graph, projected=self.project(graph))

    def encode_graph(self, graph, partition=None):
        """Encode a raw (unaugmented) graph, optionally with subgraph readouts."""
        sets = partition.subgraph_sets() if partition is not None else None
        return self.encode(graph.node_features, graph.adjacency(), sets)

    def parameter_values(self):
        return list(self._p.values())
