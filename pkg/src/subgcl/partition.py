"""Community partitioning: Louvain, Girvan-Newman, modularity, statistics.

Both algorithms return a ``Partition``: a contiguous subgraph assignment per
node, with every subgraph connected inside the source graph (disconnected
communities are split as a post-pass).  Partitions are deterministic given
the algorithm seed, which makes cached assignments and run reports
reproducible.
"""

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import IngestionError, ParameterError

PASS_TOLERANCE = 1e-7


@dataclass(frozen=True)
class Partition:
    """A node-to-subgraph assignment with contiguous labels 0..k-1."""

    assign: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assign, dtype=np.int64)
        if a.ndim != 1 or a.size < 1:
            raise ParameterError(f"assignment must be a 1-d node vector, got shape {a.shape}")
        k = a.max() + 1
        present = np.unique(a)
        if a.min() < 0 or len(present) != k:
            raise ParameterError("subgraph labels must be contiguous starting at 0")
        a.setflags(write=False)
        object.__setattr__(self, "assign", a)

    @classmethod
    def from_labels(cls, labels):
        """Relabel arbitrary community ids to contiguous ids ordered by first node."""
        labels = np.asarray(labels, dtype=np.int64)
        remap = {}
        out = np.zeros_like(labels)
        for i, c in enumerate(labels):
            if c not in remap:
                remap[c] = len(remap)
            out[i] = remap[c]
        return cls(out)

    @property
    def num_nodes(self):
        return int(self.assign.shape[0])

    @property
    def num_subgraphs(self):
        return int(self.assign.max()) + 1

    def subgraph_sets(self):
        """Node index arrays per subgraph, ascending within each."""
        return [np.flatnonzero(self.assign == c) for c in range(self.num_subgraphs)]

    def sizes(self):
        return np.bincount(self.assign, minlength=self.num_subgraphs)

    def intra_mask(self, graph):
        """Boolean mask over graph.edges marking within-subgraph edges."""
        if graph.num_nodes != self.num_nodes:
            raise ParameterError(
                f"partition covers {self.num_nodes} nodes, graph has {graph.num_nodes}"
            )
        if graph.edges.size == 0:
            return np.zeros(0, dtype=bool)
        return self.assign[graph.edges[:, 0]] == self.assign[graph.edges[:, 1]]

    def edge_subgraph_pairs(self, graph):
        """(E, 2) array of the subgraph ids at each edge's endpoints."""
        if graph.edges.size == 0:
            return np.zeros((0, 2), dtype=np.int64)
        return np.stack(
            [self.assign[graph.edges[:, 0]], self.assign[graph.edges[:, 1]]], axis=1
        )


def modularity(graph, assign, resolution=1.0):
    """Newman modularity of an assignment; an edgeless graph scores 0.0."""
    assign = np.asarray(assign, dtype=np.int64)
    if assign.shape != (graph.num_nodes,):
        raise ParameterError(
            f"assignment shape {assign.shape} does not cover {graph.num_nodes} nodes"
        )
    m = graph.num_edges
    if m == 0:
        return 0.0
    k = int(assign.max()) + 1
    intra = np.bincount(
        assign[graph.edges[:, 0]],
        weights=(assign[graph.edges[:, 0]] == assign[graph.edges[:, 1]]).astype(float),
        minlength=k,
    )
    deg_sum = np.bincount(assign, weights=graph.degrees().astype(float), minlength=k)
    return float(np.sum(intra / m - resolution * (deg_sum / (2.0 * m)) ** 2))


def split_disconnected(graph, assign):
    """Split any community that is disconnected inside the graph into components."""
    assign = np.asarray(assign, dtype=np.int64)
    neighbors = graph.neighbor_lists()
    new_labels = np.full(graph.num_nodes, -1, dtype=np.int64)
    next_label = 0
    for v in range(graph.num_nodes):
        if new_labels[v] >= 0:
            continue
        # BFS within the community of v
        community = assign[v]
        queue = deque([v])
        new_labels[v] = next_label
        while queue:
            u = queue.popleft()
            for w in neighbors[u]:
                if new_labels[w] < 0 and assign[w] == community:
                    new_labels[w] = next_label
                    queue.append(w)
        next_label += 1
    return Partition.from_labels(new_labels)


# -- Louvain -----------------------------------------------------------


class _Level:
    """A weighted aggregate graph acted on by one Louvain level."""

    def __init__(self, adj, loops):
        self.adj = adj  # node -> {neighbor: weight}, no self entries
        self.loops = loops  # node -> internal (self-loop) weight
        self.nodes = sorted(adj)
        self.degree = {
            v: sum(adj[v].values()) + 2.0 * loops.get(v, 0.0) for v in self.nodes
        }

    @classmethod
    def from_graph(cls, graph):
        adj = {v: {} for v in range(graph.num_nodes)}
        for u, v in graph.edges:
            adj[int(u)][int(v)] = adj[int(u)].get(int(v), 0.0) + 1.0
            adj[int(v)][int(u)] = adj[int(v)].get(int(u), 0.0) + 1.0
        return cls(adj, {})

    def total_weight(self):
        inter = sum(sum(nbrs.values()) for nbrs in self.adj.values()) / 2.0
        return inter + sum(self.loops.values())


def _one_level(level, m, resolution, order):
    """Node-move passes until the modularity gain of a full pass drops below tolerance.

    Returns (community dict, total gain).  Gains follow
    (k_in - resolution * sigma_tot * k_v / 2m) / m against the node's own
    community, with ties broken toward the smallest community id.
    """
    community = {v: v for v in level.nodes}
    sigma_tot = {v: level.degree[v] for v in level.nodes}
    total_gain = 0.0
    while True:
        pass_gain = 0.0
        for v in order():
            own = community[v]
            k_v = level.degree[v]
            sigma_tot[own] -= k_v
            links = {}
            for w, wt in level.adj[v].items():
                links[community[w]] = links.get(community[w], 0.0) + wt
            candidates = sorted(set(links) | {own})
            best_c, best_gain = own, -np.inf
            for c in candidates:
                gain = (
                    links.get(c, 0.0) - resolution * sigma_tot[c] * k_v / (2.0 * m)
                ) / m
                if gain > best_gain + 1e-15 or (
                    abs(gain - best_gain) <= 1e-15 and c < best_c
                ):
                    best_c, best_gain = c, gain
            own_gain = (
                links.get(own, 0.0) - resolution * sigma_tot[own] * k_v / (2.0 * m)
            ) / m
            community[v] = best_c
            sigma_tot[best_c] += k_v
            pass_gain += best_gain - own_gain
        total_gain += pass_gain
        if pass_gain < PASS_TOLERANCE:
            break
    return community, total_gain


def _aggregate(level, community):
    """Collapse communities into super-nodes, accumulating edge weights."""
    ids = sorted(set(community.values()))
    remap = {c: i for i, c in enumerate(ids)}
    adj = {i: {} for i in range(len(ids))}
    loops = {}
    for v, nbrs in level.adj.items():
        cv = remap[community[v]]
        for w, wt in nbrs.items():
            cw = remap[community[w]]
            if cv == cw:
                # each undirected intra edge appears twice in adj
                loops[cv] = loops.get(cv, 0.0) + wt / 2.0
            else:
                adj[cv][cw] = adj[cv].get(cw, 0.0) + wt
    for v, wt in level.loops.items():
        c = remap[community[v]]
        loops[c] = loops.get(c, 0.0) + wt
    return _Level(adj, loops), remap


def louvain(graph, seed=0, resolution=1.0, order_hook=None):
    """Louvain partition with a seeded visit order and connectivity post-pass.

    ``order_hook(level_index, nodes) -> sequence`` overrides the shuffled
    visit order (a testing and reproducibility seam); by default each level
    shuffles with a generator derived from ``seed``.
    """
    if resolution <= 0:
        raise ParameterError(f"resolution must be > 0, got {resolution}")
    if graph.num_edges == 0:
        return Partition(np.arange(graph.num_nodes))

    rng = np.random.default_rng(np.random.SeedSequence([0x10C4, seed]))
    level = _Level.from_graph(graph)
    m = level.total_weight()
    mapping = np.arange(graph.num_nodes)
    level_idx = 0
    while True:
        nodes = list(level.nodes)

        def order(_nodes=nodes, _idx=level_idx):
            if order_hook is not None:
                return list(order_hook(_idx, list(_nodes)))
            arr = np.array(_nodes)
            rng.shuffle(arr)
            return arr.tolist()

        community, gain = _one_level(level, m, resolution, order)
        n_comms = len(set(community.values()))
        if n_comms == len(level.nodes):
            break
        level, remap = _aggregate(level, community)
        mapping = np.array([remap[community[int(c)]] for c in mapping])
        level_idx += 1
        if gain < PASS_TOLERANCE:
            break
    return split_disconnected(graph, mapping)


# -- Girvan-Newman -----------------------------------------------------


def edge_betweenness(num_nodes, edges):
    """Exact shortest-path edge betweenness (sum over unordered node pairs).

    Brandes accumulation from every source, halved at the end because each
    pair is seen from both endpoints.
    """
    edges = [(int(u), int(v)) for u, v in edges]
    adj = [[] for _ in range(num_nodes)]
    for ei, (u, v) in enumerate(edges):
        adj[u].append((v, ei))
        adj[v].append((u, ei))
    bet = np.zeros(len(edges), dtype=np.float64)
    for s in range(num_nodes):
        dist = [-1] * num_nodes
        sigma = [0.0] * num_nodes
        preds = [[] for _ in range(num_nodes)]
        dist[s] = 0
        sigma[s] = 1.0
        order = []
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w, ei in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append((v, ei))
        delta = [0.0] * num_nodes
        for w in reversed(order):
            for v, ei in preds[w]:
                c = sigma[v] / sigma[w] * (1.0 + delta[w])
                bet[ei] += c
                delta[v] += c
    return bet / 2.0


def _components(num_nodes, edges):
    label = np.full(num_nodes, -1, dtype=np.int64)
    adj = [[] for _ in range(num_nodes)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    nxt = 0
    for v in range(num_nodes):
        if label[v] >= 0:
            continue
        queue = deque([v])
        label[v] = nxt
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if label[w] < 0:
                    label[w] = nxt
                    queue.append(w)
        nxt += 1
    return label


def girvan_newman(graph, target_k=None, resolution=1.0):
    """Divisive partitioning by repeated highest-betweenness edge removal.

    With ``target_k`` None, returns the component structure of highest
    modularity seen along the removal sequence (first peak on ties);
    otherwise stops as soon as at least ``target_k`` components exist.
    Betweenness ties break toward the lowest original edge index, making the
    algorithm fully deterministic.
    """
    n = graph.num_nodes
    if target_k is not None and not (1 <= target_k <= n):
        raise ParameterError(f"target_k must be in [1, {n}], got {target_k}")
    remaining = {i: (int(u), int(v)) for i, (u, v) in enumerate(graph.edges)}

    labels = _components(n, list(remaining.values()))
    if target_k is not None:
        if labels.max() + 1 >= target_k:
            return Partition.from_labels(labels)
    best_assign = labels
    best_q = modularity(graph, labels, resolution)

    # betweenness only changes inside the component that lost an edge
    scores = {}

    def rescore(node_subset):
        subset = set(node_subset)
        idx = [i for i, (u, v) in remaining.items() if u in subset]
        local = [remaining[i] for i in idx]
        vals = edge_betweenness(n, local)
        for i, val in zip(idx, vals):
            scores[i] = val

    rescore(range(n))
    comp_of = labels.copy()
    while remaining:
        top = max(scores.items(), key=lambda kv: (kv[1], -kv[0]))[0]
        u, v = remaining.pop(top)
        del scores[top]
        labels = _components(n, list(remaining.values()))
        if target_k is not None and labels.max() + 1 >= target_k:
            return Partition.from_labels(labels)
        q = modularity(graph, labels, resolution)
        if q > best_q + 1e-12:
            best_q, best_assign = q, labels
        # recompute scores for the component(s) that held the removed edge
        touched = np.flatnonzero((comp_of == comp_of[u]) | (comp_of == comp_of[v]))
        rescore(touched.tolist())
        comp_of = labels
    if target_k is not None:
        return Partition.from_labels(labels)
    return Partition.from_labels(best_assign)


# -- dataset-level helpers ---------------------------------------------


def partition_dataset(dataset, algorithm="louvain", seed=0, resolution=1.0):
    """Partition every graph; Louvain gets an independent substream per graph."""
    out = []
    for i, g in enumerate(dataset.graphs):
        if algorithm == "louvain":
            sub_seed = int(
                np.random.SeedSequence([0x10C4, seed, i]).generate_state(1)[0] % (2**31)
            )
            out.append(louvain(g, seed=sub_seed, resolution=resolution))
        elif algorithm == "gn":
            out.append(girvan_newman(g, resolution=resolution))
        else:
            raise ParameterError(f"unknown partition algorithm: {algorithm!r}")
    return out


def partition_stats(dataset, partitions):
    """Corpus averages: nodes, subgraphs, subgraph size, intra/inter edge split."""
    if len(partitions) != len(dataset):
        raise ParameterError("one partition per graph required")
    nodes, subs, per_sub, intra_frac = [], [], [], []
    for g, p in zip(dataset.graphs, partitions):
        nodes.append(g.num_nodes)
        subs.append(p.num_subgraphs)
        per_sub.append(g.num_nodes / p.num_subgraphs)
        if g.num_edges:
            intra_frac.append(float(p.intra_mask(g).mean()))
    return {
        "num_graphs": len(dataset),
        "avg_nodes": float(np.mean(nodes)),
        "avg_subgraphs": float(np.mean(subs)),
        "avg_nodes_per_subgraph": float(np.mean(per_sub)),
        "avg_intra_edge_fraction": float(np.mean(intra_frac)) if intra_frac else 0.0,
        "avg_inter_edge_fraction": 1.0 - float(np.mean(intra_frac)) if intra_frac else 0.0,
    }


def save_partitions(path, partitions, algorithm, seed, resolution=1.0):
    payload = {
        "format": "subgcl-partitions-v1",
        "algorithm": algorithm,
        "seed": seed,
        "resolution": resolution,
        "assignments": [p.assign.tolist() for p in partitions],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f)
    return path


def load_partitions(path, dataset=None):
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("format") != "subgcl-partitions-v1":
        raise IngestionError(f"{path}: unknown partition cache format")
    parts = [Partition(np.asarray(a, dtype=np.int64)) for a in payload["assignments"]]
    if dataset is not None:
        if len(parts) != len(dataset):
            raise IngestionError(
                f"{path}: {len(parts)} assignments for {len(dataset)} graphs"
            )
        for i, (g, p) in enumerate(zip(dataset.graphs, parts)):
            if p.num_nodes != g.num_nodes:
                raise IngestionError(f"{path}: assignment {i} covers {p.num_nodes} nodes")
    return parts, payload
