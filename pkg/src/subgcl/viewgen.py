"""Learned per-subgraph augmentation: strategy policy, operators, view assembly.

For each graph a partition is given; every subgraph samples one of five
augmentation strategies from a learned policy (straight-through
Gumbel-Softmax over a linear selector on subgraph embeddings):

* ``node_drop``     - per-node keep/drop decisions inside the subgraph
* ``feature_mask``  - per-node feature row keep/zero decisions
* ``intra_edge``    - keep/drop over intra edges plus sampled non-edges
* ``inter_edge``    - keep/drop over the cross edges to the most-connected
                      partner subgraph plus sampled cross non-edges
* ``subgraph_swap`` - two swap-selecting subgraphs exchange their outside
                      attachments through a degree-rank node pairing

Every discrete decision is a straight-through sample: the emitted view is
exactly discrete in the forward pass while gradients flow to the policy and
head parameters through the soft relaxations.  The assembled adjacency
contains an entry for every candidate edge (dropped candidates contribute an
exact zero with a live gradient), so one backward pass reaches all heads.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .encoder import GinEncoder
from .errors import ParameterError

STRATEGIES = ("node_drop", "feature_mask", "intra_edge", "inter_edge", "subgraph_swap")
NODE_DROP, FEATURE_MASK, INTRA_EDGE, INTER_EDGE, SUBGRAPH_SWAP = range(5)
KEEP = 0
MASK_LOGIT = -1e9


@dataclass
class AugmentedView:
    """A discrete augmented graph with differentiable structure.

    ``adjacency`` holds the straight-through edge weights (entries are
    exactly 0 or 1 forward) and is what encoders consume; ``soft_adjacency``
    and ``soft_state`` keep the relaxed values for similarity penalties.
    ``edge_index`` lists the surviving edges, whose endpoints always have
    forward keep value 1.
    """

    graph: object
    partition: object
    features: ad.Value
    node_keep: ad.Value
    soft_node_keep: ad.Value
    soft_feature_scale: ad.Value
    state: ad.Value
    soft_state: ad.Value
    strategy_ids: np.ndarray
    effective_strategies: np.ndarray
    adjacency: ad.Value
    soft_adjacency: ad.Value
    edge_index: np.ndarray
    edge_weights: ad.Value


def _column(x, j, width):
    """Extract column j of a 2-d Value as a 1-d Value."""
    basis = np.zeros((width, 1))
    basis[j, 0] = 1.0
    return ad.reshape(ad.matmul(x, ad.constant(basis)), (x.shape[0],))


def _repeat_row(row, count):
    """Tile a (1, H) Value into (count, H)."""
    return ad.matmul(ad.constant(np.ones((count, 1))), row)


def swap_node_map(graph, nodes_a, nodes_b):
    """Degree-rank pairing between two node sets.

    Nodes are ranked by descending original-graph degree (ties toward the
    smaller node id); rank r of one side maps to rank r of the other, up to
    the smaller set size.  Returns a full node permutation (identity
    elsewhere).
    """
    deg = graph.degrees()
    rank_a = sorted(nodes_a, key=lambda v: (-deg[v], v))
    rank_b = sorted(nodes_b, key=lambda v: (-deg[v], v))
    phi = np.arange(graph.num_nodes, dtype=np.int64)
    for va, vb in zip(rank_a, rank_b):
        phi[va] = vb
        phi[vb] = va
    return phi


class ViewGenerator:
    """Samples augmented views whose structure stays differentiable.

    Owns a GIN encoder (or shares an external one) plus five linear heads:
    the strategy selector over subgraph embeddings, per-node keep heads for
    dropping and masking, and edge heads over concatenated endpoint (and
    subgraph) embeddings.
    """

    def __init__(self, config, store, prefix, rng, encoder=None, neg_ratio=1.0):
        if neg_ratio < 0:
            raise ParameterError(f"neg_ratio must be >= 0, got {neg_ratio}")
        self.config = config
        self.prefix = prefix
        self.neg_ratio = neg_ratio
        if encoder is None:
            encoder = GinEncoder(config, store, f"{prefix}.encoder", rng)
        self.encoder = encoder
        h = config.hidden_dim
        from .encoder import glorot

        self.heads = {
            "select": (store.add(f"{prefix}.select.w", glorot(rng, h, 5)),
                       store.add(f"{prefix}.select.b", np.zeros(5))),
            "drop": (store.add(f"{prefix}.drop.w", glorot(rng, h, 2)),
                     store.add(f"{prefix}.drop.b", np.zeros(2))),
            "mask": (store.add(f"{prefix}.mask.w", glorot(rng, h, 2)),
                     store.add(f"{prefix}.mask.b", np.zeros(2))),
            "intra": (store.add(f"{prefix}.intra.w", glorot(rng, 2 * h, 2)),
                      store.add(f"{prefix}.intra.b", np.zeros(2))),
            "inter": (store.add(f"{prefix}.inter.w", glorot(rng, 4 * h, 2)),
                      store.add(f"{prefix}.inter.b", np.zeros(2))),
        }

    def head_parameters(self):
        """name -> [Values] map covering the five heads (for gradient audits)."""
        return {name: list(pair) for name, pair in self.heads.items()}

    def _head(self, name, x):
        w, b = self.heads[name]
        return ad.add_bias(ad.matmul(x, w), b)

    def _keep_decisions(self, name, rows, tau, rng, guard_one_kept):
        """Two-way straight-through decisions for a stack of embeddings.

        Returns (hard keep column, soft keep column).  With
        ``guard_one_kept`` an all-drop draw is overridden at the node with
        the highest soft keep probability.
        """
        logits = self._head(name, rows)
        soft = ad.sample_gumbel_softmax(logits, tau, rng)
        indices = np.argmax(soft.data, axis=1)
        if guard_one_kept and np.all(indices != KEEP):
            indices = indices.copy()
            indices[int(np.argmax(soft.data[:, KEEP]))] = KEEP
        hard = ad.straight_through_onehot(soft, indices)
        return _column(hard, KEEP, 2), _column(soft, KEEP, 2)

    def generate(self, graph, partition, tau, rng):
        """Sample one augmented view of ``graph`` under ``partition``."""
        if partition.num_nodes != graph.num_nodes:
            raise ParameterError(
                f"partition covers {partition.num_nodes} nodes, graph has {graph.num_nodes}"
            )
        n = graph.num_nodes
        k = partition.num_subgraphs
        sets = partition.subgraph_sets()
        assign = partition.assign

        node_embs = self.encoder.node_embeddings(graph.node_features, graph.adjacency())
        sub_embs = self.encoder.readout(node_embs, sets, self.config.subgraph_readout)

        # -- strategy sampling ------------------------------------------
        logits = self._head("select", sub_embs)
        if k == 1:
            # pair strategies are undefined for a single subgraph
            mask = np.zeros((1, 5))
            mask[0, INTER_EDGE] = MASK_LOGIT
            mask[0, SUBGRAPH_SWAP] = MASK_LOGIT
            logits = ad.add(logits, ad.constant(mask))
        soft_state = ad.sample_gumbel_softmax(logits, tau, rng)
        strategy_ids = np.argmax(soft_state.data, axis=1)
        if k == 1:
            # non-finite logits can defeat the additive mask; force the
            # single-subgraph case onto a within-subgraph strategy anyway
            strategy_ids = np.where(
                np.isin(strategy_ids, (INTER_EDGE, SUBGRAPH_SWAP)),
                INTRA_EDGE, strategy_ids,
            )
        state = ad.straight_through_onehot(soft_state, strategy_ids)

        effective = strategy_ids.copy()
        swap_ids = [c for c in range(k) if strategy_ids[c] == SUBGRAPH_SWAP]
        swap_pairs = [(swap_ids[i], swap_ids[i + 1]) for i in range(0, len(swap_ids) - 1, 2)]
        if len(swap_ids) % 2 == 1:
            # an unpaired swap pick falls back to intra edge perturbation
            effective[swap_ids[-1]] = INTRA_EDGE

        # -- per-node keep decisions ------------------------------------
        keep_parts, soft_keep_parts = [], []
        feat_parts, soft_feat_parts = [], []
        for c in range(k):
            size = len(sets[c])
            ones = ad.constant(np.ones(size))
            if effective[c] == NODE_DROP:
                rows = ad.gather_rows(node_embs, sets[c])
                hard_keep, soft_keep = self._keep_decisions("drop", rows, tau, rng, True)
                keep_parts.append(hard_keep)
                soft_keep_parts.append(soft_keep)
                feat_parts.append(hard_keep)
                soft_feat_parts.append(soft_keep)
            elif effective[c] == FEATURE_MASK:
                rows = ad.gather_rows(node_embs, sets[c])
                hard_keep, soft_keep = self._keep_decisions("mask", rows, tau, rng, False)
                keep_parts.append(ones)
                soft_keep_parts.append(ad.constant(np.ones(size)))
                feat_parts.append(hard_keep)
                soft_feat_parts.append(soft_keep)
            else:
                keep_parts.append(ones)
                soft_keep_parts.append(ones)
                feat_parts.append(ones)
                soft_feat_parts.append(ones)
        perm = np.concatenate(sets)
        inv = np.empty(n, dtype=np.int64)
        inv[perm] = np.arange(n)
        node_keep = ad.gather_rows(ad.concat(keep_parts), inv)
        soft_node_keep = ad.gather_rows(ad.concat(soft_keep_parts), inv)
        feat_scale = ad.gather_rows(ad.concat(feat_parts), inv)
        soft_feat_scale = ad.gather_rows(ad.concat(soft_feat_parts), inv)

        features = ad.scale_rows(ad.constant(graph.node_features), feat_scale)

        # -- edge candidate groups --------------------------------------
        edges = graph.edges
        num_edges = edges.shape[0]
        claimed = np.zeros(num_edges, dtype=bool)
        intra_ids = {c: [] for c in range(k)}
        cross_ids = {}
        for ei, (u, v) in enumerate(edges):
            cu, cv = assign[u], assign[v]
            if cu == cv:
                intra_ids[int(cu)].append(ei)
            else:
                key = (int(min(cu, cv)), int(max(cu, cv)))
                cross_ids.setdefault(key, []).append(ei)

        groups = []  # (hard weights, soft weights, us, vs); None weights mean constant 1
        edge_sets = {tuple(e) for e in edges.tolist()}

        def claim_intra(c):
            ids = intra_ids[c]
            nodes = sets[c]
            existing = [(int(edges[ei, 0]), int(edges[ei, 1])) for ei in ids]
            non_edges = [
                (int(a), int(b))
                for ai, a in enumerate(nodes)
                for b in nodes[ai + 1 :]
                if (int(a), int(b)) not in edge_sets
            ]
            n_neg = min(len(non_edges), int(round(self.neg_ratio * len(ids))))
            if n_neg > 0:
                pick = rng.choice(len(non_edges), size=n_neg, replace=False)
                sampled = [non_edges[int(i)] for i in np.sort(pick)]
            else:
                sampled = []
            cand = existing + sampled
            if not cand:
                return
            for ei in ids:
                claimed[ei] = True
            us = np.array([p[0] for p in cand])
            vs = np.array([p[1] for p in cand])
            feats = ad.concat(
                [ad.gather_rows(node_embs, us), ad.gather_rows(node_embs, vs)], axis=1
            )
            logits2 = self._head("intra", feats)
            soft = ad.sample_gumbel_softmax(logits2, tau, rng)
            hard = ad.straight_through_onehot(soft)
            groups.append((_column(hard, KEEP, 2), _column(soft, KEEP, 2), us, vs))

        def claim_inter(ci, cj):
            # ci is the driver; candidate rows are ordered (node in ci, node in cj)
            key = (min(ci, cj), max(ci, cj))
            ids = cross_ids.get(key, [])
            existing = []
            for ei in ids:
                u, v = int(edges[ei, 0]), int(edges[ei, 1])
                existing.append((u, v) if assign[u] == ci else (v, u))
            non_edges = [
                (int(a), int(b))
                for a in sets[ci]
                for b in sets[cj]
                if (min(int(a), int(b)), max(int(a), int(b))) not in edge_sets
            ]
            n_neg = min(len(non_edges), max(1, int(round(self.neg_ratio * len(ids)))))
            if n_neg > 0:
                pick = rng.choice(len(non_edges), size=n_neg, replace=False)
                sampled = [non_edges[int(i)] for i in np.sort(pick)]
            else:
                sampled = []
            cand = existing + sampled
            if not cand:
                return
            for ei in ids:
                claimed[ei] = True
            us = np.array([p[0] for p in cand])
            vs = np.array([p[1] for p in cand])
            feats = ad.concat(
                [
                    ad.gather_rows(node_embs, us),
                    ad.gather_rows(node_embs, vs),
                    _repeat_row(ad.gather_rows(sub_embs, [ci]), len(cand)),
                    _repeat_row(ad.gather_rows(sub_embs, [cj]), len(cand)),
                ],
                axis=1,
            )
            logits2 = self._head("inter", feats)
            soft = ad.sample_gumbel_softmax(logits2, tau, rng)
            hard = ad.straight_through_onehot(soft)
            groups.append((_column(hard, KEEP, 2), _column(soft, KEEP, 2), us, vs))

        cross_counts = {}
        for (a, b), ids in cross_ids.items():
            cross_counts.setdefault(a, {})[b] = len(ids)
            cross_counts.setdefault(b, {})[a] = len(ids)

        def partner_of(c):
            counts = cross_counts.get(c, {})
            if counts:
                best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
                return int(best[0])
            return min(j for j in range(k) if j != c)

        done_pairs = set()
        for c in range(k):
            if effective[c] == INTRA_EDGE:
                claim_intra(c)
            elif effective[c] == INTER_EDGE:
                p = partner_of(c)
                key = (min(c, p), max(c, p))
                if key in done_pairs:
                    continue
                # mutual selections collapse to a single pass driven by the lower id
                if effective[p] == INTER_EDGE and partner_of(p) == c:
                    done_pairs.add(key)
                claim_inter(c, p)

        untouched = np.flatnonzero(~claimed)
        if untouched.size:
            groups.append((None, None, edges[untouched, 0].copy(), edges[untouched, 1].copy()))

        # -- subgraph swap: rewire outside attachments ------------------
        unit = assign.astype(np.int64).copy()
        phi = np.arange(n, dtype=np.int64)
        for pi, (a, b) in enumerate(swap_pairs):
            unit[np.concatenate([sets[a], sets[b]])] = k + pi
            pair_phi = swap_node_map(graph, sets[a].tolist(), sets[b].tolist())
            changed = pair_phi != np.arange(n)
            phi[changed] = pair_phi[changed]
        if swap_pairs:
            mapped = []
            for hard_w, soft_w, us, vs in groups:
                cross_unit = unit[us] != unit[vs]
                us = np.where(cross_unit, phi[us], us)
                vs = np.where(cross_unit, phi[vs], vs)
                mapped.append((hard_w, soft_w, us, vs))
            groups = mapped

        # -- assemble the weighted adjacency ----------------------------
        if groups:
            hard_ws, soft_ws, us_all, vs_all = [], [], [], []
            for hard_w, soft_w, us, vs in groups:
                if hard_w is None:
                    hard_w = ad.constant(np.ones(len(us)))
                    soft_w = ad.constant(np.ones(len(us)))
                hard_ws.append(hard_w)
                soft_ws.append(soft_w)
                us_all.append(us)
                vs_all.append(vs)
            us_all = np.concatenate(us_all)
            vs_all = np.concatenate(vs_all)
            w_hard = ad.mul(
                ad.mul(ad.concat(hard_ws), ad.gather_rows(node_keep, us_all)),
                ad.gather_rows(node_keep, vs_all),
            )
            w_soft = ad.mul(
                ad.mul(ad.concat(soft_ws), ad.gather_rows(soft_node_keep, us_all)),
                ad.gather_rows(soft_node_keep, vs_all),
            )
            adjacency = ad.adjacency_from_edges(w_hard, us_all, vs_all, n)
            soft_adjacency = ad.adjacency_from_edges(w_soft, us_all, vs_all, n)
            surviving = np.flatnonzero(w_hard.data > 0.5)
            pairs = np.stack(
                [np.minimum(us_all, vs_all), np.maximum(us_all, vs_all)], axis=1
            )[surviving]
            order = np.lexsort((pairs[:, 1], pairs[:, 0]))
            edge_index = pairs[order]
            edge_weights = ad.gather_rows(w_hard, surviving[order])
        else:
            adjacency = ad.constant(np.zeros((n, n)))
            soft_adjacency = ad.constant(np.zeros((n, n)))
            edge_index = np.zeros((0, 2), dtype=np.int64)
            edge_weights = ad.constant(np.zeros(0))

        return AugmentedView(
            graph=graph,
            partition=partition,
            features=features,
            node_keep=node_keep,
            soft_node_keep=soft_node_keep,
            soft_feature_scale=soft_feat_scale,
            state=state,
            soft_state=soft_state,
            strategy_ids=strategy_ids,
            effective_strategies=effective,
            adjacency=adjacency,
            soft_adjacency=soft_adjacency,
            edge_index=edge_index,
            edge_weights=edge_weights,
        )

    def importance_summary(self, graph, partition):
        """Per-subgraph keep probabilities and strategy distributions (no sampling)."""
        sets = partition.subgraph_sets()
        node_embs = self.encoder.node_embeddings(graph.node_features, graph.adjacency())
        sub_embs = self.encoder.readout(node_embs, sets, self.config.subgraph_readout)
        strat = ad.softmax(self._head("select", sub_embs)).data
        out = []
        for c, nodes in enumerate(sets):
            rows = ad.gather_rows(node_embs, nodes)
            keep_p = ad.softmax(self._head("drop", rows)).data[:, KEEP]
            out.append(
                {
                    "subgraph": c,
                    "nodes": [int(v) for v in nodes],
                    "keep_probability": float(np.mean(keep_p)),
                    "strategy_distribution": [float(x) for x in strat[c]],
                }
            )
        return out
