"""Training loops: contrastive pre-training, semi-supervised fine-tuning.

One parameter store holds the encoder, both view generators, and (when
labels are in play) a linear classifier, so a single Adam step updates
everything the total objective touches.  Every random draw goes through
seeded substreams, which makes entire runs bit-reproducible; run reports
carry a content hash over everything except wall-clock timings.
"""

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .data import Dataset, iter_batches
from .encoder import READOUTS, EncoderConfig, GinEncoder, glorot
from .errors import (
    ContractError,
    DivergenceError,
    ParameterError,
    StratificationError,
)
from .losses import accuracy, cross_entropy, nt_xent, similarity_loss
from .partition import partition_dataset, partition_stats
from .viewgen import ViewGenerator

INIT_STREAM = 0x3A17
TRAIN_STREAM = 0x7E21
SPLIT_STREAM = 0x51A9
CHECKPOINT_FORMAT = "subgcl-checkpoint-v1"
PARTITION_ALGOS = ("louvain", "gn")
AUDIT_GROUPS = ("encoder", "select", "drop", "mask", "intra", "inter")


class Adam:
    """Adam over a list of autodiff Values (decoupled from any store)."""

    def __init__(self, values, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        if lr <= 0:
            raise ParameterError(f"learning rate must be > 0, got {lr}")
        b1, b2 = betas
        if not (0.0 <= b1 < 1.0 and 0.0 <= b2 < 1.0):
            raise ParameterError(f"betas must lie in [0, 1), got {betas}")
        if eps <= 0:
            raise ParameterError(f"eps must be > 0, got {eps}")
        self.values = list(values)
        self.lr = lr
        self.b1, self.b2 = b1, b2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(v.data) for v in self.values]
        self.v = [np.zeros_like(v.data) for v in self.values]

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.b1 ** self.t
        bc2 = 1.0 - self.b2 ** self.t
        for i, val in enumerate(self.values):
            g = val.grad if val.grad is not None else np.zeros_like(val.data)
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * g * g
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            val.data = val.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainConfig:
    """Flat bag of every knob a run needs; hashable for reproducibility."""

    epochs: int = 100
    batch_size: int = 8
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    tau_gumbel: float = 1.0
    tau_gumbel_final: float = None
    tau_ntxent: float = 0.2
    lambda_cl: float = 1.0
    lambda_sim: float = 0.5
    lambda_cls: float = 1.0
    seed: int = 0
    partition_algo: str = "louvain"
    resolution: float = 1.0
    hidden_dim: int = 32
    layers: int = 3
    projection_dim: int = 32
    graph_readout: str = "sum"
    subgraph_readout: str = "mean"
    share_encoder: bool = False
    neg_ratio: float = 1.0
    label_fraction: float = 0.1
    test_fraction: float = 0.2
    finetune_epochs: int = 50
    finetune_lr: float = 1e-3
    probe_folds: int = 10
    features: str = "auto"

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise ParameterError(f"batch_size must be >= 2, got {self.batch_size}")
        for name in ("lr", "finetune_lr", "tau_gumbel", "tau_ntxent", "adam_eps", "resolution"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.tau_gumbel_final is not None and self.tau_gumbel_final <= 0:
            raise ParameterError(f"tau_gumbel_final must be > 0, got {self.tau_gumbel_final}")
        for name in ("beta1", "beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ParameterError(f"{name} must lie in [0, 1), got {getattr(self, name)}")
        for name in ("lambda_cl", "lambda_sim", "lambda_cls", "neg_ratio"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.partition_algo not in PARTITION_ALGOS:
            raise ParameterError(
                f"partition_algo must be one of {PARTITION_ALGOS}, got {self.partition_algo!r}"
            )
        for name in ("hidden_dim", "layers", "projection_dim"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.graph_readout not in READOUTS or self.subgraph_readout not in READOUTS:
            raise ParameterError(
                f"readouts must be one of {READOUTS}, got "
                f"{self.graph_readout!r}/{self.subgraph_readout!r}"
            )
        if not 0.0 < self.label_fraction <= 1.0:
            raise ParameterError(f"label_fraction must lie in (0, 1], got {self.label_fraction}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ParameterError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.finetune_epochs < 0:
            raise ParameterError(f"finetune_epochs must be >= 0, got {self.finetune_epochs}")
        if self.probe_folds < 2:
            raise ParameterError(f"probe_folds must be >= 2, got {self.probe_folds}")
        if self.features not in ("auto", "constant", "degree"):
            raise ParameterError(f"unknown features mode {self.features!r}")

    def as_dict(self):
        return asdict(self)

    def content_hash(self):
        blob = json.dumps(self.as_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def gumbel_tau(self, epoch):
        """Temperature for a given epoch (linear anneal when a final is set)."""
        if self.tau_gumbel_final is None or self.epochs == 1:
            return self.tau_gumbel
        frac = epoch / (self.epochs - 1)
        return self.tau_gumbel + frac * (self.tau_gumbel_final - self.tau_gumbel)


@dataclass
class RunReport:
    """Everything a finished run reports; hashable minus wall-clock noise."""

    config: dict
    config_hash: str
    partition_summary: dict
    epoch_losses: list = field(default_factory=list)
    gradient_audit: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)
    final: dict = field(default_factory=dict)

    def content_hash(self):
        payload = {
            "config": self.config,
            "config_hash": self.config_hash,
            "partition_summary": self.partition_summary,
            "epoch_losses": self.epoch_losses,
            "gradient_audit": self.gradient_audit,
            "final": self.final,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def as_dict(self):
        out = asdict(self)
        out["content_hash"] = self.content_hash()
        return out

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


class ContrastiveModel:
    """Encoder + two view generators (+ optional classifier) on one store."""

    def __init__(self, config: TrainConfig, input_dim, num_classes=None):
        self.config = config
        self.input_dim = int(input_dim)
        self.num_classes = None if num_classes is None else int(num_classes)
        self.encoder_config = EncoderConfig(
            input_dim=self.input_dim,
            hidden_dim=config.hidden_dim,
            layers=config.layers,
            projection_dim=config.projection_dim,
            graph_readout=config.graph_readout,
            subgraph_readout=config.subgraph_readout,
        )
        self.store = ad.ParameterStore()
        rng = np.random.default_rng(np.random.SeedSequence([INIT_STREAM, config.seed]))
        self.encoder = GinEncoder(self.encoder_config, self.store, "encoder", rng)
        shared = self.encoder if config.share_encoder else None
        self.gen1 = ViewGenerator(
            self.encoder_config, self.store, "gen1", rng, encoder=shared,
            neg_ratio=config.neg_ratio,
        )
        self.gen2 = ViewGenerator(
            self.encoder_config, self.store, "gen2", rng, encoder=shared,
            neg_ratio=config.neg_ratio,
        )
        if self.num_classes is not None:
            self.cls_w = self.store.add("cls.w", glorot(rng, config.hidden_dim, self.num_classes))
            self.cls_b = self.store.add("cls.b", np.zeros(self.num_classes))

    def classify(self, graph_emb):
        """Class logits from a (B, hidden) pre-projection embedding Value."""
        if self.num_classes is None:
            raise ContractError("model was built without a classifier head")
        return ad.add_bias(ad.matmul(graph_emb, self.cls_w), self.cls_b)

    def embed_dataset(self, dataset):
        """Detached pre-projection graph embeddings, one row per graph."""
        rows = []
        for graph in dataset.graphs:
            embs = self.encoder.encode_graph(graph)
            rows.append(embs.graph.data[0].copy())
        return np.stack(rows)

    def audit_groups(self):
        groups = {"encoder": list(self.encoder.parameter_values())}
        for name in ("select", "drop", "mask", "intra", "inter"):
            vals = list(self.gen1.heads[name]) + list(self.gen2.heads[name])
            groups[name] = vals
        return groups


def _view_rng(seed, epoch, graph_idx, view_id):
    return np.random.default_rng(
        np.random.SeedSequence([TRAIN_STREAM, seed, epoch, int(graph_idx), view_id])
    )


def _check_finite(value, epoch):
    if not np.all(np.isfinite(value.data)):
        raise DivergenceError(f"loss became non-finite at epoch {epoch}")


def _contrastive_batch(model, graphs, global_indices, partitions, tau, cfg, epoch):
    """Interleaved projections and per-graph views for one batch.

    ``global_indices`` address the full corpus (for partitions and view rng
    substreams) even when the batch came from a subset dataset.
    """
    views1, views2, rows = [], [], []
    for graph, idx in zip(graphs, global_indices):
        part = partitions[idx]
        v1 = model.gen1.generate(graph, part, tau, _view_rng(cfg.seed, epoch, idx, 1))
        v2 = model.gen2.generate(graph, part, tau, _view_rng(cfg.seed, epoch, idx, 2))
        e1 = model.encoder.encode(v1.features, v1.adjacency)
        e2 = model.encoder.encode(v2.features, v2.adjacency)
        rows.append(e1.projected)
        rows.append(e2.projected)
        views1.append(v1)
        views2.append(v2)
    z = ad.concat(rows, axis=0)
    loss_cl = nt_xent(z, cfg.tau_ntxent)
    sims = [similarity_loss(a, b) for a, b in zip(views1, views2)]
    loss_sim = ad.reduce_mean(ad.concat([ad.reshape(s, (1,)) for s in sims]))
    return loss_cl, loss_sim, views1, views2


def _audit_epoch(groups, seen):
    for name, values in groups.items():
        if any(v.grad is not None and np.any(v.grad != 0.0) for v in values):
            seen[name] = True


def train_unsupervised(dataset, config, partitions=None):
    """Contrastive pre-training over an unlabeled corpus.

    Returns (model, report).  Raises DivergenceError if the objective goes
    non-finite; every epoch logs losses and a per-head gradient audit.
    """
    if len(dataset.graphs) < 2:
        raise ParameterError("need at least two graphs to form a contrastive batch")
    if partitions is None:
        partitions = partition_dataset(
            dataset, config.partition_algo, seed=config.seed, resolution=config.resolution
        )
    model = ContrastiveModel(config, dataset.feature_dim)
    opt = Adam(
        model.store.values(), lr=config.lr,
        betas=(config.beta1, config.beta2), eps=config.adam_eps,
    )
    report = RunReport(
        config=config.as_dict(),
        config_hash=config.content_hash(),
        partition_summary=partition_stats(dataset, partitions),
    )
    groups = model.audit_groups()
    for epoch in range(config.epochs):
        started = time.perf_counter()
        tau = config.gumbel_tau(epoch)
        batch_rng = np.random.default_rng(
            np.random.SeedSequence([TRAIN_STREAM, config.seed, epoch])
        )
        totals = {"total": 0.0, "contrastive": 0.0, "similarity": 0.0}
        count = 0
        seen = {name: False for name in AUDIT_GROUPS}
        for batch in iter_batches(dataset, config.batch_size, batch_rng):
            loss_cl, loss_sim, _, _ = _contrastive_batch(
                model, batch.graphs, batch.indices, partitions, tau, config, epoch
            )
            total = ad.add(loss_cl * config.lambda_cl, loss_sim * config.lambda_sim)
            _check_finite(total, epoch)
            model.store.zero_grad()
            ad.backward(total)
            _audit_epoch(groups, seen)
            opt.step()
            b = len(batch.graphs)
            totals["total"] += float(total.data) * b
            totals["contrastive"] += float(loss_cl.data) * b
            totals["similarity"] += float(loss_sim.data) * b
            count += b
        report.epoch_losses.append(
            {"epoch": epoch, **{k: v / count for k, v in totals.items()}}
        )
        report.gradient_audit.append(dict(seen))
        report.epoch_seconds.append(time.perf_counter() - started)
    report.final = {"epochs_run": config.epochs, "num_graphs": len(dataset.graphs)}
    return model, report


def stratified_split(labels, test_fraction, seed):
    """Per-class shuffled split into (train indices, test indices)."""
    labels = np.asarray(labels)
    if np.any(labels < 0):
        raise StratificationError("all graphs must carry labels to stratify")
    rng = np.random.default_rng(np.random.SeedSequence([SPLIT_STREAM, seed]))
    train_idx, test_idx = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(members.size)]
        n_test = int(round(test_fraction * members.size))
        n_test = min(max(n_test, 1), members.size - 1)
        test_idx.extend(members[:n_test])
        train_idx.extend(members[n_test:])
    if not train_idx or not test_idx:
        raise StratificationError(
            f"cannot split {labels.size} examples with test_fraction={test_fraction}"
        )
    return np.sort(np.array(train_idx)), np.sort(np.array(test_idx))


def stratified_label_subset(labels, indices, fraction, seed):
    """Pick a labeled subset of ``indices``, keeping every class represented."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(np.random.SeedSequence([SPLIT_STREAM, seed, 1]))
    chosen = []
    for cls in np.unique(labels[indices]):
        members = indices[labels[indices] == cls]
        n_pick = max(1, int(round(fraction * members.size)))
        members = members[rng.permutation(members.size)]
        chosen.extend(members[:n_pick])
    return np.sort(np.array(chosen))


def _supervised_pretrain_stage(model, train_ds, index_map, partitions, labels,
                               labeled_set, config, report, groups):
    """Stage 1: contrastive + similarity epochs with a labeled CE term.

    ``index_map[i]`` is the corpus-level index of ``train_ds.graphs[i]``, so
    partitions, view seeds and label lookups stay tied to the original graph
    identity even when training on a subset.
    """
    opt = Adam(
        model.store.values(), lr=config.lr,
        betas=(config.beta1, config.beta2), eps=config.adam_eps,
    )
    for epoch in range(config.epochs):
        started = time.perf_counter()
        tau = config.gumbel_tau(epoch)
        batch_rng = np.random.default_rng(
            np.random.SeedSequence([TRAIN_STREAM, config.seed, epoch])
        )
        totals = {"total": 0.0, "contrastive": 0.0, "similarity": 0.0,
                  "classification": 0.0}
        count = 0
        seen = {name: False for name in AUDIT_GROUPS}
        for batch in iter_batches(train_ds, config.batch_size, batch_rng):
            orig_idx = [int(index_map[i]) for i in batch.indices]
            loss_cl, loss_sim, views1, views2 = _contrastive_batch(
                model, batch.graphs, orig_idx, partitions, tau, config, epoch
            )
            total = ad.add(loss_cl * config.lambda_cl, loss_sim * config.lambda_sim)
            ce_value = 0.0
            lab_rows, lab_targets = _labeled_logit_rows(
                model, batch, views1, views2, orig_idx, labeled_set, labels
            )
            if lab_rows is not None:
                loss_ce = cross_entropy(model.classify(lab_rows), lab_targets)
                total = ad.add(total, loss_ce * config.lambda_cls)
                ce_value = float(loss_ce.data)
            _check_finite(total, epoch)
            model.store.zero_grad()
            ad.backward(total)
            _audit_epoch(groups, seen)
            opt.step()
            b = len(batch.graphs)
            totals["total"] += float(total.data) * b
            totals["contrastive"] += float(loss_cl.data) * b
            totals["similarity"] += float(loss_sim.data) * b
            totals["classification"] += ce_value * b
            count += b
        report.epoch_losses.append(
            {"epoch": epoch, **{k: v / count for k, v in totals.items()}}
        )
        report.gradient_audit.append(dict(seen))
        report.epoch_seconds.append(time.perf_counter() - started)


def _finetune_stage(model, graphs, targets, config, report, epoch_offset=0):
    """Stage 2: full-batch cross-entropy fine-tuning of encoder + classifier."""
    tune_values = model.encoder.parameter_values() + [model.cls_w, model.cls_b]
    tune_opt = Adam(
        tune_values, lr=config.finetune_lr,
        betas=(config.beta1, config.beta2), eps=config.adam_eps,
    )
    for epoch in range(config.finetune_epochs):
        started = time.perf_counter()
        rows = ad.concat(
            [model.encoder.encode_graph(g).graph for g in graphs], axis=0
        )
        loss = cross_entropy(model.classify(rows), targets)
        _check_finite(loss, epoch)
        model.store.zero_grad()
        ad.backward(loss)
        tune_opt.step()
        report.epoch_losses.append(
            {"epoch": epoch_offset + epoch, "finetune": float(loss.data)}
        )
        report.epoch_seconds.append(time.perf_counter() - started)


def train_semisupervised(dataset, config, pretrain=True):
    """Two-stage flow: contrastive+supervised pre-training, then fine-tuning.

    Stage 1 adds a classification term over the labeled subset (original
    graph plus both augmented views); stage 2 fine-tunes encoder and
    classifier with plain cross entropy on the labeled subset only.  With
    ``pretrain=False`` stage 1 is skipped, which is the from-scratch
    baseline.
    """
    labels = dataset.labels()
    if np.any(labels < 0):
        raise StratificationError("semi-supervised training requires a fully labeled corpus")
    train_idx, test_idx = stratified_split(labels, config.test_fraction, config.seed)
    labeled_idx = stratified_label_subset(labels, train_idx, config.label_fraction, config.seed)
    labeled_set = set(int(i) for i in labeled_idx)

    partitions = partition_dataset(
        dataset, config.partition_algo, seed=config.seed, resolution=config.resolution
    )
    num_classes = dataset.num_classes
    model = ContrastiveModel(config, dataset.feature_dim, num_classes=num_classes)
    report = RunReport(
        config=config.as_dict(),
        config_hash=config.content_hash(),
        partition_summary=partition_stats(dataset, partitions),
    )
    groups = model.audit_groups()
    train_ds = Dataset(dataset.name + ":train", [dataset.graphs[i] for i in train_idx])

    if pretrain:
        _supervised_pretrain_stage(
            model, train_ds, train_idx, partitions, labels, labeled_set,
            config, report, groups,
        )
    lab_graphs = [dataset.graphs[i] for i in labeled_idx]
    lab_targets = labels[labeled_idx]
    _finetune_stage(model, lab_graphs, lab_targets, config, report,
                    epoch_offset=config.epochs if pretrain else 0)

    test_graphs = [dataset.graphs[i] for i in test_idx]
    test_logits = np.stack(
        [model.classify(model.encoder.encode_graph(g).graph).data[0] for g in test_graphs]
    )
    train_logits = np.stack(
        [model.classify(model.encoder.encode_graph(g).graph).data[0] for g in lab_graphs]
    )
    report.final = {
        "pretrained": bool(pretrain),
        "labeled_count": int(labeled_idx.size),
        "test_count": int(test_idx.size),
        "test_accuracy": accuracy(test_logits, labels[test_idx]),
        "labeled_accuracy": accuracy(train_logits, lab_targets),
    }
    return model, report


def _labeled_logit_rows(model, batch, views1, views2, orig_idx, labeled_set, labels):
    """Embedding rows (original + both views) for the labeled graphs in a batch."""
    rows, targets = [], []
    for pos, gi in enumerate(orig_idx):
        if gi not in labeled_set:
            continue
        graph = batch.graphs[pos]
        v1, v2 = views1[pos], views2[pos]
        rows.append(model.encoder.encode_graph(graph).graph)
        rows.append(model.encoder.encode(v1.features, v1.adjacency).graph)
        rows.append(model.encoder.encode(v2.features, v2.adjacency).graph)
        targets.extend([int(labels[gi])] * 3)
    if not rows:
        return None, None
    return ad.concat(rows, axis=0), np.array(targets)


def linear_probe_eval(embeddings, labels, folds=10, seed=0):
    """Cross-validated logistic-regression probe on frozen embeddings."""
    from sklearn.linear_model import LogisticRegression
    from sklearn.model_selection import StratifiedKFold

    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if embeddings.ndim != 2 or embeddings.shape[0] != labels.shape[0]:
        raise ParameterError(
            f"embeddings {embeddings.shape} do not match {labels.shape[0]} labels"
        )
    counts = np.bincount(labels)
    smallest = counts[counts > 0].min()
    n_splits = int(min(folds, smallest))
    if n_splits < 2:
        raise StratificationError(
            f"smallest class has {smallest} members; cannot build 2 folds"
        )
    splitter = StratifiedKFold(n_splits=n_splits, shuffle=True, random_state=seed)
    scores = []
    for fold_train, fold_test in splitter.split(embeddings, labels):
        clf = LogisticRegression(max_iter=2000)
        clf.fit(embeddings[fold_train], labels[fold_train])
        scores.append(float(clf.score(embeddings[fold_test], labels[fold_test])))
    return {
        "mean_accuracy": float(np.mean(scores)),
        "std_accuracy": float(np.std(scores)),
        "fold_accuracies": scores,
        "folds": n_splits,
    }


def save_checkpoint(path, model, report=None):
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config": model.config.as_dict(),
        "config_hash": model.config.content_hash(),
        "input_dim": model.input_dim,
        "num_classes": model.num_classes,
        "params": model.store.state_dict(),
    }
    if report is not None:
        payload["report_hash"] = report.content_hash()
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_checkpoint(path):
    """Rebuild a ContrastiveModel from a checkpoint file."""
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ContractError(
            f"unrecognised checkpoint format {payload.get('format')!r}"
        )
    config = TrainConfig(**payload["config"])
    model = ContrastiveModel(config, payload["input_dim"], payload["num_classes"])
    model.store.load_state_dict(payload["params"])
    return model
