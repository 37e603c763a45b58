"""Scikit-learn style facade over the partition / embed / classify pipeline.

Three estimators wrap the functional core so the package plugs into
sklearn pipelines, grid search and ``clone``:

* ``CommunityPartitioner``    -- transformer: graphs -> partitions
* ``GraphContrastiveEmbedder`` -- transformer: graphs -> embedding matrix
* ``SemiSupervisedGraphClassifier`` -- classifier with ``y == -1`` marking
  unlabeled graphs

All of them accept either a ``Dataset`` or any sequence of ``Graph``
objects as ``X``.  Hyperparameters are stored verbatim in ``__init__`` (the
sklearn contract for ``get_params``/``clone``) and validated at fit time.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .data import Dataset, Graph
from .errors import DimensionError, IngestionError, StratificationError
from .partition import partition_dataset, partition_stats
from .train import (
    ContrastiveModel,
    RunReport,
    TrainConfig,
    _finetune_stage,
    _supervised_pretrain_stage,
    train_unsupervised,
)


def _as_dataset(X, name="corpus"):
    """Coerce a Dataset or sequence of graphs into a Dataset."""
    if isinstance(X, Dataset):
        return X
    graphs = list(X)
    for i, g in enumerate(graphs):
        if not isinstance(g, Graph):
            raise IngestionError(f"X[{i}] is {type(g).__name__}, expected Graph")
    return Dataset(name, graphs)


def _check_fitted(estimator, attr):
    if not hasattr(estimator, attr):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit first"
        )


class CommunityPartitioner(BaseEstimator, TransformerMixin):
    """Transformer mapping a corpus of graphs to per-graph partitions.

    ``transform`` reproduces exactly what the training loops compute
    internally (same per-graph seed substreams), so partitions obtained
    here can be fed straight into ``train_unsupervised``.
    """

    def __init__(self, algo="louvain", seed=0, resolution=1.0):
        self.algo = algo
        self.seed = seed
        self.resolution = resolution

    def fit(self, X, y=None):
        _as_dataset(X)  # validate shape of input, nothing to learn
        return self

    def transform(self, X):
        ds = _as_dataset(X)
        return partition_dataset(
            ds, self.algo, seed=self.seed, resolution=self.resolution
        )

    def summary(self, X):
        """Corpus-level partition statistics (counts, sizes, cut edges)."""
        ds = _as_dataset(X)
        return partition_stats(ds, self.transform(ds))


class GraphContrastiveEmbedder(BaseEstimator, TransformerMixin):
    """Transformer learning graph embeddings by contrastive pre-training.

    ``fit`` runs the full unsupervised loop (partition, learned views,
    NT-Xent + view-similarity objective); ``transform`` returns one
    pre-projection embedding row per graph.
    """

    def __init__(self, epochs=100, batch_size=8, lr=1e-3, beta1=0.9,
                 beta2=0.999, adam_eps=1e-8, tau_gumbel=1.0,
                 tau_gumbel_final=None, tau_ntxent=0.2, lambda_cl=1.0,
                 lambda_sim=0.5, seed=0, partition_algo="louvain",
                 resolution=1.0, hidden_dim=32, layers=3, projection_dim=32,
                 graph_readout="sum", subgraph_readout="mean",
                 share_encoder=False, neg_ratio=1.0):
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.tau_gumbel = tau_gumbel
        self.tau_gumbel_final = tau_gumbel_final
        self.tau_ntxent = tau_ntxent
        self.lambda_cl = lambda_cl
        self.lambda_sim = lambda_sim
        self.seed = seed
        self.partition_algo = partition_algo
        self.resolution = resolution
        self.hidden_dim = hidden_dim
        self.layers = layers
        self.projection_dim = projection_dim
        self.graph_readout = graph_readout
        self.subgraph_readout = subgraph_readout
        self.share_encoder = share_encoder
        self.neg_ratio = neg_ratio

    def _config(self):
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            adam_eps=self.adam_eps,
            tau_gumbel=self.tau_gumbel,
            tau_gumbel_final=self.tau_gumbel_final,
            tau_ntxent=self.tau_ntxent,
            lambda_cl=self.lambda_cl,
            lambda_sim=self.lambda_sim,
            seed=self.seed,
            partition_algo=self.partition_algo,
            resolution=self.resolution,
            hidden_dim=self.hidden_dim,
            layers=self.layers,
            projection_dim=self.projection_dim,
            graph_readout=self.graph_readout,
            subgraph_readout=self.subgraph_readout,
            share_encoder=self.share_encoder,
            neg_ratio=self.neg_ratio,
        )

    def fit(self, X, y=None):
        ds = _as_dataset(X)
        config = self._config()
        self.model_, self.report_ = train_unsupervised(ds, config)
        self.input_dim_ = ds.feature_dim
        return self

    def transform(self, X):
        _check_fitted(self, "model_")
        ds = _as_dataset(X)
        if ds.feature_dim != self.input_dim_:
            raise DimensionError(
                f"fitted on {self.input_dim_}-dim features, got {ds.feature_dim}"
            )
        return self.model_.embed_dataset(ds)


class SemiSupervisedGraphClassifier(BaseEstimator, ClassifierMixin):
    """Graph classifier trained from a partially labeled corpus.

    ``y`` holds one integer label per graph with ``-1`` meaning unlabeled.
    Stage 1 (optional, ``pretrain``) optimizes the contrastive objective over
    the *whole* corpus plus a cross-entropy term over the labeled graphs and
    their augmented views; stage 2 fine-tunes encoder and classifier head on
    the labeled graphs alone.
    """

    def __init__(self, epochs=100, batch_size=8, lr=1e-3, beta1=0.9,
                 beta2=0.999, adam_eps=1e-8, tau_gumbel=1.0,
                 tau_gumbel_final=None, tau_ntxent=0.2, lambda_cl=1.0,
                 lambda_sim=0.5, lambda_cls=1.0, seed=0,
                 partition_algo="louvain", resolution=1.0, hidden_dim=32,
                 layers=3, projection_dim=32, graph_readout="sum",
                 subgraph_readout="mean", share_encoder=False, neg_ratio=1.0,
                 finetune_epochs=50, finetune_lr=1e-3, pretrain=True):
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.tau_gumbel = tau_gumbel
        self.tau_gumbel_final = tau_gumbel_final
        self.tau_ntxent = tau_ntxent
        self.lambda_cl = lambda_cl
        self.lambda_sim = lambda_sim
        self.lambda_cls = lambda_cls
        self.seed = seed
        self.partition_algo = partition_algo
        self.resolution = resolution
        self.hidden_dim = hidden_dim
        self.layers = layers
        self.projection_dim = projection_dim
        self.graph_readout = graph_readout
        self.subgraph_readout = subgraph_readout
        self.share_encoder = share_encoder
        self.neg_ratio = neg_ratio
        self.finetune_epochs = finetune_epochs
        self.finetune_lr = finetune_lr
        self.pretrain = pretrain

    def _config(self):
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            adam_eps=self.adam_eps,
            tau_gumbel=self.tau_gumbel,
            tau_gumbel_final=self.tau_gumbel_final,
            tau_ntxent=self.tau_ntxent,
            lambda_cl=self.lambda_cl,
            lambda_sim=self.lambda_sim,
            lambda_cls=self.lambda_cls,
            seed=self.seed,
            partition_algo=self.partition_algo,
            resolution=self.resolution,
            hidden_dim=self.hidden_dim,
            layers=self.layers,
            projection_dim=self.projection_dim,
            graph_readout=self.graph_readout,
            subgraph_readout=self.subgraph_readout,
            share_encoder=self.share_encoder,
            neg_ratio=self.neg_ratio,
            finetune_epochs=self.finetune_epochs,
            finetune_lr=self.finetune_lr,
        )

    def fit(self, X, y):
        ds = _as_dataset(X)
        y = np.asarray(y, dtype=np.int64)
        if y.ndim != 1 or y.size != len(ds.graphs):
            raise DimensionError(
                f"y has shape {y.shape}, expected ({len(ds.graphs)},)"
            )
        labeled_idx = np.flatnonzero(y >= 0)
        if labeled_idx.size == 0:
            raise StratificationError("no labeled graphs (every y is -1)")
        self.classes_ = np.unique(y[labeled_idx])
        if self.classes_.size < 2:
            raise StratificationError(
                f"need at least two labeled classes, got {self.classes_.size}"
            )
        remap = {int(c): i for i, c in enumerate(self.classes_)}
        internal = np.array(
            [remap[int(v)] if v >= 0 else -1 for v in y], dtype=np.int64
        )

        config = self._config()
        partitions = partition_dataset(
            ds, config.partition_algo, seed=config.seed,
            resolution=config.resolution,
        )
        model = ContrastiveModel(config, ds.feature_dim,
                                 num_classes=int(self.classes_.size))
        report = RunReport(
            config=config.as_dict(),
            config_hash=config.content_hash(),
            partition_summary=partition_stats(ds, partitions),
        )
        if self.pretrain:
            _supervised_pretrain_stage(
                model, ds, np.arange(len(ds.graphs)), partitions, internal,
                set(int(i) for i in labeled_idx), config, report,
                model.audit_groups(),
            )
        _finetune_stage(
            model, [ds.graphs[i] for i in labeled_idx], internal[labeled_idx],
            config, report,
            epoch_offset=config.epochs if self.pretrain else 0,
        )
        report.final = {
            "pretrained": bool(self.pretrain),
            "labeled_count": int(labeled_idx.size),
            "num_classes": int(self.classes_.size),
        }
        self.model_ = model
        self.report_ = report
        self.input_dim_ = ds.feature_dim
        return self

    def decision_function(self, X):
        """Raw class logits, one row per graph."""
        _check_fitted(self, "model_")
        ds = _as_dataset(X)
        if ds.feature_dim != self.input_dim_:
            raise DimensionError(
                f"fitted on {self.input_dim_}-dim features, got {ds.feature_dim}"
            )
        rows = [
            self.model_.classify(self.model_.encoder.encode_graph(g).graph).data[0]
            for g in ds.graphs
        ]
        return np.stack(rows)

    def predict(self, X):
        logits = self.decision_function(X)
        return self.classes_[np.argmax(logits, axis=1)]

    def predict_proba(self, X):
        logits = self.decision_function(X)
        shifted = logits - logits.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        return expd / expd.sum(axis=1, keepdims=True)
