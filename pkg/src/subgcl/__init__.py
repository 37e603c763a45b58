"""Subgraph-level learnable augmentation for graph contrastive learning.

The package trains graph encoders with a contrastive objective whose
augmented views are produced per subgraph by a learned, differentiable view
generator: graphs are partitioned into communities, each community samples an
augmentation strategy from a learned policy, and the resulting views stay
connected to the policy parameters through straight-through gradients.
"""

from .data import Dataset, Graph, load_tudataset, make_synthetic
from .encoder import EncoderConfig, GinEncoder
from .errors import (
    ContractError,
    DimensionError,
    DivergenceError,
    DomainError,
    IngestionError,
    ParameterError,
    StratificationError,
)
from .estimators import (
    CommunityPartitioner,
    GraphContrastiveEmbedder,
    SemiSupervisedGraphClassifier,
)
from .losses import cross_entropy, nt_xent, similarity_loss
from .partition import Partition, girvan_newman, louvain, partition_dataset
from .train import (
    ContrastiveModel,
    RunReport,
    TrainConfig,
    linear_probe_eval,
    load_checkpoint,
    save_checkpoint,
    train_semisupervised,
    train_unsupervised,
)
from .viewgen import AugmentedView, ViewGenerator

__version__ = "0.1.0"

__all__ = [
    "AugmentedView",
    "CommunityPartitioner",
    "ContractError",
    "ContrastiveModel",
    "Dataset",
    "DimensionError",
    "DivergenceError",
    "DomainError",
    "EncoderConfig",
    "GinEncoder",
    "Graph",
    "GraphContrastiveEmbedder",
    "IngestionError",
    "ParameterError",
    "Partition",
    "RunReport",
    "SemiSupervisedGraphClassifier",
    "StratificationError",
    "TrainConfig",
    "ViewGenerator",
    "cross_entropy",
    "girvan_newman",
    "linear_probe_eval",
    "load_checkpoint",
    "load_tudataset",
    "louvain",
    "make_synthetic",
    "nt_xent",
    "partition_dataset",
    "save_checkpoint",
    "similarity_loss",
    "train_semisupervised",
    "train_unsupervised",
]
