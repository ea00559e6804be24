"""Augmentation-free graph contrastive learning with two cooperating encoders.

A 2-layer GCN and a kernelized linear-attention encoder are trained
jointly on an unlabeled graph; trustworthy positive pairs are mined as the
intersection of three k-NN views (both embedding spaces plus hop
distance), and the fused embeddings are evaluated with a linear probe.
"""

from .graphdata import Graph, SplitSet, generate_sbm, load_graph, normalize_adjacency
from .numcore import Tape, Tensor, backward
from .trainer import TrainConfig, TrainReport, combine_embeddings, train

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "SplitSet",
    "Tape",
    "Tensor",
    "TrainConfig",
    "TrainReport",
    "backward",
    "combine_embeddings",
    "generate_sbm",
    "load_graph",
    "normalize_adjacency",
    "train",
    "__version__",
]
