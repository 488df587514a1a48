"""Tensor-decomposition knowledge graph embeddings with in-batch contrastive training."""

from .contrastive import CLConfig
from .data import TripleStore, add_reciprocals, load_tsv
from .kernels import BACKEND
from .model import ModelParams, init_params, score_all_tails, score_triple

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CLConfig",
    "ModelParams",
    "TripleStore",
    "add_reciprocals",
    "init_params",
    "load_tsv",
    "score_all_tails",
    "score_triple",
]
