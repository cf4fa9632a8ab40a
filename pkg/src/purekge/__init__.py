"""
Knowledge graph embeddings for drug repurposing.

The package trains link-prediction models (TransE, RotatE, RESCAL,
DistMult and ComplEx) on biomedical knowledge graphs, evaluates them with
the usual ranking metrics and ranks candidate drugs for a set of disease
targets.
"""

from purekge.compatibility import package_version
from purekge.evaluator import RankReport, Setting, SidePolicy, evaluate
from purekge.graph import FilterIndex, Vocabulary
from purekge.model import ModelKind, ModelParams, init_params, score
from purekge.trainer import TrainConfig, TrainReport, train
from purekge.typevars import RawTriple, Triple

__version__ = package_version("purekge")

__all__ = [
    "FilterIndex",
    "ModelKind",
    "ModelParams",
    "RankReport",
    "RawTriple",
    "Setting",
    "SidePolicy",
    "TrainConfig",
    "TrainReport",
    "Triple",
    "Vocabulary",
    "__version__",
    "evaluate",
    "init_params",
    "score",
    "train",
]
