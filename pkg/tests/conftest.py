from pathlib import Path
from typing import List, Tuple

import numpy as np
import pytest

from purekge import graph
from purekge.graph import Vocabulary
from purekge.model import ModelKind, ModelParams
from purekge.typevars import Triple

from . import data_file

ALL_KINDS = list(ModelKind)


def load_toy(name: str) -> Tuple[Vocabulary, List[Triple]]:
    with open(data_file(name), "rb") as infile:
        raw = graph.parse_triples(infile, name)
    vocab = graph.build_vocab(raw)
    return vocab, graph.encode(raw, vocab)


def planted_transe(
    entity_values: List[float], relation_values: List[float]
) -> ModelParams:
    """
    One-dimensional TransE-L2 parameters with hand-picked values
    """
    return ModelParams(
        ModelKind.TRANSE_L2,
        1,
        np.asarray(entity_values, dtype=np.float64).reshape(-1, 1),
        np.asarray(relation_values, dtype=np.float64).reshape(-1, 1),
    )


@pytest.fixture
def toy_pairs() -> Tuple[Vocabulary, List[Triple]]:
    """
    24 entities, ``binds`` maps entity 2i to 2i+1, ``bound_by`` the reverse
    """
    return load_toy("toy_pairs.tsv")


@pytest.fixture
def toy_symmetric() -> Tuple[Vocabulary, List[Triple]]:
    """
    8 entities, 2 symmetric relations, 16 triples
    """
    return load_toy("toy_symmetric.tsv")


@pytest.fixture
def splits_dir(tmp_path: Path) -> Path:
    """
    The toy pair graph written as an ingested split directory
    """
    with open(data_file("toy_pairs.tsv"), "rb") as infile:
        raw = graph.parse_triples(infile)
    vocab = graph.build_vocab(raw)
    split = graph.split_triples(graph.encode(raw, vocab), (0.8, 0.1, 0.1), 0)
    target = tmp_path / "splits"
    target.mkdir()
    graph.write_vocab(target, vocab)
    for name, part in (
        ("train.tsv", split.train),
        ("valid.tsv", split.valid),
        ("test.tsv", split.test),
    ):
        graph.write_triples(target / name, graph.decode(part, vocab))
    return target
