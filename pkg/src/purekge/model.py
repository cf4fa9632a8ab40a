"""
Learnable parameters, scores and analytic gradients.

The actual scoring functions live in plugin modules (see
:py:mod:`purekge.plugins.models`). This module owns the parameter arrays
and turns the plugin partials into logistic-loss gradients:

    loss(h, r, t, y) = log(1 + exp(-y * score(h, r, t)))

Every function here is pure. Mutation of parameters happens only in
:py:mod:`purekge.optim`.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Generator, Tuple

import numpy as np

from purekge.exc import ConfigError
from purekge.plugins.models import ScoringFunction
from purekge.plugins.models import create as create_scorer
from purekge.plugins.models import plugin_module
from purekge.typevars import FloatArray, IdArray, Triple
from purekge.util import array_checksum

LOG = logging.getLogger(__name__)


class ModelKind(str, Enum):
    """
    The supported scoring-function models.

    The values are the plugin identifiers, they are also the names used in
    configuration files.
    """

    TRANSE_L1 = "TransE_l1"
    TRANSE_L2 = "TransE_l2"
    ROTATE = "RotatE"
    RESCAL = "RESCAL"
    DISTMULT = "DistMult"
    COMPLEX = "ComplEx"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        """
        Look up a kind by name, ignoring case

        >>> ModelKind.parse("transe_L2")
        <ModelKind.TRANSE_L2: 'TransE_l2'>
        """
        wanted = name.strip().lower()
        for kind in cls:
            if kind.value.lower() == wanted:
                return kind
        known = ", ".join(kind.value for kind in cls)
        raise ConfigError(f"Unknown model {name!r}. Known models: {known}")

    @property
    def code(self) -> int:
        """
        The integer identifying this kind inside checkpoint headers
        """
        return int(plugin_module(self.value).CODE)

    @classmethod
    def from_code(cls, code: int) -> "ModelKind":
        """
        Inverse of :py:attr:`code`
        """
        for kind in cls:
            if kind.code == code:
                return kind
        raise ValueError(f"No model kind with code {code!r}")


@lru_cache(maxsize=None)
def scoring_function(kind: ModelKind) -> ScoringFunction:
    """
    Return the (shared, stateless) scoring function for *kind*
    """
    return create_scorer(ModelKind(kind).value)


class RowKind(str, Enum):
    """
    Which parameter table a gradient row belongs to
    """

    ENTITY = "entity"
    RELATION = "relation"


@dataclass
class ModelParams:
    """
    The learnable parameters of one model.

    Row widths depend on the kind: complex models store ``2 * dim``
    interleaved values per entity, RESCAL stores a ``dim * dim`` matrix per
    relation and RotatE stores ``dim`` phases per relation.
    """

    kind: ModelKind
    dim: int
    entity_emb: FloatArray
    relation_emb: FloatArray

    @property
    def n_entities(self) -> int:
        return int(self.entity_emb.shape[0])

    @property
    def n_relations(self) -> int:
        return int(self.relation_emb.shape[0])

    @property
    def scorer(self) -> ScoringFunction:
        return scoring_function(self.kind)

    def copy(self) -> "ModelParams":
        """
        Return a deep copy which shares no array memory with this instance
        """
        return ModelParams(
            self.kind,
            self.dim,
            self.entity_emb.copy(),
            self.relation_emb.copy(),
        )

    def checksum(self) -> str:
        """
        Return a SHA-256 digest over both parameter tables
        """
        return array_checksum(self.entity_emb, self.relation_emb)

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.entity_emb).all()
            and np.isfinite(self.relation_emb).all()
        )


def _merge_rows(
    ids: IdArray, rows: FloatArray, width: int
) -> Tuple[IdArray, FloatArray]:
    if ids.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, width))
    unique, inverse = np.unique(ids, return_inverse=True)
    merged = np.zeros((unique.size, width))
    np.add.at(merged, inverse.reshape(-1), rows)
    return unique.astype(np.int64), merged


@dataclass(frozen=True)
class SparseGrad:
    """
    Gradient rows for the parameters touched by some triples.

    Ids are unique within each table: rows for a repeated id (for example a
    self-loop with ``h == t``) are summed when the gradient is built.
    """

    entity_ids: IdArray
    entity_rows: FloatArray
    relation_ids: IdArray
    relation_rows: FloatArray = field(repr=False)

    @staticmethod
    def accumulate(
        triples: IdArray,
        d_head: FloatArray,
        d_relation: FloatArray,
        d_tail: FloatArray,
    ) -> "SparseGrad":
        """
        Sum per-triple gradient rows into one row per touched id.

        :param triples: ``(B, 3)`` id array
        :param d_head: ``(B, entity width)`` gradients for the head rows
        :param d_relation: ``(B, relation width)`` gradients
        :param d_tail: ``(B, entity width)`` gradients for the tail rows
        """
        entity_ids, entity_rows = _merge_rows(
            np.concatenate([triples[:, 0], triples[:, 2]]),
            np.concatenate([d_head, d_tail]),
            d_head.shape[1],
        )
        relation_ids, relation_rows = _merge_rows(
            triples[:, 1], d_relation, d_relation.shape[1]
        )
        return SparseGrad(entity_ids, entity_rows, relation_ids, relation_rows)

    def __len__(self) -> int:
        return int(self.entity_ids.size + self.relation_ids.size)

    def rows(self) -> Generator[Tuple[int, RowKind, FloatArray], None, None]:
        """
        Iterate over ``(id, row kind, gradient row)`` tuples
        """
        for id_, row in zip(self.entity_ids, self.entity_rows):
            yield int(id_), RowKind.ENTITY, row
        for id_, row in zip(self.relation_ids, self.relation_rows):
            yield int(id_), RowKind.RELATION, row

    def as_dict(self) -> Dict[Tuple[RowKind, int], FloatArray]:
        return {(kind, id_): row for id_, kind, row in self.rows()}

    def scaled(self, factor: float) -> "SparseGrad":
        return SparseGrad(
            self.entity_ids,
            self.entity_rows * factor,
            self.relation_ids,
            self.relation_rows * factor,
        )


def init_params(
    kind: ModelKind,
    n_entities: int,
    n_relations: int,
    dim: int,
    seed: int,
) -> ModelParams:
    """
    Create randomly initialised parameters.

    Entries are uniform on ``[-6/sqrt(dim), 6/sqrt(dim)]``, RotatE phases
    are uniform on ``[0, 2*pi)``. The result only depends on the arguments.

    :raises purekge.exc.ConfigError: If *dim* or one of the counts is
        smaller than 1
    """
    if dim < 1:
        raise ConfigError(f"Embedding dimension must be >= 1, got {dim}")
    if n_entities < 1:
        raise ConfigError(f"Entity count must be >= 1, got {n_entities}")
    if n_relations < 1:
        raise ConfigError(f"Relation count must be >= 1, got {n_relations}")
    kind = ModelKind(kind)
    scorer = scoring_function(kind)
    rng = np.random.default_rng(seed)
    entity_emb = scorer.init_entities(rng, n_entities, dim)
    relation_emb = scorer.init_relations(rng, n_relations, dim)
    LOG.debug(
        "Initialised %s with %d entities, %d relations (dim=%d)",
        kind,
        n_entities,
        n_relations,
        dim,
    )
    return ModelParams(kind, dim, entity_emb, relation_emb)


def score_triples(params: ModelParams, triples: IdArray) -> FloatArray:
    """
    Score every row of the ``(B, 3)`` id array *triples*
    """
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    return params.scorer.scores(
        params.entity_emb[triples[:, 0]],
        params.relation_emb[triples[:, 1]],
        params.entity_emb[triples[:, 2]],
    )


def score(params: ModelParams, triple: Triple) -> float:
    """
    Return the plausibility score of *triple*. Higher means more plausible.
    """
    return float(score_triples(params, np.asarray([triple]))[0])


def score_all_heads(params: ModelParams, r: int, t: int) -> FloatArray:
    """
    Return ``score(params, (i, r, t))`` for every entity id ``i``
    """
    return params.scorer.heads(
        params.entity_emb, params.relation_emb[r], params.entity_emb[t]
    )


def score_all_tails(params: ModelParams, h: int, r: int) -> FloatArray:
    """
    Return ``score(params, (h, r, i))`` for every entity id ``i``
    """
    return params.scorer.tails(
        params.entity_emb[h], params.relation_emb[r], params.entity_emb
    )


def sigmoid(values: FloatArray) -> FloatArray:
    """
    Overflow-free logistic function

    >>> sigmoid(np.array([0.0])).tolist()
    [0.5]
    """
    return np.exp(-np.logaddexp(0.0, -values))  # type: ignore


def logistic_loss(scores: FloatArray, labels: FloatArray) -> FloatArray:
    """
    Return ``log(1 + exp(-y * s))`` computed without overflow
    """
    return np.logaddexp(0.0, -labels * scores)  # type: ignore


def loss_and_grad(
    params: ModelParams,
    triples: IdArray,
    labels: FloatArray,
    l2_lambda: float = 0.0,
) -> Tuple[FloatArray, FloatArray, SparseGrad]:
    """
    Compute per-triple losses and the summed gradient of a set of triples.

    :param triples: ``(B, 3)`` id array
    :param labels: ``(B,)`` array of +1/-1 labels
    :param l2_lambda: Strength of the penalty
        ``lambda * (|h|^2 + |r|^2 + |t|^2)`` added to every triple
    :return: A tuple ``(losses, scores, gradient)`` where the gradient is
        the sum (not the mean) over all triples
    """
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    scorer = params.scorer
    H = params.entity_emb[triples[:, 0]]
    R = params.relation_emb[triples[:, 1]]
    T = params.entity_emb[triples[:, 2]]
    scores = scorer.scores(H, R, T)
    losses = logistic_loss(scores, labels)
    d_head, d_relation, d_tail = scorer.partials(H, R, T)
    # dloss/dscore = -y * sigmoid(-y * s)
    weight = (-labels * sigmoid(-labels * scores))[:, None]
    d_head = d_head * weight
    d_relation = d_relation * weight
    d_tail = d_tail * weight
    if l2_lambda:
        penalty = (H * H).sum(axis=1) + (T * T).sum(axis=1)
        d_head = d_head + 2.0 * l2_lambda * H
        d_tail = d_tail + 2.0 * l2_lambda * T
        if scorer.PENALIZE_RELATIONS:
            penalty = penalty + (R * R).sum(axis=1)
            d_relation = d_relation + 2.0 * l2_lambda * R
        losses = losses + l2_lambda * penalty
    return losses, scores, SparseGrad.accumulate(
        triples, d_head, d_relation, d_tail
    )


def grad(
    params: ModelParams,
    triple: Triple,
    y: int,
    l2_lambda: float = 0.0,
) -> Tuple[float, SparseGrad]:
    """
    Return the logistic loss of one labelled triple and its gradient.

    When head and tail are the same entity the two rows are merged into
    one.

    >>> import numpy as np
    >>> params = ModelParams(
    ...     ModelKind.DISTMULT, 1, np.zeros((2, 1)), np.zeros((1, 1))
    ... )
    >>> round(grad(params, Triple(0, 0, 1), 1)[0], 6)
    0.693147
    """
    losses, _, gradient = loss_and_grad(
        params,
        np.asarray([triple], dtype=np.int64),
        np.asarray([y], dtype=np.float64),
        l2_lambda,
    )
    return float(losses[0]), gradient
