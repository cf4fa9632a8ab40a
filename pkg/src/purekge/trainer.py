"""
Mini-batch training with uniform negative corruption and logistic loss.

Each batch holds ``B`` positive training triples (label +1) and ``B * k``
negatives (label -1) made by replacing the head or the tail of a positive
with a uniformly drawn entity. The mean logistic loss of the batch is
minimised with sparse SGD or Adam.

In the default single-threaded mode the result only depends on the
configuration and the data. Passing ``workers > 1`` (or setting the
``KGE_THREADS`` environment variable) runs batches on a thread pool which
updates the shared parameters without locking. This is faster on large
graphs but not reproducible.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Callable,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from tqdm import tqdm

from purekge import optim
from purekge.const import (
    DEFAULT_ADAM_BETA1,
    DEFAULT_ADAM_BETA2,
    DEFAULT_ADAM_EPS,
    DEFAULT_BATCH_SIZE,
    DEFAULT_DIM,
    DEFAULT_EPOCHS,
    DEFAULT_L2_LAMBDA,
    DEFAULT_LEARNING_RATE,
    DEFAULT_NEGATIVES,
    DEFAULT_OPTIMIZER,
    DEFAULT_SEED,
    MAX_REDRAW_ATTEMPTS,
)
from purekge.exc import (
    ConfigError,
    DivergenceError,
    EmptyInput,
    NonFiniteLoss,
    UnknownOptimizer,
)
from purekge.graph import FilterIndex
from purekge.model import (
    ModelKind,
    ModelParams,
    SparseGrad,
    init_params,
    loss_and_grad,
)
from purekge.typevars import IdArray, Triple
from purekge.util import resolve_workers

LOG = logging.getLogger(__name__)

#: Signature of the callback invoked after every epoch with the epoch
#: number, the current parameters and the mean epoch loss
TEpochCallback = Callable[[int, ModelParams, float], None]


class L2Mode(str, Enum):
    """
    How embeddings are kept small.

    ``penalty`` adds ``lambda * (|h|^2 + |r|^2 + |t|^2)`` to every triple
    loss, ``project_entities`` rescales every updated entity row to unit
    length after each step.
    """

    NONE = "none"
    PENALTY = "penalty"
    PROJECT_ENTITIES = "project_entities"

    def __str__(self) -> str:
        return self.value


TRANSLATIONAL = frozenset({ModelKind.TRANSE_L1, ModelKind.TRANSE_L2})


@dataclass(frozen=True)
class TrainConfig:
    """
    Hyper-parameters of a training run.

    Values are validated on creation. Use :py:func:`dataclasses.replace` to
    derive a modified configuration.

    When *l2_mode* is left unset, TransE models use ``project_entities``
    and all other models use ``penalty``.
    """

    # pylint: disable=too-many-instance-attributes

    model: ModelKind
    dim: int = DEFAULT_DIM
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    negatives: int = DEFAULT_NEGATIVES
    optimizer: str = DEFAULT_OPTIMIZER
    learning_rate: float = DEFAULT_LEARNING_RATE
    adam_beta1: float = DEFAULT_ADAM_BETA1
    adam_beta2: float = DEFAULT_ADAM_BETA2
    adam_eps: float = DEFAULT_ADAM_EPS
    l2_mode: Optional[L2Mode] = None
    l2_lambda: float = DEFAULT_L2_LAMBDA
    rescal_symmetric: bool = False
    filter_false_negatives: bool = False
    seed: int = DEFAULT_SEED
    checkpoint_every: int = 0
    max_wall_time: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.model, ModelKind):
            object.__setattr__(self, "model", ModelKind.parse(self.model))
        if self.l2_mode is not None and not isinstance(self.l2_mode, L2Mode):
            try:
                mode = L2Mode(str(self.l2_mode).strip().lower())
            except ValueError as exc:
                raise ConfigError(
                    f"Unknown l2_mode {self.l2_mode!r}. Known modes: "
                    f"{', '.join(mode.value for mode in L2Mode)}"
                ) from exc
            object.__setattr__(self, "l2_mode", mode)
        if self.optimizer.strip().lower() not in ("sgd", "adam"):
            raise UnknownOptimizer(
                f"Unknown optimizer {self.optimizer!r}. "
                "Known optimizers: adam, sgd"
            )
        for name in ("dim", "epochs", "batch_size", "negatives"):
            if getattr(self, name) < 1:
                raise ConfigError(
                    f"{name} must be >= 1, got {getattr(self, name)!r}"
                )
        if not self.learning_rate > 0:
            raise ConfigError(
                f"learning_rate must be > 0, got {self.learning_rate!r}"
            )
        for name in ("adam_beta1", "adam_beta2"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(
                    f"{name} must be in [0, 1), got {getattr(self, name)!r}"
                )
        if not self.adam_eps > 0:
            raise ConfigError(f"adam_eps must be > 0, got {self.adam_eps!r}")
        for name in ("l2_lambda", "checkpoint_every", "max_wall_time"):
            if getattr(self, name) < 0:
                raise ConfigError(
                    f"{name} must not be negative, got {getattr(self, name)!r}"
                )

    @property
    def effective_l2_mode(self) -> L2Mode:
        """
        The L2 mode in use, resolving the per-model default
        """
        if self.l2_mode is not None:
            return self.l2_mode
        if self.model in TRANSLATIONAL:
            return L2Mode.PROJECT_ENTITIES
        return L2Mode.PENALTY

    @property
    def betas(self) -> Tuple[float, float]:
        return self.adam_beta1, self.adam_beta2


class LabeledTriple(NamedTuple):
    """
    A training triple with its label: +1 for triples from the training
    split, -1 for corruptions.

    *degenerate* is set on "negatives" which could not be corrupted because
    the graph has a single entity.
    """

    triple: Triple
    y: int
    degenerate: bool = False


@dataclass(frozen=True)
class TrainReport:
    """
    Summary of a finished training run
    """

    epoch_losses: Tuple[float, ...]
    wall_time: float
    checksum: str
    first_epoch: int = 1
    stopped_early: bool = field(default=False, compare=False)

    @property
    def epochs_run(self) -> int:
        return len(self.epoch_losses)

    @property
    def final_loss(self) -> float:
        """
        Mean loss of the last epoch (``nan`` if no epoch ran)
        """
        return self.epoch_losses[-1] if self.epoch_losses else float("nan")


def corrupt_batch(
    positives: IdArray,
    k: int,
    n_entities: int,
    rng: np.random.Generator,
    filter_index: Optional[FilterIndex] = None,
) -> IdArray:
    """
    Create *k* corruptions for each row of *positives*.

    Row ``i * k + j`` of the result is the ``j``-th corruption of positive
    ``i``. For each corruption the head or the tail (each with probability
    1/2) is replaced by an entity drawn uniformly from all *n_entities*.

    A corruption reproducing its positive is drawn again, up to
    ``MAX_REDRAW_ATTEMPTS`` times, after which it is kept as is. With a
    *filter_index* every corruption which is a known true triple is drawn
    again in the same way.

    With a single entity no corruption is possible and the positives are
    returned unchanged.
    """
    if k < 1:
        raise ConfigError(f"Need at least one negative per positive, got {k}")
    originals = np.repeat(
        np.asarray(positives, dtype=np.int64).reshape(-1, 3), k, axis=0
    )
    output = originals.copy()
    if n_entities < 2 or not len(output):
        return output
    corrupt_head = rng.random(len(output)) < 0.5
    column = np.where(corrupt_head, 0, 2)
    pending = np.arange(len(output))
    for _ in range(1 + MAX_REDRAW_ATTEMPTS):
        output[pending, column[pending]] = rng.integers(
            0, n_entities, pending.size
        )
        rejected = (output[pending] == originals[pending]).all(axis=1)
        if filter_index is not None:
            known = filter_index.contains
            rejected |= np.fromiter(
                (known(Triple(*row)) for row in output[pending].tolist()),
                dtype=bool,
                count=pending.size,
            )
        pending = pending[rejected]
        if not pending.size:
            break
    if pending.size:
        LOG.debug(
            "Kept %d corruptions after %d re-draws",
            pending.size,
            MAX_REDRAW_ATTEMPTS,
        )
    return output


def sample_negatives(
    triple: Triple,
    k: int,
    n_entities: int,
    rng: np.random.Generator,
    filter_index: Optional[FilterIndex] = None,
) -> List[LabeledTriple]:
    """
    Return *k* negative examples for *triple*, each replacing either its head
    or its tail.

    See :py:func:`corrupt_batch` for the sampling rules. If the graph has
    only one entity the returned triples equal the input and are flagged as
    degenerate.
    """
    if n_entities < 2:
        LOG.warning(
            "Cannot corrupt %r: the graph has only %d entity",
            triple,
            n_entities,
        )
        return [LabeledTriple(Triple(*triple), -1, True) for _ in range(k)]
    rows = corrupt_batch(
        np.asarray([triple], dtype=np.int64), k, n_entities, rng, filter_index
    )
    return [LabeledTriple(Triple(*map(int, row)), -1) for row in rows]


def _checked_loss(
    params: ModelParams,
    triples: IdArray,
    labels: np.ndarray,
    l2_lambda: float,
) -> Tuple[float, SparseGrad]:
    losses, scores, gradient = loss_and_grad(params, triples, labels, l2_lambda)
    finite = np.isfinite(losses)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise NonFiniteLoss(
            params.kind.value,
            Triple(*map(int, triples[bad])),
            float(scores[bad]),
        )
    return float(losses.mean()), gradient.scaled(1.0 / len(triples))


def batch_loss(
    params: ModelParams,
    batch: Sequence[LabeledTriple],
    l2_lambda: float = 0.0,
) -> Tuple[float, SparseGrad]:
    """
    Return the mean logistic loss of *batch* and its mean gradient.

    :param l2_lambda: Strength of the L2 penalty (0 disables it)
    :raises purekge.exc.NonFiniteLoss: If any triple has a NaN or infinite
        loss
    :raises purekge.exc.EmptyInput: If *batch* is empty
    """
    if not batch:
        raise EmptyInput("batch")
    triples = np.asarray([item.triple for item in batch], dtype=np.int64)
    labels = np.asarray([item.y for item in batch], dtype=np.float64)
    return _checked_loss(params, triples, labels, l2_lambda)


@dataclass
class _Run:
    """
    The mutable state shared by the batches of one training run
    """

    params: ModelParams
    config: TrainConfig
    optimizer: optim.TOptimizer
    n_entities: int
    filter_index: Optional[FilterIndex]

    def run_batch(self, positives: IdArray, rng: np.random.Generator) -> float:
        config = self.config
        negatives = corrupt_batch(
            positives,
            config.negatives,
            self.n_entities,
            rng,
            self.filter_index,
        )
        if self.n_entities < 2:
            # nothing to contrast with
            negatives = negatives[:0]
        triples = np.concatenate([positives, negatives])
        labels = np.concatenate(
            [np.ones(len(positives)), -np.ones(len(negatives))]
        )
        mode = config.effective_l2_mode
        l2_lambda = config.l2_lambda if mode == L2Mode.PENALTY else 0.0
        loss, gradient = _checked_loss(self.params, triples, labels, l2_lambda)
        self.optimizer.step(self.params, gradient)
        optim.post_step(
            self.params,
            gradient,
            project=mode == L2Mode.PROJECT_ENTITIES,
            rescal_symmetric=config.rescal_symmetric,
        )
        return loss * len(triples)


def _as_triples(train_triples: Union[IdArray, Iterable[Triple]]) -> IdArray:
    if isinstance(train_triples, np.ndarray):
        return train_triples.astype(np.int64).reshape(-1, 3)
    rows = [tuple(triple) for triple in train_triples]
    return np.asarray(rows, dtype=np.int64).reshape(-1, 3)


def train(
    train_triples: Union[IdArray, Iterable[Triple]],
    config: TrainConfig,
    n_entities: Optional[int] = None,
    n_relations: Optional[int] = None,
    filter_index: Optional[FilterIndex] = None,
    init: Optional[ModelParams] = None,
    start_epoch: int = 1,
    on_epoch_end: Optional[TEpochCallback] = None,
    workers: Optional[int] = None,
    progress: bool = False,
) -> Tuple[ModelParams, TrainReport]:
    """
    Train a model on *train_triples*.

    Epochs ``start_epoch`` to ``config.epochs`` are run. In each epoch the
    training triples are shuffled and cut into batches of
    ``config.batch_size`` positives. The random stream of an epoch only
    depends on the seed and the epoch number, so a run resumed from the
    parameters of epoch ``n`` with ``start_epoch=n + 1`` draws the same
    batches as an uninterrupted run.

    :param n_entities: Size of the entity table. Defaults to the largest
        entity id plus one.
    :param n_relations: Size of the relation table. Defaults to the largest
        relation id plus one.
    :param filter_index: Known true triples excluded from the negatives when
        ``config.filter_false_negatives`` is set. Defaults to the training
        triples.
    :param init: Parameters to continue from. They are copied, not modified.
    :param on_epoch_end: Called after every finished epoch
    :param workers: Number of worker threads. ``None`` reads
        ``KGE_THREADS``. Values above 1 give up determinism.
    :param progress: Show a progress bar on stderr

    :raises purekge.exc.EmptyInput: If there are no training triples
    :raises purekge.exc.DivergenceError: If an epoch ends with a non-finite
        loss. The exception carries the parameters of the last good epoch.
    """
    # pylint: disable=too-many-arguments, too-many-locals
    triples = _as_triples(train_triples)
    if not len(triples):
        raise EmptyInput("training set")
    if n_entities is None:
        n_entities = int(triples[:, [0, 2]].max()) + 1
    if n_relations is None:
        n_relations = int(triples[:, 1].max()) + 1

    if init is None:
        params = init_params(
            config.model, n_entities, n_relations, config.dim, config.seed
        )
    else:
        if init.kind != config.model or init.dim != config.dim:
            raise ConfigError(
                f"Cannot continue a {init.kind}/dim={init.dim} model with a "
                f"{config.model}/dim={config.dim} configuration"
            )
        params = init.copy()

    if config.effective_l2_mode == L2Mode.PROJECT_ENTITIES:
        # batches only renormalise the rows they touch
        projected = optim.project_all_entities(params)
        LOG.debug("Projected %d entity rows onto the unit sphere", projected)

    if config.filter_false_negatives and filter_index is None:
        filter_index = FilterIndex(Triple(*row) for row in triples.tolist())
    run = _Run(
        params,
        config,
        optim.create(
            config.optimizer,
            config.learning_rate,
            config.betas,
            config.adam_eps,
        ),
        params.n_entities,
        filter_index if config.filter_false_negatives else None,
    )
    if params.n_entities < 2:
        LOG.warning(
            "The graph has a single entity. Training without negatives."
        )

    workers = resolve_workers(workers)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    if pool:
        LOG.warning(
            "Training with %d unsynchronised workers. Results are not "
            "reproducible.",
            workers,
        )

    LOG.info(
        "Training %s (dim=%d) on %d triples, %d entities, %d relations "
        "with %r, l2 mode %s",
        config.model,
        config.dim,
        len(triples),
        params.n_entities,
        params.n_relations,
        run.optimizer,
        config.effective_l2_mode,
    )

    losses: List[float] = []
    stopped_early = False
    started = time.monotonic()
    last_good = params.copy() if params.is_finite() else None
    epochs = tqdm(
        range(start_epoch, config.epochs + 1),
        desc=f"train {config.model}",
        unit="epoch",
        disable=not progress,
    )
    try:
        for epoch in epochs:
            order = np.random.default_rng([config.seed, epoch]).permutation(
                len(triples)
            )
            batches = [
                (
                    triples[order[offset : offset + config.batch_size]],
                    np.random.default_rng([config.seed, epoch, index]),
                )
                for index, offset in enumerate(
                    range(0, len(triples), config.batch_size)
                )
            ]
            try:
                if pool:
                    totals = list(
                        pool.map(lambda job: run.run_batch(*job), batches)
                    )
                else:
                    totals = [run.run_batch(*job) for job in batches]
            except NonFiniteLoss as exc:
                LOG.error("%s", exc)
                raise DivergenceError(epoch, last_good) from exc

            seen = len(triples) * (1 + config.negatives)
            if params.n_entities < 2:
                seen = len(triples)
            mean_loss = float(sum(totals) / seen)
            if not np.isfinite(mean_loss) or not params.is_finite():
                raise DivergenceError(epoch, last_good)
            losses.append(mean_loss)
            last_good = params.copy()
            LOG.info(
                "Epoch %d/%d: mean loss %.6f", epoch, config.epochs, mean_loss
            )
            epochs.set_postfix(loss=f"{mean_loss:.4f}")
            if on_epoch_end is not None:
                on_epoch_end(epoch, params, mean_loss)

            elapsed = time.monotonic() - started
            if config.max_wall_time and elapsed >= config.max_wall_time:
                if epoch < config.epochs:
                    LOG.warning(
                        "Stopping after epoch %d: wall time limit of %.1fs "
                        "reached",
                        epoch,
                        config.max_wall_time,
                    )
                    stopped_early = True
                break
    finally:
        epochs.close()
        if pool:
            pool.shutdown()

    report = TrainReport(
        tuple(losses),
        time.monotonic() - started,
        params.checksum(),
        start_epoch,
        stopped_early,
    )
    return params, report
