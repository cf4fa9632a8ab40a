"""
Drug repurposing with trained link-prediction models.

Every ``(drug, treat relation, target)`` triple of a candidate set is
scored, each drug is reduced to its best score and the drugs are ranked.
The top lists of several models can then be intersected and checked
against a list of drugs known from clinical trials.

Input lists are plain text files with one entity (or relation) name per
line. Filtering of the drug list (for example by molecular weight) is
expected to happen before it is handed to this module.
"""

import logging
from dataclasses import dataclass, field
from typing import (
    Callable,
    Dict,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    TextIO,
    Tuple,
    Union,
)

import numpy as np

from purekge.const import ERRORS_STRICT, ERRORS_WARN, FIELD_SEPARATOR
from purekge.exc import ConfigError, EmptyInput, NotEnoughLists, UnknownName
from purekge.graph import Vocabulary
from purekge.model import ModelParams
from purekge.util import TPath, read_name_list

LOG = logging.getLogger(__name__)

REDUCTIONS = ("max", "mean")


@dataclass(frozen=True)
class CandidateSet:
    """
    The ids of candidate drugs (heads), targets (tails) and treatment
    relations to score.
    """

    drug_ids: Tuple[int, ...]
    target_ids: Tuple[int, ...]
    treat_relation_ids: Tuple[int, ...]

    def __post_init__(self) -> None:
        for what, ids in (
            ("drug list", self.drug_ids),
            ("target list", self.target_ids),
            ("relation list", self.treat_relation_ids),
        ):
            if not ids:
                raise EmptyInput(what)
            if len(set(ids)) != len(ids):
                raise ValueError(f"Duplicate ids in {what}")

    @property
    def n_triples(self) -> int:
        return (
            len(self.drug_ids)
            * len(self.target_ids)
            * len(self.treat_relation_ids)
        )


class ScoredCandidate(NamedTuple):
    """
    A drug with the best score over all its (relation, target) pairs
    """

    drug_id: int
    best_score: float
    best_target_id: int
    best_relation_id: int


class ValidationResult(NamedTuple):
    """
    Predicted drugs which also appear in a trial list
    """

    hits: int
    hit_list: Tuple[str, ...]


@dataclass(frozen=True)
class ConsensusReport:
    """
    The agreement between the ranked drug lists of several models.

    *ranked* holds every drug named by any model, ordered by the number of
    models listing it (descending), then by the average position in those
    lists, then by name. *intersection* is the prefix of drugs listed by
    all models.
    """

    per_model: Mapping[str, Tuple[str, ...]]
    ranked: Tuple[str, ...]
    model_counts: Mapping[str, int]
    models_by_drug: Mapping[str, Tuple[str, ...]] = field(repr=False)
    validation: Optional[ValidationResult] = None

    @property
    def n_models(self) -> int:
        return len(self.per_model)

    @property
    def intersection(self) -> Tuple[str, ...]:
        return self.at_least(self.n_models)

    def at_least(self, min_models: int) -> Tuple[str, ...]:
        """
        Return the ranked drugs listed by at least *min_models* models
        """
        return tuple(
            name
            for name in self.ranked
            if self.model_counts[name] >= min_models
        )


def _resolve(
    names: Sequence[str],
    lookup: Callable[[str], int],
    what: str,
    errors: str,
) -> Tuple[int, ...]:
    ids: Dict[int, None] = {}
    for name in names:
        try:
            ids.setdefault(lookup(name))
        except UnknownName:
            if errors == ERRORS_WARN:
                LOG.warning("Skipping unknown name %r in the %s", name, what)
                continue
            raise
    if not ids:
        raise EmptyInput(what)
    return tuple(ids)


def load_candidates(
    drug_file: TPath,
    target_file: TPath,
    relation_file: TPath,
    vocab: Vocabulary,
    errors: str = ERRORS_STRICT,
) -> CandidateSet:
    """
    Read the three candidate lists and resolve them with *vocab*.

    Duplicate names are dropped (the first occurrence is kept). Unknown
    names raise :py:exc:`~purekge.exc.UnknownName` unless *errors* is
    ``"warn"``, in which case they are logged and skipped.

    :raises purekge.exc.EmptyInput: If a list is (or becomes) empty
    """
    if errors not in (ERRORS_STRICT, ERRORS_WARN):
        raise ConfigError(f"Unknown error handling mode {errors!r}")
    candidates = CandidateSet(
        _resolve(
            read_name_list(drug_file), vocab.entity_id, "drug list", errors
        ),
        _resolve(
            read_name_list(target_file),
            vocab.entity_id,
            "target list",
            errors,
        ),
        _resolve(
            read_name_list(relation_file),
            vocab.relation_id,
            "relation list",
            errors,
        ),
    )
    LOG.info(
        "Loaded %d drugs, %d targets and %d treatment relations",
        len(candidates.drug_ids),
        len(candidates.target_ids),
        len(candidates.treat_relation_ids),
    )
    return candidates


def _ranking_key(item: ScoredCandidate) -> Tuple[float, int]:
    return -item.best_score, item.drug_id


def score_candidates(
    params: ModelParams,
    cands: CandidateSet,
    reduction: str = "max",
) -> List[ScoredCandidate]:
    """
    Score all candidate triples and rank the drugs.

    Each drug is reduced to the best score over all (relation, target)
    pairs. With ``reduction="mean"`` the mean over those pairs is used as
    ranking score instead, the recorded relation and target still belong to
    the best pair. The result is sorted by score (descending), ties by drug
    id.
    """
    if reduction not in REDUCTIONS:
        raise ConfigError(
            f"Unknown reduction {reduction!r}. Known: {', '.join(REDUCTIONS)}"
        )
    scorer = params.scorer
    drugs = np.asarray(cands.drug_ids, dtype=np.int64)
    drug_rows = params.entity_emb[drugs]
    # (relations, targets, drugs)
    table = np.empty(
        (len(cands.treat_relation_ids), len(cands.target_ids), drugs.size)
    )
    for i, relation in enumerate(cands.treat_relation_ids):
        for j, target in enumerate(cands.target_ids):
            table[i, j] = scorer.heads(
                drug_rows,
                params.relation_emb[relation],
                params.entity_emb[target],
            )
    flat = table.reshape(-1, drugs.size)
    best = flat.argmax(axis=0)
    if reduction == "max":
        values = flat[best, np.arange(drugs.size)]
    else:
        values = flat.mean(axis=0)
    n_targets = len(cands.target_ids)
    output = [
        ScoredCandidate(
            int(drug),
            float(value),
            cands.target_ids[int(pair) % n_targets],
            cands.treat_relation_ids[int(pair) // n_targets],
        )
        for drug, value, pair in zip(drugs, values, best)
    ]
    output.sort(key=_ranking_key)
    LOG.debug("Scored %d candidate triples", cands.n_triples)
    return output


def top_k(scored: Sequence[ScoredCandidate], k: int) -> List[ScoredCandidate]:
    """
    Return the *k* best drugs (all of them if there are fewer)

    :raises purekge.exc.ConfigError: If *k* is smaller than 1
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    return sorted(scored, key=_ranking_key)[:k]


def match_trials(
    predicted: Sequence[str], trials: Sequence[str]
) -> ValidationResult:
    """
    Return the predicted names which occur in *trials*, in predicted order.

    Names are compared exactly after trimming surrounding whitespace.

    >>> match_trials(["Ribavirin", "X"], ["Ribavirin", "Dexamethasone"])
    ValidationResult(hits=1, hit_list=('Ribavirin',))
    """
    wanted = {name.strip() for name in trials}
    hit_list = tuple(
        dict.fromkeys(name for name in predicted if name.strip() in wanted)
    )
    return ValidationResult(len(hit_list), hit_list)


def validate_against(
    report: Union[ConsensusReport, Sequence[str]],
    trial_drug_file: TPath,
) -> ValidationResult:
    """
    Count the drugs of a ranked list (or of the intersection of a consensus
    report) which appear in the trial file.

    :raises purekge.exc.EmptyInput: If the trial file names no drug
    """
    trials = read_name_list(trial_drug_file)
    if not trials:
        raise EmptyInput("trial list")
    if isinstance(report, ConsensusReport):
        predicted: Sequence[str] = report.intersection
    else:
        predicted = report
    return match_trials(predicted, trials)


def consensus(
    lists: Mapping[str, Sequence[str]],
    trials: Optional[Sequence[str]] = None,
) -> ConsensusReport:
    """
    Combine the ranked drug lists of several models.

    :param lists: Ranked drug names keyed by model name
    :param trials: If given, the intersection is validated against these
        names and the result is attached to the report
    :raises purekge.exc.NotEnoughLists: With fewer than two lists
    """
    if len(lists) < 2:
        raise NotEnoughLists(len(lists))
    per_model = {model: tuple(names) for model, names in lists.items()}
    positions: Dict[str, List[int]] = {}
    models_by_drug: Dict[str, List[str]] = {}
    for model, names in per_model.items():
        seen = set()
        for position, name in enumerate(names, 1):
            if name in seen:
                continue
            seen.add(name)
            positions.setdefault(name, []).append(position)
            models_by_drug.setdefault(name, []).append(model)
    ranked = sorted(
        positions,
        key=lambda name: (
            -len(positions[name]),
            sum(positions[name]) / len(positions[name]),
            name,
        ),
    )
    report = ConsensusReport(
        per_model,
        tuple(ranked),
        {name: len(positions[name]) for name in ranked},
        {name: tuple(models_by_drug[name]) for name in ranked},
    )
    if trials is not None:
        if not trials:
            raise EmptyInput("trial list")
        report = ConsensusReport(
            report.per_model,
            report.ranked,
            report.model_counts,
            report.models_by_drug,
            match_trials(report.intersection, trials),
        )
    LOG.info(
        "%d drugs are shared by all %d models",
        len(report.intersection),
        report.n_models,
    )
    return report


def write_ranking(
    stream: TextIO, ranked: Sequence[ScoredCandidate], vocab: Vocabulary
) -> None:
    """
    Write ``rank<TAB>drug<TAB>score<TAB>relation<TAB>target`` lines
    """
    for rank, item in enumerate(ranked, 1):
        fields = (
            str(rank),
            vocab.entity_names[item.drug_id],
            f"{item.best_score:.6f}",
            vocab.relation_names[item.best_relation_id],
            vocab.entity_names[item.best_target_id],
        )
        stream.write(FIELD_SEPARATOR.join(fields) + "\n")


def write_consensus(
    stream: TextIO,
    report: ConsensusReport,
    min_models: Optional[int] = None,
) -> None:
    """
    Write ``drug<TAB>model_count<TAB>models`` lines.

    By default only drugs listed by every model are written. When the
    report carries a validation result a final ``hits=<n>`` line is added.
    """
    threshold = report.n_models if min_models is None else min_models
    for name in report.at_least(threshold):
        stream.write(
            FIELD_SEPARATOR.join(
                (
                    name,
                    str(report.model_counts[name]),
                    ",".join(report.models_by_drug[name]),
                )
            )
            + "\n"
        )
    if report.validation is not None:
        stream.write(f"hits={report.validation.hits}\n")


def read_ranked_names(path: TPath) -> List[str]:
    """
    Read a ranked drug list.

    Both plain name lists and files written by :py:func:`write_ranking`
    (where the name is the second column) are accepted.
    """
    names = []
    for line in read_name_list(path):
        fields = line.split(FIELD_SEPARATOR)
        if len(fields) > 1 and fields[0].strip().isdigit():
            names.append(fields[1].strip())
        else:
            names.append(line)
    return names
