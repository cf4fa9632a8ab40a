"""
Link-prediction evaluation.

For a test triple ``(h, r, t)`` the head is removed, every entity is tried
in its place and the true head is ranked among all candidates by score
(the tail side works the same way). Ranks are summarised as mean rank
(MR), mean reciprocal rank (MRR) and Hits@N.

In the *filtered* setting, candidates which form another known true triple
are removed before ranking. Ties are resolved to the middle of the tied
block: ``rank = 1 + greater + equal // 2`` where *equal* does not count the
true entity itself. Scores within a relative ``1e-10`` of the true score
(absolute below 1.0) count as tied.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import (
    Dict,
    Iterable,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    TextIO,
    Tuple,
)

import numpy as np
from tqdm import tqdm

from purekge.const import HITS_AT, SCORE_TIE_RTOL
from purekge.exc import ConfigError, EmptyInput
from purekge.graph import FilterIndex
from purekge.model import (
    ModelParams,
    score,
    score_all_heads,
    score_all_tails,
)
from purekge.typevars import FloatArray, IdArray, Triple
from purekge.util import resolve_workers

LOG = logging.getLogger(__name__)


class Side(str, Enum):
    """
    The part of a triple which is replaced by candidates
    """

    HEAD = "head"
    TAIL = "tail"


class Setting(str, Enum):
    """
    Whether other known true triples are removed from the candidates
    """

    RAW = "raw"
    FILTERED = "filtered"

    def __str__(self) -> str:
        return self.value


class SidePolicy(str, Enum):
    """
    Which sides of each test triple are ranked.

    With ``both_averaged`` every triple contributes a head and a tail rank.
    """

    HEAD_ONLY = "head_only"
    TAIL_ONLY = "tail_only"
    BOTH_AVERAGED = "both_averaged"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "SidePolicy":
        """
        Accept the policy values as well as the short forms used on the
        command line

        >>> SidePolicy.parse("tail")
        <SidePolicy.TAIL_ONLY: 'tail_only'>
        """
        wanted = name.strip().lower()
        short = {"head": cls.HEAD_ONLY, "tail": cls.TAIL_ONLY}
        if wanted in short:
            return short[wanted]
        if wanted == "both":
            return cls.BOTH_AVERAGED
        try:
            return cls(wanted)
        except ValueError as exc:
            raise ConfigError(f"Unknown side policy {name!r}") from exc

    @property
    def sides(self) -> Tuple[Side, ...]:
        if self == SidePolicy.HEAD_ONLY:
            return (Side.HEAD,)
        if self == SidePolicy.TAIL_ONLY:
            return (Side.TAIL,)
        return (Side.HEAD, Side.TAIL)


class RankQuery(NamedTuple):
    """
    "Rank the true *side* of *triple* among all entities"
    """

    triple: Triple
    side: Side


def tie_band(true_score: float) -> Tuple[float, float]:
    """
    Return the closed interval of scores which tie with *true_score*.

    Batched and single-triple scoring may round the same score differently
    in the last bits, so equality uses :py:data:`~purekge.const.SCORE_TIE_RTOL`.

    >>> tie_band(0.0)
    (-1e-10, 1e-10)
    """
    tolerance = SCORE_TIE_RTOL * max(abs(true_score), 1.0)
    return true_score - tolerance, true_score + tolerance


def rank_from_scores(
    scores: FloatArray,
    true_index: int,
    exclude: Optional[IdArray] = None,
) -> int:
    """
    Return the 1-based rank of ``scores[true_index]`` among *scores*.

    Entries listed in *exclude* are ignored (the true entry is never
    ignored). Tied entries count half.

    >>> rank_from_scores(np.array([3.0, 9.0, 7.0, 7.0]), 0)
    4
    >>> rank_from_scores(np.array([5.0, 8.0, 2.0]), 0, np.array([1]))
    1
    >>> rank_from_scores(np.zeros(5), 2)
    3
    """
    keep = np.ones(scores.shape[0], dtype=bool)
    if exclude is not None:
        keep[exclude] = False
    keep[true_index] = False
    others = scores[keep]
    low, high = tie_band(float(scores[true_index]))
    greater = int(np.count_nonzero(others > high))
    equal = int(np.count_nonzero((others >= low) & (others <= high)))
    return 1 + greater + equal // 2


def rank_one(
    params: ModelParams,
    query: RankQuery,
    filter_index: Optional[FilterIndex] = None,
) -> int:
    """
    Rank the true entity of *query* against all entities.

    With a *filter_index* the filtered rank is returned, otherwise the raw
    rank.
    """
    h, r, t = query.triple
    exclude = None
    if query.side == Side.HEAD:
        scores = score_all_heads(params, r, t)
        if filter_index is not None:
            exclude = filter_index.known_heads(r, t)
        return rank_from_scores(scores, h, exclude)
    scores = score_all_tails(params, h, r)
    if filter_index is not None:
        exclude = filter_index.known_tails(h, r)
    return rank_from_scores(scores, t, exclude)


def brute_force_rank(
    params: ModelParams,
    query: RankQuery,
    filter_index: Optional[FilterIndex] = None,
) -> int:
    """
    Reference implementation of :py:func:`rank_one`.

    Builds every candidate triple, scores them one by one and walks the
    sorted list. Slow, meant for cross-checking the batched path.
    """
    h, r, t = query.triple
    truth = h if query.side == Side.HEAD else t
    candidates: List[Tuple[float, int]] = []
    for entity in range(params.n_entities):
        if query.side == Side.HEAD:
            candidate = Triple(entity, r, t)
        else:
            candidate = Triple(h, r, entity)
        if (
            entity != truth
            and filter_index is not None
            and filter_index.contains(candidate)
        ):
            continue
        candidates.append((score(params, candidate), entity))
    candidates.sort(key=lambda item: (-item[0], item[1]))
    true_score = next(value for value, entity in candidates if entity == truth)
    low, high = tie_band(true_score)
    greater = 0
    equal = 0
    for value, entity in candidates:
        if entity == truth:
            continue
        if value > high:
            greater += 1
        elif value >= low:
            equal += 1
        else:
            break
    return 1 + greater + equal // 2


def compute_metrics(
    ranks: Sequence[int], hits_at: Iterable[int] = HITS_AT
) -> Tuple[float, float, Dict[int, float]]:
    """
    Return ``(MR, MRR, {N: Hits@N})`` for *ranks*

    >>> mr, mrr, hits = compute_metrics([1, 2, 4])
    >>> round(mr, 4), round(mrr, 4), round(hits[3], 4)
    (2.3333, 0.5833, 0.6667)

    :raises purekge.exc.EmptyInput: If *ranks* is empty
    """
    if not ranks:
        raise EmptyInput("rank list")
    values = np.asarray(ranks, dtype=np.float64)
    hits = {n: float(np.mean(values <= n)) for n in hits_at}
    return float(values.mean()), float(np.mean(1.0 / values)), hits


@dataclass(frozen=True)
class RankReport:
    """
    Ranks of an evaluation run and the metrics derived from them.

    ``query_indices[i]`` is the position of the test triple which produced
    ``ranks[i]``. With ``both_averaged`` each index appears twice, head
    rank first.
    """

    ranks: Tuple[int, ...]
    mr: float
    mrr: float
    hits: Mapping[int, float]
    setting: Setting
    side_policy: SidePolicy
    query_indices: Tuple[int, ...] = ()

    @staticmethod
    def from_ranks(
        ranks: Sequence[int],
        setting: Setting,
        side_policy: SidePolicy,
        query_indices: Sequence[int] = (),
    ) -> "RankReport":
        mr, mrr, hits = compute_metrics(ranks)
        return RankReport(
            tuple(ranks),
            mr,
            mrr,
            hits,
            setting,
            side_policy,
            tuple(query_indices),
        )

    def as_text(self) -> str:
        """
        Render the report as ``key=value`` lines
        """
        lines = [
            f"setting={self.setting}",
            f"side={self.side_policy}",
            f"queries={len(self.ranks)}",
            f"MR={self.mr:.4f}",
            f"MRR={self.mrr:.4f}",
        ]
        lines.extend(f"Hits@{n}={value:.4f}" for n, value in self.hits.items())
        return "\n".join(lines) + "\n"

    def write_ranks(self, stream: TextIO) -> None:
        """
        Write one ``triple-index<TAB>rank`` line per query
        """
        indices = self.query_indices or tuple(range(len(self.ranks)))
        for index, rank in zip(indices, self.ranks):
            stream.write(f"{index}\t{rank}\n")


def evaluate(
    params: ModelParams,
    triples: Sequence[Triple],
    setting: Setting = Setting.FILTERED,
    side_policy: SidePolicy = SidePolicy.HEAD_ONLY,
    filter_index: Optional[FilterIndex] = None,
    workers: Optional[int] = None,
    progress: bool = False,
) -> RankReport:
    """
    Rank every test triple and summarise the ranks.

    Queries may run on a thread pool (*workers*, default ``KGE_THREADS``).
    The report does not depend on the number of workers.

    :param filter_index: All known true triples (train, valid and test).
        Required for the filtered setting.
    :raises purekge.exc.EmptyInput: If *triples* is empty
    :raises purekge.exc.ConfigError: If the filtered setting is requested
        without a filter index
    """
    # pylint: disable=too-many-arguments
    if not triples:
        raise EmptyInput("test set")
    setting = Setting(setting)
    if setting == Setting.FILTERED and filter_index is None:
        raise ConfigError("The filtered setting needs a filter index")
    active_filter = filter_index if setting == Setting.FILTERED else None

    queries = [
        (index, RankQuery(Triple(*map(int, triple)), side))
        for index, triple in enumerate(triples)
        for side in side_policy.sides
    ]

    def run(item: Tuple[int, RankQuery]) -> int:
        return rank_one(params, item[1], active_filter)

    workers = resolve_workers(workers)
    items = tqdm(
        queries, desc=f"eval {setting}", unit="query", disable=not progress
    )
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ranks = list(pool.map(run, items))
    else:
        ranks = [run(item) for item in items]

    report = RankReport.from_ranks(
        ranks, setting, side_policy, [index for index, _ in queries]
    )
    LOG.info(
        "Evaluated %d queries (%s, %s): MR=%.4f MRR=%.4f",
        len(ranks),
        setting,
        side_policy,
        report.mr,
        report.mrr,
    )
    return report
