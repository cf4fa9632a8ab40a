"""
Tests for ranking and the link-prediction metrics
"""

from io import StringIO

import numpy as np
import pytest

from purekge.evaluator import (
    RankQuery,
    RankReport,
    Setting,
    Side,
    SidePolicy,
    brute_force_rank,
    compute_metrics,
    evaluate,
    rank_from_scores,
    rank_one,
)
from purekge.exc import ConfigError, EmptyInput
from purekge.graph import FilterIndex
from purekge.model import ModelKind, ModelParams, init_params
from purekge.typevars import Triple

from .conftest import ALL_KINDS


def planted_distmult():
    """
    A one-dimensional DistMult model where head scores for ``(?, 0, 3)``
    are simply the entity values
    """
    return ModelParams(
        ModelKind.DISTMULT,
        1,
        np.array([[5.0], [8.0], [2.0], [1.0]]),
        np.array([[1.0]]),
    )


@pytest.mark.parametrize(
    "scores, true_index, exclude, expected",
    [
        ([3.0, 9.0, 7.0, 7.0], 0, None, 4),
        ([9.0, 7.0, 7.0, 3.0], 3, None, 4),
        ([5.0, 8.0, 2.0], 0, [1], 1),
        ([0.0] * 5, 2, None, 3),
        ([1.0, 1.0], 0, None, 1),
        ([4.0], 0, None, 1),
        ([4.0, 5.0], 0, [0, 1], 1),
    ],
)
def test_rank_from_scores(scores, true_index, exclude, expected):
    exclude = None if exclude is None else np.asarray(exclude)
    result = rank_from_scores(np.asarray(scores), true_index, exclude)
    assert result == expected


def test_rank_is_permutation_and_translation_invariant():
    rng = np.random.default_rng(5)
    for _ in range(50):
        scores = rng.normal(size=20).round(1)
        true_index = int(rng.integers(0, 20))
        expected = rank_from_scores(scores, true_index)
        order = rng.permutation(20)
        moved = int(np.flatnonzero(order == true_index)[0])
        assert rank_from_scores(scores[order], moved) == expected
        assert rank_from_scores(scores + 100.0, true_index) == expected


def test_planted_filter():
    params = planted_distmult()
    query = RankQuery(Triple(0, 0, 3), Side.HEAD)
    index = FilterIndex([Triple(1, 0, 3), Triple(0, 0, 3)])
    assert rank_one(params, query) == 2
    assert rank_one(params, query, index) == 1
    assert brute_force_rank(params, query) == 2
    assert brute_force_rank(params, query, index) == 1


def test_single_entity_ranks_first():
    params = init_params(ModelKind.COMPLEX, 1, 1, 4, seed=0)
    for side in Side:
        assert rank_one(params, RankQuery(Triple(0, 0, 0), side)) == 1


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_filtered_never_worse_than_raw(kind):
    rng = np.random.default_rng(11)
    params = init_params(kind, 15, 3, 4, seed=2)
    known = [
        Triple(int(h), int(r) % 3, int(t))
        for h, r, t in rng.integers(0, 15, (60, 3))
    ]
    index = FilterIndex(known)
    for triple in known[:20]:
        for side in Side:
            query = RankQuery(triple, side)
            assert rank_one(params, query, index) <= rank_one(params, query)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_batched_rank_matches_brute_force(kind):
    rng = np.random.default_rng(len(kind.value))
    params = init_params(kind, 12, 3, 4, seed=7)
    triples = [
        Triple(int(h), int(r), int(t))
        for h, r, t in zip(
            rng.integers(0, 12, 84),
            rng.integers(0, 3, 84),
            rng.integers(0, 12, 84),
        )
    ]
    index = FilterIndex(triples)
    for triple in triples:
        for side in Side:
            query = RankQuery(triple, side)
            assert rank_one(params, query) == brute_force_rank(params, query)
            assert rank_one(params, query, index) == brute_force_rank(
                params, query, index
            )


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_batched_rank_matches_brute_force_on_ties(kind):
    # permuted rows and a constant relation give many scores which are
    # equal in exact arithmetic
    rng = np.random.default_rng(3)
    params = init_params(kind, 12, 1, 4, seed=0)
    width = params.entity_emb.shape[1]
    base = np.resize([0.1, 0.2, 0.7, 0.3], width)
    params.entity_emb[:] = [rng.permutation(base) for _ in range(12)]
    params.relation_emb[:] = 0.3
    triples = [Triple(h, 0, t) for h in range(12) for t in range(12)]
    index = FilterIndex(triples[::5])
    for triple in triples:
        for side in Side:
            query = RankQuery(triple, side)
            assert rank_one(params, query) == brute_force_rank(params, query)
            assert rank_one(params, query, index) == brute_force_rank(
                params, query, index
            )


def test_rank_counts_last_bit_differences_as_ties():
    near = np.nextafter(0.507, 0.0)
    scores = np.array([0.507, near, 1.0, 0.1])
    assert rank_from_scores(scores, 0) == 2
    assert rank_from_scores(scores, 1) == 2
    assert rank_from_scores(np.array([0.0, 1e-11, -1e-11]), 0) == 2


def test_compute_metrics():
    mr, mrr, hits = compute_metrics([1, 2, 4])
    assert mr == pytest.approx(7 / 3)
    assert mrr == pytest.approx((1 + 0.5 + 0.25) / 3)
    assert hits == pytest.approx({1: 1 / 3, 3: 2 / 3, 10: 1.0})


def test_compute_metrics_perfect():
    mr, mrr, hits = compute_metrics([1] * 7)
    assert (mr, mrr) == (1.0, 1.0)
    assert all(value == 1.0 for value in hits.values())


def test_compute_metrics_empty():
    with pytest.raises(EmptyInput):
        compute_metrics([])


def test_side_policy_parse():
    assert SidePolicy.parse("head") == SidePolicy.HEAD_ONLY
    assert SidePolicy.parse(" Tail ") == SidePolicy.TAIL_ONLY
    assert SidePolicy.parse("both") == SidePolicy.BOTH_AVERAGED
    assert SidePolicy.parse("both_averaged") == SidePolicy.BOTH_AVERAGED
    with pytest.raises(ConfigError):
        SidePolicy.parse("middle")


def test_evaluate_planted():
    params = planted_distmult()
    index = FilterIndex([Triple(1, 0, 3), Triple(0, 0, 3)])
    raw = evaluate(params, [Triple(0, 0, 3)], Setting.RAW)
    filtered = evaluate(
        params, [Triple(0, 0, 3)], Setting.FILTERED, filter_index=index
    )
    assert raw.ranks == (2,)
    assert filtered.ranks == (1,)
    assert filtered.mrr == 1.0


def test_evaluate_both_sides():
    params = init_params(ModelKind.TRANSE_L2, 6, 2, 3, seed=1)
    triples = [Triple(0, 0, 1), Triple(2, 1, 3), Triple(4, 0, 5)]
    report = evaluate(
        params, triples, Setting.RAW, SidePolicy.BOTH_AVERAGED
    )
    assert len(report.ranks) == 6
    assert report.query_indices == (0, 0, 1, 1, 2, 2)
    head = evaluate(params, triples, Setting.RAW, SidePolicy.HEAD_ONLY)
    tail = evaluate(params, triples, Setting.RAW, SidePolicy.TAIL_ONLY)
    assert report.ranks[0::2] == head.ranks
    assert report.ranks[1::2] == tail.ranks


def test_evaluate_threads_give_same_report():
    params = init_params(ModelKind.ROTATE, 10, 2, 4, seed=1)
    triples = [Triple(i, i % 2, (i * 3) % 10) for i in range(10)]
    index = FilterIndex(triples)
    single = evaluate(
        params, triples, Setting.FILTERED, SidePolicy.BOTH_AVERAGED, index, 1
    )
    threaded = evaluate(
        params, triples, Setting.FILTERED, SidePolicy.BOTH_AVERAGED, index, 2
    )
    assert single == threaded


def test_evaluate_empty():
    params = planted_distmult()
    with pytest.raises(EmptyInput):
        evaluate(params, [], Setting.RAW)


def test_evaluate_filtered_needs_index():
    params = planted_distmult()
    with pytest.raises(ConfigError):
        evaluate(params, [Triple(0, 0, 3)], Setting.FILTERED)


def test_report_as_text():
    report = RankReport.from_ranks(
        [1, 2, 4], Setting.FILTERED, SidePolicy.HEAD_ONLY
    )
    assert report.as_text() == (
        "setting=filtered\n"
        "side=head_only\n"
        "queries=3\n"
        "MR=2.3333\n"
        "MRR=0.5833\n"
        "Hits@1=0.3333\n"
        "Hits@3=0.6667\n"
        "Hits@10=1.0000\n"
    )


def test_report_write_ranks():
    report = RankReport.from_ranks(
        [3, 1, 2, 2], Setting.RAW, SidePolicy.BOTH_AVERAGED, [0, 0, 1, 1]
    )
    stream = StringIO()
    report.write_ranks(stream)
    assert stream.getvalue() == "0\t3\n0\t1\n1\t2\n1\t2\n"
