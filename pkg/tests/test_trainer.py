"""
Tests for negative sampling, batch losses and the training loop
"""

import logging
from dataclasses import replace

import numpy as np
import pytest

from purekge import optim
from purekge.evaluator import Setting, SidePolicy, evaluate
from purekge.exc import (
    ConfigError,
    DivergenceError,
    EmptyInput,
    NonFiniteLoss,
    UnknownOptimizer,
)
from purekge.graph import FilterIndex
from purekge.model import ModelKind, grad, init_params, score_triples
from purekge.trainer import (
    L2Mode,
    LabeledTriple,
    TrainConfig,
    batch_loss,
    corrupt_batch,
    sample_negatives,
    train,
)
from purekge.typevars import Triple

from .conftest import ALL_KINDS

#: Settings which let every model memorise the toy graphs within seconds
TOY = dict(
    dim=16,
    batch_size=8,
    negatives=8,
    learning_rate=0.05,
    seed=1,
)


def test_config_defaults():
    config = TrainConfig("distmult")
    assert config.model == ModelKind.DISTMULT
    assert config.dim == 400
    assert config.negatives == 16
    assert config.optimizer == "adam"
    assert config.learning_rate == 1e-3
    assert config.betas == (0.9, 0.999)
    assert config.effective_l2_mode == L2Mode.PENALTY


def test_config_transe_projects_by_default():
    assert (
        TrainConfig(ModelKind.TRANSE_L1).effective_l2_mode
        == L2Mode.PROJECT_ENTITIES
    )
    explicit = TrainConfig(ModelKind.TRANSE_L1, l2_mode="none")
    assert explicit.effective_l2_mode == L2Mode.NONE


@pytest.mark.parametrize(
    "changes",
    [
        {"epochs": 0},
        {"batch_size": 0},
        {"negatives": 0},
        {"dim": 0},
        {"learning_rate": 0.0},
        {"adam_beta1": 1.0},
        {"adam_eps": 0.0},
        {"l2_lambda": -1.0},
        {"l2_mode": "dropout"},
        {"model": "HolE"},
    ],
)
def test_config_rejects(changes):
    with pytest.raises(ConfigError):
        TrainConfig(**{"model": ModelKind.DISTMULT, **changes})


def test_config_unknown_optimizer():
    with pytest.raises(UnknownOptimizer):
        TrainConfig(ModelKind.DISTMULT, optimizer="adagrad")


def test_config_replace_validates():
    config = TrainConfig(ModelKind.DISTMULT)
    with pytest.raises(ConfigError):
        replace(config, epochs=0)


def test_sample_negatives_change_one_side():
    rng = np.random.default_rng(0)
    triple = Triple(3, 1, 7)
    negatives = sample_negatives(triple, 4, 50, rng)
    assert len(negatives) == 4
    for item in negatives:
        assert item.y == -1
        assert not item.degenerate
        h, r, t = item.triple
        assert r == 1
        assert (h != 3) + (t != 7) == 1


def test_sample_negatives_two_entities():
    rng = np.random.default_rng(0)
    negatives = sample_negatives(Triple(0, 0, 1), 20, 2, rng)
    assert {item.triple for item in negatives} <= {
        Triple(1, 0, 1),
        Triple(0, 0, 0),
    }
    assert Triple(1, 0, 1) in {item.triple for item in negatives}


def test_sample_negatives_single_entity(caplog):
    rng = np.random.default_rng(0)
    with caplog.at_level(logging.WARNING, logger="purekge.trainer"):
        negatives = sample_negatives(Triple(0, 0, 0), 3, 1, rng)
    assert negatives == [LabeledTriple(Triple(0, 0, 0), -1, True)] * 3
    assert "only 1 entity" in caplog.text


def test_sample_negatives_avoids_known_triples():
    rng = np.random.default_rng(0)
    known = FilterIndex(
        [Triple(0, 0, 1), Triple(2, 0, 1), Triple(0, 0, 3), Triple(0, 0, 2)]
    )
    negatives = sample_negatives(Triple(0, 0, 1), 200, 5, rng, known)
    assert not any(known.contains(item.triple) for item in negatives)


def test_corrupt_batch_layout():
    rng = np.random.default_rng(0)
    positives = np.asarray([[0, 0, 1], [2, 1, 3]])
    negatives = corrupt_batch(positives, 3, 10, rng)
    assert negatives.shape == (6, 3)
    assert (negatives[:3, 1] == 0).all()
    assert (negatives[3:, 1] == 1).all()


def test_corrupt_batch_deterministic():
    positives = np.asarray([[0, 0, 1], [2, 1, 3]])
    first = corrupt_batch(positives, 5, 10, np.random.default_rng(4))
    second = corrupt_batch(positives, 5, 10, np.random.default_rng(4))
    np.testing.assert_array_equal(first, second)


def test_corrupt_batch_head_tail_balance():
    positives = np.zeros((1000, 3), dtype=np.int64)
    negatives = corrupt_batch(positives, 100, 100, np.random.default_rng(7))
    assert negatives.shape == (100_000, 3)
    head_changed = negatives[:, 0] != 0
    tail_changed = negatives[:, 2] != 0
    assert not (head_changed & tail_changed).any()
    # a redrawn corruption keeps its side, so the side is visible in
    # every row
    assert (head_changed | tail_changed).all()
    frequency = head_changed.mean()
    assert 0.48 <= frequency <= 0.52


def test_batch_loss_at_zero_score():
    params = init_params(ModelKind.DISTMULT, 2, 1, 3, seed=0)
    params.entity_emb[:] = 0.0
    loss, _ = batch_loss(params, [LabeledTriple(Triple(0, 0, 1), 1)])
    assert loss == pytest.approx(np.log(2.0))


def test_batch_gradient_is_mean_of_triple_gradients():
    params = init_params(ModelKind.COMPLEX, 5, 2, 3, seed=2)
    batch = [
        LabeledTriple(Triple(0, 0, 1), 1),
        LabeledTriple(Triple(0, 1, 2), -1),
        LabeledTriple(Triple(3, 0, 1), -1),
        LabeledTriple(Triple(4, 1, 4), 1),
    ]
    loss, gradient = batch_loss(params, batch, l2_lambda=0.01)

    expected_loss = 0.0
    expected = {}
    for item in batch:
        value, single = grad(params, item.triple, item.y, l2_lambda=0.01)
        expected_loss += value / len(batch)
        for key, row in single.as_dict().items():
            expected[key] = expected.get(key, 0.0) + row / len(batch)

    assert loss == pytest.approx(expected_loss)
    result = gradient.as_dict()
    assert set(result) == set(expected)
    for key, row in expected.items():
        np.testing.assert_allclose(result[key], row, rtol=1e-10, atol=1e-14)


def test_batch_loss_empty():
    params = init_params(ModelKind.DISTMULT, 2, 1, 3, seed=0)
    with pytest.raises(EmptyInput):
        batch_loss(params, [])


def test_batch_loss_non_finite():
    params = init_params(ModelKind.DISTMULT, 3, 1, 3, seed=0)
    params.entity_emb[2] = np.nan
    batch = [
        LabeledTriple(Triple(0, 0, 1), 1),
        LabeledTriple(Triple(0, 0, 2), -1),
    ]
    with np.errstate(all="ignore"):
        with pytest.raises(NonFiniteLoss) as exc:
            batch_loss(params, batch)
    assert exc.value.triple == Triple(0, 0, 2)
    assert exc.value.kind == "DistMult"


def test_train_empty():
    with pytest.raises(EmptyInput):
        train([], TrainConfig(ModelKind.DISTMULT, dim=4, epochs=1))


def test_train_non_finite_init_has_no_last_good():
    config = TrainConfig(ModelKind.DISTMULT, dim=4, epochs=3)
    init = init_params(ModelKind.DISTMULT, 3, 1, 4, seed=0)
    init.entity_emb[1] = np.nan
    with np.errstate(all="ignore"):
        with pytest.raises(DivergenceError) as exc:
            train([Triple(0, 0, 1)], config, init=init)
    assert exc.value.epoch == 1
    assert exc.value.last_good is None


def test_train_divergence_in_first_epoch_keeps_init():
    config = TrainConfig(
        ModelKind.DISTMULT,
        dim=4,
        epochs=3,
        batch_size=1,
        negatives=1,
        optimizer="sgd",
    )
    init = init_params(ModelKind.DISTMULT, 3, 1, 4, seed=0)
    init.entity_emb[:] = 1e200
    init.relation_emb[:] = 1e200
    with np.errstate(all="ignore"):
        with pytest.raises(DivergenceError) as exc:
            train([Triple(0, 0, 1), Triple(1, 0, 2)], config, init=init)
    assert exc.value.epoch == 1
    assert exc.value.last_good is not None
    assert exc.value.last_good.checksum() == init.checksum()


def test_train_rejects_mismatched_init():
    config = TrainConfig(ModelKind.DISTMULT, dim=4, epochs=1)
    init = init_params(ModelKind.COMPLEX, 3, 1, 4, seed=0)
    with pytest.raises(ConfigError):
        train([Triple(0, 0, 1)], config, init=init)


def test_train_same_seed_same_checksum(toy_pairs):
    vocab, triples = toy_pairs
    config = TrainConfig(ModelKind.COMPLEX, epochs=3, **TOY)
    first, first_report = train(triples, config, vocab.n_entities)
    second, second_report = train(triples, config, vocab.n_entities)
    assert first_report.checksum == second_report.checksum
    assert first_report.epoch_losses == second_report.epoch_losses
    assert first.checksum() == first_report.checksum


def test_train_seed_matters(toy_pairs):
    vocab, triples = toy_pairs
    config = TrainConfig(ModelKind.DISTMULT, epochs=2, **TOY)
    _, first = train(triples, config, vocab.n_entities)
    _, second = train(triples, replace(config, seed=2), vocab.n_entities)
    assert first.checksum != second.checksum


def test_train_does_not_modify_init(toy_pairs):
    vocab, triples = toy_pairs
    config = TrainConfig(ModelKind.DISTMULT, epochs=1, **TOY)
    init = init_params(ModelKind.DISTMULT, vocab.n_entities, 2, 16, seed=3)
    before = init.checksum()
    train(triples, config, init=init)
    assert init.checksum() == before


def test_resume_matches_uninterrupted_run(toy_pairs):
    # SGD keeps no state between steps, so a resumed run is exact
    vocab, triples = toy_pairs
    config = TrainConfig(
        ModelKind.DISTMULT, epochs=4, optimizer="sgd", **TOY
    )
    _, full = train(triples, config, vocab.n_entities)
    halfway, _ = train(
        triples, replace(config, epochs=2), vocab.n_entities
    )
    _, resumed = train(
        triples, config, vocab.n_entities, init=halfway, start_epoch=3
    )
    assert resumed.first_epoch == 3
    assert resumed.epochs_run == 2
    assert resumed.checksum == full.checksum
    assert resumed.epoch_losses == full.epoch_losses[2:]


def test_epoch_callback(toy_pairs):
    vocab, triples = toy_pairs
    seen = []
    config = TrainConfig(ModelKind.RESCAL, epochs=3, **TOY)
    _, report = train(
        triples,
        config,
        vocab.n_entities,
        on_epoch_end=lambda epoch, params, loss: seen.append((epoch, loss)),
    )
    assert [epoch for epoch, _ in seen] == [1, 2, 3]
    assert tuple(loss for _, loss in seen) == report.epoch_losses


def test_projection_keeps_unit_norms(toy_pairs):
    vocab, triples = toy_pairs
    norms = []

    def check(epoch, params, loss):
        norms.append(np.linalg.norm(params.entity_emb, axis=1))

    config = TrainConfig(ModelKind.TRANSE_L2, epochs=3, **TOY)
    train(triples, config, vocab.n_entities, on_epoch_end=check)
    assert len(norms) == 3
    for values in norms:
        np.testing.assert_allclose(values, 1.0, atol=1e-9)


def test_projection_covers_untouched_entities():
    norms = []

    def check(epoch, params, loss):
        norms.append(np.linalg.norm(params.entity_emb, axis=1))

    config = TrainConfig(
        ModelKind.TRANSE_L2, dim=8, epochs=2, batch_size=1, negatives=1
    )
    train([Triple(0, 0, 1)], config, n_entities=50, on_epoch_end=check)
    assert len(norms) == 2
    for values in norms:
        np.testing.assert_allclose(values, 1.0, atol=1e-9)


def test_projection_applies_to_resumed_params():
    config = TrainConfig(
        ModelKind.TRANSE_L1, dim=4, epochs=2, batch_size=1, negatives=1
    )
    init = init_params(ModelKind.TRANSE_L1, 20, 1, 4, seed=5)
    init.entity_emb[7] *= 10.0
    params, _ = train([Triple(0, 0, 1)], config, init=init, start_epoch=2)
    np.testing.assert_allclose(
        np.linalg.norm(params.entity_emb, axis=1), 1.0, atol=1e-9
    )


def test_optimizer_steps_do_not_share_state():
    batches = [
        [
            LabeledTriple(Triple(0, 0, 1), 1),
            LabeledTriple(Triple(0, 0, 3), -1),
        ],
        [
            LabeledTriple(Triple(2, 1, 3), 1),
            LabeledTriple(Triple(1, 1, 3), -1),
        ],
        [
            LabeledTriple(Triple(1, 0, 2), 1),
            LabeledTriple(Triple(1, 0, 0), -1),
        ],
    ]
    init_a = init_params(ModelKind.COMPLEX, 4, 2, 3, seed=1)
    init_b = init_params(ModelKind.COMPLEX, 4, 2, 3, seed=2)

    def sequential(init):
        params = init.copy()
        optimizer = optim.create("adam", lr=0.1)
        for batch in batches:
            optimizer.step(params, batch_loss(params, batch)[1])
        return params

    expected_a = sequential(init_a)
    expected_b = sequential(init_b)

    params_a, params_b = init_a.copy(), init_b.copy()
    opt_a = optim.create("adam", lr=0.1)
    opt_b = optim.create("adam", lr=0.1)
    for batch in batches:
        # reads of the other model between steps must not matter
        batch_loss(params_b, batches[0])
        opt_a.step(params_a, batch_loss(params_a, batch)[1])
        score_triples(params_a, [Triple(3, 1, 0)])
        opt_b.step(params_b, batch_loss(params_b, batch)[1])

    assert params_a.checksum() == expected_a.checksum()
    assert params_b.checksum() == expected_b.checksum()


def test_wall_time_cap(toy_pairs, caplog):
    vocab, triples = toy_pairs
    config = TrainConfig(
        ModelKind.DISTMULT, epochs=50, max_wall_time=1e-9, **TOY
    )
    with caplog.at_level(logging.WARNING, logger="purekge.trainer"):
        _, report = train(triples, config, vocab.n_entities)
    assert report.epochs_run == 1
    assert report.stopped_early
    assert "wall time" in caplog.text


def test_parallel_mode_warns(toy_pairs, caplog):
    vocab, triples = toy_pairs
    config = TrainConfig(ModelKind.DISTMULT, epochs=2, **TOY)
    with caplog.at_level(logging.WARNING, logger="purekge.trainer"):
        params, report = train(triples, config, vocab.n_entities, workers=2)
    assert "not reproducible" in caplog.text
    assert report.epochs_run == 2
    assert params.is_finite()


def test_single_entity_graph(caplog):
    config = TrainConfig(ModelKind.DISTMULT, dim=4, epochs=2)
    with caplog.at_level(logging.WARNING, logger="purekge.trainer"):
        params, report = train([Triple(0, 0, 0)], config)
    assert params.n_entities == 1
    assert report.epochs_run == 2
    assert "single entity" in caplog.text


def test_memorise_symmetric_graph(toy_symmetric):
    vocab, triples = toy_symmetric
    config = TrainConfig(
        ModelKind.DISTMULT,
        dim=16,
        epochs=200,
        batch_size=4,
        negatives=8,
        learning_rate=0.05,
        l2_mode="none",
        filter_false_negatives=True,
        seed=0,
    )
    _, report = train(triples, config, vocab.n_entities)
    assert report.final_loss < 0.05


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_loss_decreases(kind, toy_pairs):
    vocab, triples = toy_pairs
    config = TrainConfig(kind, epochs=10, **TOY)
    _, report = train(triples, config, vocab.n_entities)
    assert report.epoch_losses[-1] < report.epoch_losses[0]


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_memorise_toy_pairs(kind, toy_pairs):
    vocab, triples = toy_pairs
    config = TrainConfig(
        kind, epochs=200, filter_false_negatives=True, **TOY
    )
    params, report = train(triples, config, vocab.n_entities)

    known = FilterIndex(triples)
    result = evaluate(
        params, triples, Setting.FILTERED, SidePolicy.HEAD_ONLY, known
    )
    assert result.mrr >= 0.95, report.epoch_losses[-5:]

    positives = np.asarray(triples)
    negatives = corrupt_batch(
        positives, 4, vocab.n_entities, np.random.default_rng(123), known
    )
    assert (
        score_triples(params, positives).mean()
        > score_triples(params, negatives).mean()
    )
