"""
Finite-difference checks for the analytic gradients in :py:mod:`purekge.model`.

Example::

    >>> from purekge.model import ModelKind, grad, init_params
    >>> from purekge.typevars import Triple
    >>> params = init_params(ModelKind.DISTMULT, 3, 1, 4, seed=1)
    >>> _, analytic = grad(params, Triple(0, 0, 2), 1)
    >>> numeric = numeric_gradient(params, Triple(0, 0, 2), 1)
    >>> max_relative_error(analytic, numeric) < 1e-4
    True
"""

from typing import Tuple

import numpy as np

from purekge.model import ModelParams, SparseGrad, loss_and_grad
from purekge.typevars import FloatArray, IdArray, Triple


def _loss(
    params: ModelParams, triple: IdArray, label: FloatArray, l2: float
) -> float:
    losses, _, _ = loss_and_grad(params, triple, label, l2)
    return float(losses[0])


def _central_differences(
    params: ModelParams,
    table: FloatArray,
    ids: IdArray,
    triple: IdArray,
    label: FloatArray,
    eps: float,
    l2_lambda: float,
) -> FloatArray:
    # pylint: disable=too-many-arguments
    rows = np.zeros((ids.size, table.shape[1]))
    for row_index, id_ in enumerate(ids):
        for column in range(table.shape[1]):
            original = table[id_, column]
            table[id_, column] = original + eps
            upper = _loss(params, triple, label, l2_lambda)
            table[id_, column] = original - eps
            lower = _loss(params, triple, label, l2_lambda)
            table[id_, column] = original
            rows[row_index, column] = (upper - lower) / (2.0 * eps)
    return rows


def numeric_gradient(
    params: ModelParams,
    triple: Triple,
    y: int,
    eps: float = 1e-5,
    l2_lambda: float = 0.0,
) -> SparseGrad:
    """
    Estimate the gradient of the logistic loss of one triple by central
    differences over every coordinate of the touched rows.

    *params* is not modified. The result uses the same row layout as
    :py:func:`purekge.model.grad` so both can be compared directly.
    """
    work = params.copy()
    h, r, t = (int(value) for value in triple)
    encoded = np.asarray([[h, r, t]], dtype=np.int64)
    label = np.asarray([y], dtype=np.float64)
    entity_ids = np.unique(np.asarray([h, t], dtype=np.int64))
    relation_ids = np.asarray([r], dtype=np.int64)
    return SparseGrad(
        entity_ids,
        _central_differences(
            work, work.entity_emb, entity_ids, encoded, label, eps, l2_lambda
        ),
        relation_ids,
        _central_differences(
            work,
            work.relation_emb,
            relation_ids,
            encoded,
            label,
            eps,
            l2_lambda,
        ),
    )


def _aligned(
    analytic: SparseGrad, numeric: SparseGrad
) -> Tuple[FloatArray, FloatArray]:
    if not (
        np.array_equal(analytic.entity_ids, numeric.entity_ids)
        and np.array_equal(analytic.relation_ids, numeric.relation_ids)
    ):
        raise ValueError("Gradients cover different parameter rows")
    return (
        np.concatenate(
            [analytic.entity_rows.ravel(), analytic.relation_rows.ravel()]
        ),
        np.concatenate(
            [numeric.entity_rows.ravel(), numeric.relation_rows.ravel()]
        ),
    )


def max_relative_error(
    analytic: SparseGrad, numeric: SparseGrad, floor: float = 1e-6
) -> float:
    """
    Return ``max |a - n| / max(|a|, |n|, floor)`` over all coordinates.

    :raises ValueError: If the two gradients do not touch the same rows
    """
    left, right = _aligned(analytic, numeric)
    if not left.size:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(left), np.abs(right)), floor)
    return float((np.abs(left - right) / scale).max())
