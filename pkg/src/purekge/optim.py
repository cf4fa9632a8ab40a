"""
Sparse optimizers applying :py:class:`~purekge.model.SparseGrad` updates.

Only the rows referenced by a gradient are touched. Adam keeps its moment
estimates per row and allocates them lazily, moments of rows which are not
part of a batch are not decayed. Bias correction uses the global step
counter.

Both optimizers mutate :py:class:`~purekge.model.ModelParams` in place.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple, Union

import numpy as np

from purekge.const import (
    DEFAULT_ADAM_BETA1,
    DEFAULT_ADAM_BETA2,
    DEFAULT_ADAM_EPS,
    DEFAULT_OPTIMIZER,
)
from purekge.exc import UnknownOptimizer
from purekge.model import ModelKind, ModelParams, RowKind, SparseGrad
from purekge.typevars import FloatArray, IdArray

LOG = logging.getLogger(__name__)

TBetas = Tuple[float, float]


def sgd_step(params: ModelParams, grad: SparseGrad, lr: float) -> None:
    """
    Plain gradient descent on the touched rows: ``row <- row - lr * g``
    """
    params.entity_emb[grad.entity_ids] -= lr * grad.entity_rows
    params.relation_emb[grad.relation_ids] -= lr * grad.relation_rows


@dataclass
class AdamState:
    """
    First and second moment estimates for one parameter set.

    The moment tables of a parameter table are allocated on its first
    update. Rows which never received a gradient keep zero moments.
    """

    first: Dict[RowKind, FloatArray] = field(default_factory=dict)
    second: Dict[RowKind, FloatArray] = field(default_factory=dict)

    def moments(
        self, kind: RowKind, shape: Tuple[int, ...]
    ) -> Tuple[FloatArray, FloatArray]:
        """
        Return the moment tables for *kind*, allocating them on first use
        """
        if kind not in self.first:
            self.first[kind] = np.zeros(shape)
            self.second[kind] = np.zeros(shape)
        return self.first[kind], self.second[kind]


def _adam_table(
    table: FloatArray,
    ids: IdArray,
    rows: FloatArray,
    kind: RowKind,
    state: AdamState,
    lr: float,
    betas: TBetas,
    eps: float,
    step_count: int,
) -> None:
    if ids.size == 0:
        return
    beta1, beta2 = betas
    first, second = state.moments(kind, table.shape)
    first[ids] = beta1 * first[ids] + (1.0 - beta1) * rows
    second[ids] = beta2 * second[ids] + (1.0 - beta2) * rows * rows
    first_hat = first[ids] / (1.0 - beta1**step_count)
    second_hat = second[ids] / (1.0 - beta2**step_count)
    table[ids] -= lr * first_hat / (np.sqrt(second_hat) + eps)


def adam_step(
    params: ModelParams,
    grad: SparseGrad,
    state: AdamState,
    lr: float,
    betas: TBetas = (DEFAULT_ADAM_BETA1, DEFAULT_ADAM_BETA2),
    eps: float = DEFAULT_ADAM_EPS,
    step_count: int = 1,
) -> None:
    """
    Apply one sparse Adam update.

    :param state: Moment estimates, updated in place
    :param step_count: The 1-based global step number used for bias
        correction
    """
    if step_count < 1:
        raise ValueError(f"Adam steps are counted from 1, got {step_count}")
    _adam_table(
        params.entity_emb,
        grad.entity_ids,
        grad.entity_rows,
        RowKind.ENTITY,
        state,
        lr,
        betas,
        eps,
        step_count,
    )
    _adam_table(
        params.relation_emb,
        grad.relation_ids,
        grad.relation_rows,
        RowKind.RELATION,
        state,
        lr,
        betas,
        eps,
        step_count,
    )


def project_entities(params: ModelParams, ids: IdArray) -> None:
    """
    Rescale the entity rows *ids* to unit L2 norm. Zero rows stay zero.
    """
    rows = params.entity_emb[ids]
    norms = np.sqrt((rows * rows).sum(axis=1))[:, None]
    params.entity_emb[ids] = np.divide(
        rows, norms, out=rows.copy(), where=norms > 0
    )


def project_all_entities(params: ModelParams, tolerance: float = 1e-12) -> int:
    """
    Rescale every entity row whose L2 norm differs from 1 by more than
    *tolerance*. Rows already on the unit sphere keep their exact bits.

    :returns: The number of rescaled rows
    """
    norms = np.sqrt((params.entity_emb * params.entity_emb).sum(axis=1))
    off_unit = np.flatnonzero(np.abs(norms - 1.0) > tolerance)
    if off_unit.size:
        project_entities(params, off_unit)
    return int(off_unit.size)


def symmetrize_matrices(params: ModelParams, ids: IdArray) -> None:
    """
    Replace the RESCAL matrices of the relation rows *ids* by
    ``(M + M^T) / 2``
    """
    dim = params.dim
    matrices = params.relation_emb[ids].reshape(-1, dim, dim)
    symmetric = (matrices + matrices.transpose(0, 2, 1)) / 2.0
    params.relation_emb[ids] = symmetric.reshape(-1, dim * dim)


class SGD:
    """
    Stateful wrapper around :py:func:`sgd_step`
    """

    name = "sgd"

    def __init__(self, lr: float) -> None:
        self.lr = lr
        self.steps = 0

    def __repr__(self) -> str:
        return f"SGD(lr={self.lr!r})"

    def step(self, params: ModelParams, grad: SparseGrad) -> None:
        self.steps += 1
        sgd_step(params, grad, self.lr)


class Adam:
    """
    Stateful wrapper around :py:func:`adam_step` counting global steps
    """

    name = "adam"

    def __init__(
        self,
        lr: float,
        betas: TBetas = (DEFAULT_ADAM_BETA1, DEFAULT_ADAM_BETA2),
        eps: float = DEFAULT_ADAM_EPS,
    ) -> None:
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.steps = 0
        self.state = AdamState()

    def __repr__(self) -> str:
        return f"Adam(lr={self.lr!r}, betas={self.betas!r}, eps={self.eps!r})"

    def step(self, params: ModelParams, grad: SparseGrad) -> None:
        self.steps += 1
        adam_step(
            params,
            grad,
            self.state,
            self.lr,
            self.betas,
            self.eps,
            self.steps,
        )


TOptimizer = Union[SGD, Adam]


def create(
    name: str = DEFAULT_OPTIMIZER,
    lr: float = 1e-3,
    betas: TBetas = (DEFAULT_ADAM_BETA1, DEFAULT_ADAM_BETA2),
    eps: float = DEFAULT_ADAM_EPS,
) -> TOptimizer:
    """
    Create an optimizer by name (``"sgd"`` or ``"adam"``)

    :raises purekge.exc.UnknownOptimizer: For any other name
    """
    wanted = name.strip().lower()
    if wanted == "sgd":
        return SGD(lr)
    if wanted == "adam":
        return Adam(lr, betas, eps)
    raise UnknownOptimizer(
        f"Unknown optimizer {name!r}. Known optimizers: adam, sgd"
    )


def post_step(
    params: ModelParams,
    grad: SparseGrad,
    project: bool = False,
    rescal_symmetric: bool = False,
) -> None:
    """
    Apply the constraints which follow an optimizer step to the touched rows.

    :param project: Renormalise touched entity rows to unit length
    :param rescal_symmetric: Replace touched RESCAL matrices by
        ``(M + M^T) / 2``
    """
    if project:
        project_entities(params, grad.entity_ids)
    if rescal_symmetric and params.kind == ModelKind.RESCAL:
        symmetrize_matrices(params, grad.relation_ids)
