"""
RESCAL: a bilinear model with a full ``d x d`` matrix per relation.

    score(h, r, t) = h^T M_r t

The matrix is stored row-major as ``d*d`` values. It is not symmetric unless
the trainer is asked to keep it symmetric.
"""

from typing import Tuple

import numpy as np

from purekge.plugins.models import ScoringFunction, TPartials
from purekge.typevars import FloatArray

IDENTIFIER = "RESCAL"
CODE = 4


def as_matrices(R: FloatArray, dim: int) -> FloatArray:
    """
    Reshape flat relation rows to ``(..., d, d)`` matrices

    >>> as_matrices(np.arange(4.0), 2).tolist()
    [[0.0, 1.0], [2.0, 3.0]]
    """
    return R.reshape(R.shape[:-1] + (dim, dim))


class Rescal(ScoringFunction):
    """
    Bilinear model with unconstrained relation matrices
    """

    IDENTIFIER = IDENTIFIER

    def relation_width(self, dim: int) -> int:
        return dim * dim

    @staticmethod
    def _unpack(H: FloatArray, R: FloatArray) -> Tuple[int, FloatArray]:
        dim = H.shape[-1]
        return dim, as_matrices(R, dim)

    def scores(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> FloatArray:
        _, matrices = self._unpack(H, R)
        return np.einsum("bi,bij,bj->b", H, matrices, T)  # type: ignore

    def partials(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> TPartials:
        dim, matrices = self._unpack(H, R)
        d_head = np.einsum("bij,bj->bi", matrices, T)
        d_tail = np.einsum("bi,bij->bj", H, matrices)
        d_matrix = (H[:, :, None] * T[:, None, :]).reshape(-1, dim * dim)
        return d_head, d_matrix, d_tail

    def heads(self, E: FloatArray, r: FloatArray, t: FloatArray) -> FloatArray:
        matrix = as_matrices(r, E.shape[-1])
        return E @ (matrix @ t)  # type: ignore

    def tails(self, h: FloatArray, r: FloatArray, E: FloatArray) -> FloatArray:
        matrix = as_matrices(r, E.shape[-1])
        return E @ (h @ matrix)  # type: ignore


def create() -> Rescal:
    """
    Create a new RESCAL scorer
    """
    return Rescal()
