"""
This module provides common code for translational distance models.

A translational model embeds a relation as a vector *r* and scores a triple
by how close ``h + r`` lands to ``t``:

    score(h, r, t) = -||h + r - t||_p
"""

import numpy as np

from purekge.plugins.models import ScoringFunction, TPartials
from purekge.typevars import FloatArray


class TranslationalScoring(ScoringFunction):
    """
    Negative ``p``-norm of the translation residual ``h + r - t``.

    :param order: The norm order. Only ``1`` and ``2`` are supported.
    """

    def __init__(self, order: int) -> None:
        if order not in (1, 2):
            raise ValueError(f"Unsupported norm order: {order!r}")
        self.order = order

    def _norm(self, residual: FloatArray) -> FloatArray:
        if self.order == 1:
            return np.abs(residual).sum(axis=-1)  # type: ignore
        return np.sqrt((residual * residual).sum(axis=-1))  # type: ignore

    def scores(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> FloatArray:
        return -self._norm((H + R) - T)

    def partials(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> TPartials:
        residual = (H + R) - T
        if self.order == 1:
            # np.sign(0) == 0 picks the zero subgradient at the kink
            direction = np.sign(residual)
        else:
            norms = np.sqrt((residual * residual).sum(axis=-1))[:, None]
            direction = np.divide(
                residual,
                norms,
                out=np.zeros_like(residual),
                where=norms > 0,
            )
        return -direction, -direction, direction.copy()

    def heads(self, E: FloatArray, r: FloatArray, t: FloatArray) -> FloatArray:
        return -self._norm((E + r) - t)

    def tails(self, h: FloatArray, r: FloatArray, E: FloatArray) -> FloatArray:
        return -self._norm((h + r) - E)
