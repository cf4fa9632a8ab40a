"""
DistMult: a bilinear model with diagonal relation matrices.

    score(h, r, t) = sum_i h_i * r_i * t_i

The score is symmetric in *h* and *t*.
"""

import numpy as np

from purekge.plugins.models import ScoringFunction, TPartials
from purekge.typevars import FloatArray

IDENTIFIER = "DistMult"
CODE = 5


class DistMult(ScoringFunction):
    """
    Tri-linear dot product of head, relation and tail
    """

    IDENTIFIER = IDENTIFIER

    def scores(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> FloatArray:
        return ((H * R) * T).sum(axis=-1)  # type: ignore

    def partials(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> TPartials:
        return R * T, H * T, H * R


def create() -> DistMult:
    """
    Create a new DistMult scorer
    """
    return DistMult()
