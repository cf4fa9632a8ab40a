"""
RotatE: relations rotate head entities in the complex plane.

Entities are complex vectors (``2d`` stored reals). A relation is stored as
``d`` phases, the element-wise rotation ``e^{i*phase}`` therefore always has
unit modulus. The score is the negative Euclidean distance between the
rotated head and the tail.
"""

import numpy as np

from purekge.plugins.models import ScoringFunction, TPartials
from purekge.typevars import FloatArray
from purekge_plugins.models.complexbase import from_complex, to_complex

IDENTIFIER = "RotatE"
CODE = 3


class RotatE(ScoringFunction):
    """
    Rotation model with phase-parameterised relations
    """

    IDENTIFIER = IDENTIFIER

    # A phase has no magnitude to shrink
    PENALIZE_RELATIONS = False

    def entity_width(self, dim: int) -> int:
        return 2 * dim

    def init_relations(
        self, rng: np.random.Generator, count: int, dim: int
    ) -> FloatArray:
        return rng.uniform(0.0, 2.0 * np.pi, (count, dim))

    @staticmethod
    def _distance(rotated: FloatArray, tails: FloatArray) -> FloatArray:
        residual = rotated - tails
        return np.sqrt(  # type: ignore
            (residual.real**2 + residual.imag**2).sum(axis=-1)
        )

    def scores(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> FloatArray:
        rotated = to_complex(H) * np.exp(1j * R)
        return -self._distance(rotated, to_complex(T))

    def partials(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> TPartials:
        rotation = np.exp(1j * R)
        rotated = to_complex(H) * rotation
        residual = rotated - to_complex(T)
        norms = np.sqrt((residual.real**2 + residual.imag**2).sum(axis=-1))
        norms = norms[:, None]
        unit = np.divide(
            residual,
            norms,
            out=np.zeros_like(residual),
            where=norms > 0,
        )
        d_head = -from_complex(np.conj(rotation) * unit)
        d_tail = from_complex(unit)
        d_phase = -(np.conj(rotated) * unit).imag
        return d_head, d_phase, d_tail

    def heads(self, E: FloatArray, r: FloatArray, t: FloatArray) -> FloatArray:
        rotated = to_complex(E) * np.exp(1j * r)
        return -self._distance(rotated, to_complex(t))

    def tails(self, h: FloatArray, r: FloatArray, E: FloatArray) -> FloatArray:
        rotated = to_complex(h) * np.exp(1j * r)
        return -self._distance(rotated, to_complex(E))


def create() -> RotatE:
    """
    Create a new RotatE scorer
    """
    return RotatE()
