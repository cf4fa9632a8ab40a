"""
ComplEx: DistMult over complex vectors with a conjugated tail.

    score(h, r, t) = Re( sum_i h_i * r_i * conj(t_i) )

Entities and relations are both stored as ``2d`` interleaved reals. Using
the conjugate of the tail makes the score asymmetric so antisymmetric
relations can be represented.
"""

from purekge.plugins.models import ScoringFunction, TPartials
from purekge.typevars import FloatArray
from purekge_plugins.models.complexbase import imag_part, interleave, real_part

IDENTIFIER = "ComplEx"
CODE = 6


class ComplEx(ScoringFunction):
    """
    Complex tri-linear product
    """

    IDENTIFIER = IDENTIFIER

    def entity_width(self, dim: int) -> int:
        return 2 * dim

    def relation_width(self, dim: int) -> int:
        return 2 * dim

    def scores(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> FloatArray:
        h_re, h_im = real_part(H), imag_part(H)
        r_re, r_im = real_part(R), imag_part(R)
        t_re, t_im = real_part(T), imag_part(T)
        product_re = h_re * r_re - h_im * r_im
        product_im = h_re * r_im + h_im * r_re
        return (product_re * t_re + product_im * t_im).sum(  # type: ignore
            axis=-1
        )

    def partials(
        self, H: FloatArray, R: FloatArray, T: FloatArray
    ) -> TPartials:
        h_re, h_im = real_part(H), imag_part(H)
        r_re, r_im = real_part(R), imag_part(R)
        t_re, t_im = real_part(T), imag_part(T)
        d_head = interleave(
            r_re * t_re + r_im * t_im,
            r_re * t_im - r_im * t_re,
        )
        d_relation = interleave(
            h_re * t_re + h_im * t_im,
            h_re * t_im - h_im * t_re,
        )
        d_tail = interleave(
            h_re * r_re - h_im * r_im,
            h_re * r_im + h_im * r_re,
        )
        return d_head, d_relation, d_tail


def create() -> ComplEx:
    """
    Create a new ComplEx scorer
    """
    return ComplEx()
