"""
Helpers for models storing complex vectors in real arrays.

A complex vector of dimension ``d`` is stored as ``2d`` interleaved reals
``[re_0, im_0, re_1, im_1, ...]``.
"""

import numpy as np
import numpy.typing as npt

from purekge.typevars import FloatArray

ComplexArray = npt.NDArray[np.complex128]


def real_part(values: FloatArray) -> FloatArray:
    """
    Return a view on the real components of interleaved *values*

    >>> real_part(np.array([1.0, 2.0, 3.0, 4.0])).tolist()
    [1.0, 3.0]
    """
    return values[..., 0::2]


def imag_part(values: FloatArray) -> FloatArray:
    """
    Return a view on the imaginary components of interleaved *values*

    >>> imag_part(np.array([1.0, 2.0, 3.0, 4.0])).tolist()
    [2.0, 4.0]
    """
    return values[..., 1::2]


def to_complex(values: FloatArray) -> ComplexArray:
    """
    Convert interleaved reals to a complex array of half the width
    """
    return real_part(values) + 1j * imag_part(values)  # type: ignore


def interleave(real: FloatArray, imag: FloatArray) -> FloatArray:
    """
    Inverse of :py:func:`real_part`/:py:func:`imag_part`

    >>> interleave(np.array([1.0, 3.0]), np.array([2.0, 4.0])).tolist()
    [1.0, 2.0, 3.0, 4.0]
    """
    out = np.empty(real.shape[:-1] + (2 * real.shape[-1],), dtype=np.float64)
    out[..., 0::2] = real
    out[..., 1::2] = imag
    return out


def from_complex(values: ComplexArray) -> FloatArray:
    """
    Convert a complex array to interleaved reals
    """
    return interleave(values.real, values.imag)
