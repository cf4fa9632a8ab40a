"""
This module contains various type aliases and small value types
"""

from typing import NamedTuple

import numpy as np
import numpy.typing as npt

#: A float64 array holding embeddings, scores or gradients
FloatArray = npt.NDArray[np.float64]

#: An integer array holding ids or ``(n, 3)`` encoded triples
IdArray = npt.NDArray[np.int64]


class RawTriple(NamedTuple):
    """
    A ``(head, relation, tail)`` statement using the names found in the
    input file
    """

    head: str
    relation: str
    tail: str


class Triple(NamedTuple):
    """
    A ``(head, relation, tail)`` statement using integer ids
    """

    h: int
    r: int
    t: int
