"""
TransE using the Euclidean distance.
"""

from purekge_plugins.models.transbase import TranslationalScoring

IDENTIFIER = "TransE_l2"
CODE = 2


def create() -> TranslationalScoring:
    """
    Create a new TransE scorer using the L2 norm
    """
    scorer = TranslationalScoring(2)
    scorer.IDENTIFIER = IDENTIFIER
    return scorer
