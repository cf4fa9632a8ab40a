"""
TransE using the Manhattan distance.
"""

from purekge_plugins.models.transbase import TranslationalScoring

IDENTIFIER = "TransE_l1"
CODE = 1


def create() -> TranslationalScoring:
    """
    Create a new TransE scorer using the L1 norm
    """
    scorer = TranslationalScoring(1)
    scorer.IDENTIFIER = IDENTIFIER
    return scorer
