"""Measure verbatim memorization in autoregressive language models.

Probabilistic discoverable extraction (p_z and its (n, p) guarantees),
memorized-span and coverage analysis over whole documents, and seed-prompt
reconstruction with windowed beam search.
"""

from memext.logit_math import DecodingConfig, LogitRow, SuffixScore, sequence_score
from memext.np_metric import expected_queries, n_for_p, prob_at_n

__version__ = "0.1.0"

__all__ = [
    "DecodingConfig",
    "LogitRow",
    "SuffixScore",
    "expected_queries",
    "n_for_p",
    "prob_at_n",
    "sequence_score",
]
