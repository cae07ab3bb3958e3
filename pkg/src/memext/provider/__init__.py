"""Model backends: tokenization plus per-position logit scoring."""

from memext.provider.base import (
    DEFAULT_TOP_M,
    ByteTokenizer,
    Provider,
    ScoreRequest,
    Tokenizer,
    WordTokenizer,
    next_token_row,
    row_from_logits,
)
from memext.provider.beam import generate_step
from memext.provider.http import HTTPProvider
from memext.provider.reference import ReferenceModel, ReferenceProvider
from memext.provider.server import ServerThread, make_server

__all__ = [
    "DEFAULT_TOP_M",
    "ByteTokenizer",
    "HTTPProvider",
    "Provider",
    "ReferenceModel",
    "ReferenceProvider",
    "ScoreRequest",
    "ServerThread",
    "Tokenizer",
    "WordTokenizer",
    "generate_step",
    "make_server",
    "next_token_row",
    "row_from_logits",
]
