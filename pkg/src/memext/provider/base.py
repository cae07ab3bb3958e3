"""Provider protocol, tokenizers, and the dense-to-sparse row builder."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from memext.errors import DataError
from memext.logit_math import LogitRow

DEFAULT_TOP_M = 128


@dataclass(frozen=True)
class ScoreRequest:
    """Score every suffix position of ``tokens`` in one pass.

    ``suffix_start`` is 1-based: ``tokens[suffix_start - 1]`` is the first
    suffix token.
    """

    tokens: tuple
    suffix_start: int
    temperature: float = 1.0
    top_m: int = DEFAULT_TOP_M

    def __post_init__(self):
        if not 1 <= self.suffix_start <= len(self.tokens):
            raise ValueError(
                f"suffix_start {self.suffix_start} outside 1..{len(self.tokens)}"
            )
        if self.top_m < 1:
            raise ValueError("top_m must be >= 1")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")

    def to_json(self):
        return {
            "tokens": list(self.tokens),
            "suffix_start": self.suffix_start,
            "temperature": self.temperature,
            "top_m": self.top_m,
        }


class Tokenizer:
    """Minimal tokenizer surface: ids in ``[0, vocab_size)`` plus optional BOS/EOS."""

    vocab_size: int
    bos_token: Optional[int] = None
    eos_token: Optional[int] = None

    def tokenize(self, text: str) -> List[int]:
        raise NotImplementedError

    def detokenize(self, tokens: Sequence[int]) -> str:
        raise NotImplementedError


class ByteTokenizer(Tokenizer):
    """UTF-8 bytes as tokens 0..255, with BOS=256 and EOS=257."""

    vocab_size = 258
    bos_token = 256
    eos_token = 257

    def tokenize(self, text):
        return list(text.encode("utf-8"))

    def detokenize(self, tokens):
        # specials are skipped; a truncated trailing character decodes to one U+FFFD
        data = bytes(t for t in tokens if t < 256)
        return data.decode("utf-8", errors="replace")


_WORD_RE = re.compile(r"\n|[^\S\n]*\S+|[^\S\n]+")


class WordTokenizer(Tokenizer):
    """Closed-vocabulary tokenizer: newlines, space-prefixed words, space runs.

    Detokenization is concatenation, so ``detokenize(tokenize(t)) == t`` for
    any text whose pieces are all in the vocabulary.  BOS and EOS take the
    two ids after the vocabulary.
    """

    def __init__(self, pieces: Sequence[str]):
        seen = {}
        for p in pieces:
            if p not in seen:
                seen[p] = len(seen)
        self.pieces = list(seen)
        self.index = seen
        self.bos_token = len(self.pieces)
        self.eos_token = len(self.pieces) + 1
        self.vocab_size = len(self.pieces) + 2

    @staticmethod
    def split(text):
        return _WORD_RE.findall(text)

    @classmethod
    def from_texts(cls, texts):
        pieces = []
        for t in texts:
            pieces.extend(cls.split(t))
        return cls(sorted(set(pieces)))

    def tokenize(self, text):
        out = []
        for piece in self.split(text):
            try:
                out.append(self.index[piece])
            except KeyError:
                raise DataError(f"piece {piece!r} is not in the vocabulary") from None
        return out

    def detokenize(self, tokens):
        n = len(self.pieces)
        return "".join(self.pieces[t] for t in tokens if t < n)

    def to_json(self):
        return {"kind": "word", "pieces": self.pieces}


@runtime_checkable
class Provider(Protocol):
    """A language model reachable for tokenization and per-position scoring."""

    tokenizer: Tokenizer

    def tokenize(self, text: str) -> List[int]: ...

    def detokenize(self, tokens: Sequence[int]) -> str: ...

    def score_positions(self, req: ScoreRequest) -> List[LogitRow]: ...


def ranked_order(logits: np.ndarray) -> np.ndarray:
    """Token ids sorted by logit descending, ties by ascending id."""
    ids = np.arange(logits.shape[0])
    return np.lexsort((ids, -logits))


def row_from_logits(logits, target: int, temperature: float = 1.0, top_m: int = DEFAULT_TOP_M) -> LogitRow:
    """Sparsify a dense logit vector into a :class:`LogitRow`."""
    logits = np.asarray(logits, dtype=np.float64)
    order = ranked_order(logits)
    m = min(top_m, logits.shape[0])
    top = order[:m]
    t_logit = logits[target]
    rank = int(np.count_nonzero(logits > t_logit) + np.count_nonzero(logits[:target] == t_logit)) + 1
    scaled = logits / temperature
    mx = scaled.max()
    lse = float(mx + math.log(math.fsum(np.exp(scaled - mx).tolist())))
    entries = tuple((int(i), float(logits[i])) for i in top)
    return LogitRow(
        entries=entries,
        target_token=int(target),
        target_logit=float(t_logit),
        target_rank=rank,
        logsumexp_full=lse,
        temperature=float(temperature),
    )


def next_token_row(provider: Provider, context: Sequence[int], temperature=1.0, top_m=DEFAULT_TOP_M) -> LogitRow:
    """Row for the position after ``context``.

    Uses a placeholder target so the request stays within the scoring
    protocol; only ``entries`` and ``logsumexp_full`` are meaningful.
    """
    tokens = tuple(context) + (0,)
    req = ScoreRequest(tokens, len(tokens), temperature, top_m)
    rows = provider.score_positions(req)
    if len(rows) != 1:
        raise ValueError(f"expected one row, provider returned {len(rows)}")
    return rows[0]
