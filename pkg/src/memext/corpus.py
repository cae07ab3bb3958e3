"""Turn documents into fixed-length token examples.

Two strategies: a sliding window that starts a chunk every ``stride_chars``
characters, and random sampling of non-overlapping examples that start on
a space character.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence

import numpy as np

from memext.errors import DataError, SamplingError

logger = logging.getLogger(__name__)

DEFAULT_STRIDE_CHARS = 10
DEFAULT_CHUNK_CHARS = 800
DEFAULT_EXAMPLE_TOKENS = 100
DEFAULT_PREFIX_TOKENS = 50


@dataclass(frozen=True)
class BookDocument:
    doc_id: str
    text: str

    def __post_init__(self):
        if not self.doc_id:
            raise DataError("doc_id must be non-empty")

    @property
    def char_len(self) -> int:
        return len(self.text)

    @classmethod
    def from_file(cls, path, doc_id=None):
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise DataError(f"cannot read document {path}: {e}") from e
        return cls(doc_id or path.stem, text)


@dataclass(frozen=True)
class Example:
    """One scoring unit.

    ``char_end`` is one past the last character the example's tokens cover;
    ``suffix_char_start`` is where the suffix tokens begin in the document.
    """

    doc_id: str
    char_start: int
    char_end: int
    tokens: tuple
    prefix_len: int
    suffix_char_start: Optional[int] = None

    def __post_init__(self):
        if self.prefix_len < 1 or self.prefix_len > len(self.tokens):
            raise ValueError(
                f"prefix_len {self.prefix_len} invalid for {len(self.tokens)} tokens"
            )
        if not 0 <= self.char_start < self.char_end:
            raise ValueError(f"bad character span [{self.char_start}, {self.char_end})")

    @property
    def suffix_len(self) -> int:
        return len(self.tokens) - self.prefix_len

    @property
    def suffix_span(self):
        start = self.char_start if self.suffix_char_start is None else self.suffix_char_start
        return start, self.char_end


@dataclass
class SamplingStats:
    attempted: int = 0
    emitted: int = 0
    skipped_short: int = 0
    shortfall: dict = field(default_factory=dict)


def _make_example(doc, start, tokens, prefix_tokens, tokenizer):
    prefix_chars = len(tokenizer.detokenize(tokens[:prefix_tokens]))
    example_chars = len(tokenizer.detokenize(tokens))
    char_end = min(doc.char_len, start + max(example_chars, 1))
    return Example(
        doc_id=doc.doc_id,
        char_start=start,
        char_end=char_end,
        tokens=tuple(tokens),
        prefix_len=prefix_tokens,
        suffix_char_start=min(start + prefix_chars, char_end),
    )


def _tokenize_chunk(tokenizer, doc, start, chunk_chars):
    try:
        return tokenizer.tokenize(doc.text[start:start + chunk_chars])
    except Exception as e:
        raise SamplingError(
            f"tokenizer failed on {doc.doc_id!r} at char offset {start}: {e}"
        ) from e


def _check_lengths(example_tokens, prefix_tokens):
    if not 1 <= prefix_tokens < example_tokens:
        raise ValueError(
            f"need 1 <= prefix_tokens < example_tokens, got {prefix_tokens}, {example_tokens}"
        )


def slide_windows(
    doc: BookDocument,
    tokenizer,
    stride_chars: int = DEFAULT_STRIDE_CHARS,
    chunk_chars: int = DEFAULT_CHUNK_CHARS,
    example_tokens: int = DEFAULT_EXAMPLE_TOKENS,
    prefix_tokens: int = DEFAULT_PREFIX_TOKENS,
    stats: Optional[SamplingStats] = None,
) -> Iterator[Example]:
    """Yield one example per ``stride_chars`` offset, in ascending offset order.

    Each chunk ``text[s:s+chunk_chars]`` is tokenized and its first
    ``example_tokens`` tokens kept.  Chunks that come up short are skipped
    and counted in ``stats.skipped_short``.
    """
    if stride_chars < 1:
        raise ValueError("stride_chars must be >= 1")
    _check_lengths(example_tokens, prefix_tokens)
    if stats is None:
        stats = SamplingStats()
    for start in range(0, doc.char_len, stride_chars):
        stats.attempted += 1
        tokens = _tokenize_chunk(tokenizer, doc, start, chunk_chars)
        if len(tokens) < example_tokens:
            stats.skipped_short += 1
            continue
        stats.emitted += 1
        yield _make_example(doc, start, tokens[:example_tokens], prefix_tokens, tokenizer)


def sample_random_examples(
    corpus: Sequence[BookDocument],
    tokenizer,
    n_docs: int,
    per_doc: int,
    example_tokens: int = DEFAULT_EXAMPLE_TOKENS,
    prefix_tokens: int = DEFAULT_PREFIX_TOKENS,
    rng_seed: int = 0,
    chunk_chars: int = DEFAULT_CHUNK_CHARS,
    stats: Optional[SamplingStats] = None,
) -> List[Example]:
    """Draw ``n_docs`` documents, then ``per_doc`` non-overlapping examples from each.

    Every example starts on a U+0020 character.  Candidate starts are
    visited in a seeded random order and accepted greedily when they
    tokenize to enough tokens and do not overlap an accepted example.
    Documents that cannot host ``per_doc`` examples contribute fewer; the
    gap is logged and recorded in ``stats.shortfall``.
    """
    if n_docs > len(corpus):
        raise DataError(f"requested n_docs={n_docs} but corpus has only {len(corpus)} documents")
    if n_docs < 0 or per_doc < 0:
        raise ValueError("n_docs and per_doc must be non-negative")
    _check_lengths(example_tokens, prefix_tokens)
    if stats is None:
        stats = SamplingStats()
    if per_doc == 0 or n_docs == 0:
        return []
    rng = np.random.default_rng(rng_seed)
    picked = rng.choice(len(corpus), size=n_docs, replace=False)
    out = []
    for di in picked:
        doc = corpus[int(di)]
        spaces = np.array([i for i, ch in enumerate(doc.text) if ch == " "], dtype=np.int64)
        order = rng.permutation(spaces)
        accepted: List[Example] = []
        for start in order.tolist():
            if len(accepted) == per_doc:
                break
            if any(ex.char_start <= start < ex.char_end for ex in accepted):
                continue
            stats.attempted += 1
            tokens = _tokenize_chunk(tokenizer, doc, start, chunk_chars)
            if len(tokens) < example_tokens:
                stats.skipped_short += 1
                continue
            ex = _make_example(doc, start, tokens[:example_tokens], prefix_tokens, tokenizer)
            if any(ex.char_start < a.char_end and a.char_start < ex.char_end for a in accepted):
                continue
            accepted.append(ex)
        if len(accepted) < per_doc:
            stats.shortfall[doc.doc_id] = per_doc - len(accepted)
            logger.warning(
                "document %s hosts only %d of %d requested examples",
                doc.doc_id, len(accepted), per_doc,
            )
        accepted.sort(key=lambda e: e.char_start)
        stats.emitted += len(accepted)
        out.extend(accepted)
    return out


def load_manifest(path) -> List[BookDocument]:
    """Read a corpus manifest: one ``path [doc_id]`` per line.

    Relative paths resolve against the manifest's directory.  Blank lines
    and lines starting with ``#`` are ignored.  A missing doc_id defaults to
    the file stem.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read manifest {path}: {e}") from e
    docs = []
    seen = set()
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        doc_path = Path(os.path.expanduser(parts[0]))
        if not doc_path.is_absolute():
            doc_path = path.parent / doc_path
        doc_id = parts[1].strip() if len(parts) > 1 else None
        doc = BookDocument.from_file(doc_path, doc_id)
        if doc.doc_id in seen:
            raise DataError(f"{path}:{lineno}: duplicate doc_id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        docs.append(doc)
    return docs
