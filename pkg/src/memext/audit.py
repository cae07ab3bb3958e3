"""Score examples against a provider and persist the results as JSONL."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Tuple

from memext.analysis import ScoredExample
from memext.corpus import Example
from memext.errors import DataError
from memext.logit_math import DecodingConfig, SuffixScore, greedy_match_score, sequence_score
from memext.provider.base import DEFAULT_TOP_M, ScoreRequest


@dataclass(frozen=True)
class AuditRecord:
    index: int
    doc_id: str
    char_start: int
    char_end: int
    suffix_char_start: int
    prefix_len: int
    suffix_len: int
    logprob: Optional[float]
    prob: float
    impossible: bool
    greedy_prob: float
    config: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), allow_nan=False)

    @classmethod
    def from_json(cls, line: str) -> "AuditRecord":
        try:
            obj = json.loads(line)
            return cls(**obj)
        except (ValueError, TypeError) as e:
            raise DataError(f"malformed audit record: {line[:120]!r}") from e

    def to_scored(self) -> ScoredExample:
        return ScoredExample(self.doc_id, self.char_start, self.char_end,
                             self.suffix_char_start, self.prob)


def config_fingerprint(settings: dict) -> str:
    blob = json.dumps(settings, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def build_request(example: Example, cfg: DecodingConfig, tokenizer, top_m: int = DEFAULT_TOP_M) -> ScoreRequest:
    tokens = tuple(example.tokens)
    suffix_start = example.prefix_len + 1
    if cfg.prepend_bos and tokenizer.bos_token is not None:
        tokens = (tokenizer.bos_token,) + tokens
        suffix_start += 1
    k = cfg.effective_top_k(tokenizer.vocab_size)
    return ScoreRequest(tokens, suffix_start, cfg.temperature, max(top_m, k or 1))


def score_example(provider, example: Example, cfg: DecodingConfig, top_m: int = DEFAULT_TOP_M) -> Tuple[SuffixScore, SuffixScore]:
    """Score one example under ``cfg`` and under greedy decoding, from a single request."""
    tok = provider.tokenizer
    rows = provider.score_positions(build_request(example, cfg, tok, top_m))
    k = cfg.effective_top_k(tok.vocab_size)
    sampled = sequence_score(rows, DecodingConfig(cfg.temperature, k, cfg.prepend_bos))
    greedy = greedy_match_score(rows, DecodingConfig(cfg.temperature, 1, cfg.prepend_bos))
    return sampled, greedy


def make_record(index: int, example: Example, sampled: SuffixScore, greedy: SuffixScore, fingerprint: str) -> AuditRecord:
    return AuditRecord(
        index=index,
        doc_id=example.doc_id,
        char_start=example.char_start,
        char_end=example.char_end,
        suffix_char_start=example.suffix_span[0],
        prefix_len=example.prefix_len,
        suffix_len=example.suffix_len,
        logprob=None if sampled.impossible else sampled.logprob,
        prob=sampled.prob,
        impossible=sampled.impossible,
        greedy_prob=greedy.prob,
        config=fingerprint,
    )


def score_stream(provider, examples: Iterable[Example], cfg: DecodingConfig, fingerprint: str,
                 top_m: int = DEFAULT_TOP_M, jobs: int = 1, start_index: int = 0) -> Iterator[AuditRecord]:
    """Yield records in example order; with ``jobs > 1`` scoring fans out over threads."""
    it = enumerate(examples)
    if start_index:
        it = islice(it, start_index, None)

    def work(item):
        idx, ex = item
        sampled, greedy = score_example(provider, ex, cfg, top_m)
        return make_record(idx, ex, sampled, greedy, fingerprint)

    if jobs <= 1:
        for item in it:
            yield work(item)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        while True:
            batch = list(islice(it, jobs * 8))
            if not batch:
                return
            yield from pool.map(work, batch)


class AuditWriter:
    """Append-only JSONL writer; every flushed prefix of the file is line-valid.

    The file is only created once the first record arrives, so a run that
    fails before scoring anything leaves no output behind.
    """

    def __init__(self, path, append: bool = False):
        self.path = Path(path)
        self.append = append
        self._fh = None

    def write(self, record: AuditRecord) -> None:
        if self._fh is None:
            self._fh = open(self.path, "a" if self.append else "w", encoding="utf-8")
        self._fh.write(record.to_json() + "\n")
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_records(path) -> List[AuditRecord]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read audit file {path}: {e}") from e
    return [AuditRecord.from_json(l) for l in lines if l.strip()]


def prepare_resume(path) -> Tuple[int, Optional[str]]:
    """Drop a torn trailing line and return ``(records_kept, fingerprint)``."""
    path = Path(path)
    if not path.exists():
        return 0, None
    data = path.read_bytes()
    cut = data.rfind(b"\n") + 1
    if cut != len(data):
        with open(path, "r+b") as f:
            f.truncate(cut)
    records = read_records(path)
    fps = {r.config for r in records}
    if len(fps) > 1:
        raise DataError(f"{path} mixes config fingerprints {sorted(fps)}")
    for expect, r in enumerate(records):
        if r.index != expect:
            raise DataError(f"{path}: record {expect} has index {r.index}")
    return len(records), (fps.pop() if fps else None)

