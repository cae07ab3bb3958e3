"""HTTP backend speaking the JSON scoring protocol."""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence

import requests

from memext.errors import BackendUnavailable, ContextLengthError, ProtocolError, ProviderError
from memext.logit_math import LogitRow
from memext.provider.base import ScoreRequest, Tokenizer

logger = logging.getLogger(__name__)

_EXCERPT = 200


class RemoteTokenizer(Tokenizer):
    def __init__(self, client: "HTTPProvider", vocab_size, bos_token=None, eos_token=None):
        self._client = client
        self.vocab_size = vocab_size
        self.bos_token = bos_token
        self.eos_token = eos_token

    def tokenize(self, text):
        return self._client.tokenize(text)

    def detokenize(self, tokens):
        return self._client.detokenize(tokens)


class HTTPProvider:
    """Client for an inference server exposing ``/v1/tokenize`` and ``/v1/score``.

    ``/v1/info`` and ``/v1/detokenize`` are queried as well; the tokenizer
    metadata is fetched lazily on first use of :attr:`tokenizer`.
    """

    def __init__(self, base_url: str, timeout: float = 60.0, session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()
        self._tokenizer = None
        self.max_context = None

    def _post(self, path, payload):
        url = self.base_url + path
        try:
            resp = self.session.post(url, json=payload, timeout=self.timeout)
        except requests.RequestException as e:
            raise BackendUnavailable(f"cannot reach {url}: {e}") from e
        return self._decode(resp, url)

    def _get(self, path):
        url = self.base_url + path
        try:
            resp = self.session.get(url, timeout=self.timeout)
        except requests.RequestException as e:
            raise BackendUnavailable(f"cannot reach {url}: {e}") from e
        return self._decode(resp, url)

    @staticmethod
    def _decode(resp, url):
        if not 200 <= resp.status_code < 300:
            body = resp.text[:_EXCERPT]
            try:
                payload = resp.json()
            except ValueError:
                payload = {}
            msg = payload.get("error", body) if isinstance(payload, dict) else body
            if isinstance(payload, dict) and "max_context" in payload:
                raise ContextLengthError(
                    f"{url} returned {resp.status_code}: {msg}",
                    limit=payload["max_context"],
                    status=resp.status_code,
                    body=body,
                )
            raise ProviderError(f"{url} returned {resp.status_code}: {msg}", status=resp.status_code, body=body)
        try:
            return resp.json()
        except ValueError as e:
            raise ProtocolError(f"{url} returned non-JSON body: {resp.text[:_EXCERPT]!r}") from e

    @property
    def tokenizer(self) -> Tokenizer:
        if self._tokenizer is None:
            info = self._get("/v1/info")
            try:
                self._tokenizer = RemoteTokenizer(
                    self, int(info["vocab_size"]), info.get("bos_token"), info.get("eos_token")
                )
            except (KeyError, TypeError, ValueError) as e:
                raise ProtocolError(f"malformed /v1/info payload: {info!r}") from e
            self.max_context = info.get("max_context")
        return self._tokenizer

    def tokenize(self, text: str) -> List[int]:
        payload = self._post("/v1/tokenize", {"text": text})
        try:
            return [int(t) for t in payload["tokens"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"malformed tokenize payload: {str(payload)[:_EXCERPT]}") from e

    def detokenize(self, tokens: Sequence[int]) -> str:
        payload = self._post("/v1/detokenize", {"tokens": list(tokens)})
        try:
            return str(payload["text"])
        except (KeyError, TypeError) as e:
            raise ProtocolError(f"malformed detokenize payload: {str(payload)[:_EXCERPT]}") from e

    def score_positions(self, req: ScoreRequest) -> List[LogitRow]:
        payload = self._post("/v1/score", req.to_json())
        try:
            rows = [parse_row(r, req.temperature) for r in payload["rows"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"malformed score payload: {e}") from e
        expected = len(req.tokens) - req.suffix_start + 1
        if len(rows) != expected:
            raise ProtocolError(f"expected {expected} rows, got {len(rows)}")
        return rows


def parse_row(obj, temperature) -> LogitRow:
    return LogitRow(
        entries=tuple((int(t), float(v)) for t, v in obj["entries"]),
        target_token=int(obj["target"]),
        target_logit=float(obj["target_logit"]),
        target_rank=int(obj["target_rank"]),
        logsumexp_full=float(obj["logsumexp"]),
        temperature=float(temperature),
    )


def row_to_json(row: LogitRow):
    return {
        "entries": [[t, v] for t, v in row.entries],
        "target": row.target_token,
        "target_logit": row.target_logit,
        "target_rank": row.target_rank,
        "logsumexp": row.logsumexp_full,
    }
