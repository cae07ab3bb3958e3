"""Loopback HTTP shim serving any in-process provider over the wire protocol."""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from memext.errors import ContextLengthError, MemextError
from memext.provider.base import ScoreRequest
from memext.provider.http import row_to_json

logger = logging.getLogger(__name__)


class _Handler(BaseHTTPRequestHandler):
    provider = None  # set on the subclass built by make_server

    def log_message(self, fmt, *args):
        logger.debug("%s - " + fmt, self.address_string(), *args)

    def _send(self, status, payload):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/v1/info":
            self._send(200, self.provider.info())
        else:
            self._send(404, {"error": f"unknown path {self.path}"})

    def do_POST(self):
        try:
            length = int(self.headers.get("Content-Length", 0))
            payload = json.loads(self.rfile.read(length) or b"{}")
        except ValueError:
            self._send(400, {"error": "request body is not JSON"})
            return
        try:
            if self.path == "/v1/tokenize":
                self._send(200, {"tokens": self.provider.tokenize(payload["text"])})
            elif self.path == "/v1/detokenize":
                self._send(200, {"text": self.provider.detokenize(payload["tokens"])})
            elif self.path == "/v1/score":
                req = ScoreRequest(
                    tuple(int(t) for t in payload["tokens"]),
                    int(payload["suffix_start"]),
                    float(payload.get("temperature", 1.0)),
                    int(payload.get("top_m", 128)),
                )
                rows = self.provider.score_positions(req)
                self._send(200, {"rows": [row_to_json(r) for r in rows]})
            else:
                self._send(404, {"error": f"unknown path {self.path}"})
        except ContextLengthError as e:
            self._send(400, {"error": str(e), "max_context": e.limit})
        except (KeyError, TypeError, ValueError, MemextError) as e:
            self._send(400, {"error": f"{type(e).__name__}: {e}"})


def make_server(provider, host="127.0.0.1", port=0) -> ThreadingHTTPServer:
    handler = type("ProviderHandler", (_Handler,), {"provider": provider})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


class ServerThread:
    """Run a shim server in a background thread; usable as a context manager."""

    def __init__(self, provider, host="127.0.0.1", port=0):
        self.server = make_server(provider, host, port)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self):
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self.thread.join()
