import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from plancite.scoring import (
    EntailmentJudgment,
    LexicalScorer,
    Scorer,
    handle_protocol_request,
)


class OracleAnswerable(Scorer):
    """Answerability classifier with fixed yes/no decisions per question."""

    def __init__(self, yes: set[str] | None = None, default: bool = False):
        self.yes = yes or set()
        self.default = default

    def answerable(self, question: str, context: str) -> EntailmentJudgment:
        entailed = self.default or question in self.yes
        return EntailmentJudgment(score=1.0 if entailed else 0.0, entailed=entailed)


class SequenceAnswerable(Scorer):
    """Answers a scripted yes/no sequence, one judgment per call."""

    def __init__(self, answers: list[bool]):
        self.answers = list(answers)

    def answerable(self, question: str, context: str) -> EntailmentJudgment:
        entailed = self.answers.pop(0)
        return EntailmentJudgment(score=1.0 if entailed else 0.0, entailed=entailed)


class _ProtocolHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _reply(self, status: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/meta":
            self._reply(200, handle_protocol_request("/meta", {}, self.server.scorer))
        else:
            self._reply(404, {"error": "not found"})

    def do_POST(self):
        if self.server.failures_left > 0:
            self.server.failures_left -= 1
            self._reply(500, {"error": "scripted failure"})
            return
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        self.server.requests.append((self.path, body))
        try:
            self._reply(200, handle_protocol_request(self.path, body, self.server.scorer))
        except Exception as exc:
            self._reply(500, {"error": str(exc)})


class LoopbackScorerServer:
    """HTTP server exposing an in-process scorer over the wire protocol."""

    def __init__(self, scorer: Scorer | None = None):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _ProtocolHandler)
        self.httpd.scorer = scorer or LexicalScorer()
        self.httpd.failures_left = 0
        self.httpd.requests = []
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self):
        return self.httpd.requests

    def fail_next(self, n: int) -> None:
        self.httpd.failures_left = n

    def close(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def scorer_server():
    server = LoopbackScorerServer()
    yield server
    server.close()
