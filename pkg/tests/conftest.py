import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from llm_bootstrap.gateway import CompletionRequest, CompletionResponse
from llm_bootstrap.task_model import (
    SOURCE_REAL,
    SOURCE_SYNTHETIC,
    LabeledExample,
    TaskSpec,
)

POSITIVE_SEEDS = [
    "a gorgeous heartfelt triumph of filmmaking",
    "the ensemble cast shines in every scene",
    "an uplifting story told with real warmth",
    "smart funny and thoroughly entertaining throughout",
]
NEGATIVE_SEEDS = [
    "a dull plodding mess of a film",
    "the script collapses under its own cliches",
    "ninety minutes of lifeless posturing",
    "a tedious slog with nothing to say",
]


@pytest.fixture
def sst2_task():
    return TaskSpec(
        task_id="sst2-demo",
        labels=("Positive", "Negative"),
        generation_instruction=(
            "Few examples of {domain_noun} having {label_lower} sentiment are "
            "given. Generate more {label_lower} reviews"
        ),
        classification_instruction=(
            "Classify the sentiment of the given movie review into {label_list}"
        ),
        domain_noun="movie reviews",
    )


@pytest.fixture
def trec_task():
    return TaskSpec(
        task_id="trec-demo",
        labels=(
            "Abbreviation",
            "Entity",
            "Description",
            "Human",
            "Location",
            "Numeric",
        ),
        generation_instruction=(
            "Few examples of {domain_noun} asking about {label_lower} are "
            "given. Generate more {label_lower} questions"
        ),
        classification_instruction=(
            "Classify the given question into {label_list}"
        ),
        domain_noun="questions",
    )


def real_example(text, label):
    return LabeledExample(text=text, label=label, source=SOURCE_REAL, round=0)


def synthetic_example(text, label, round_no=1, verdict="accepted"):
    return LabeledExample(
        text=text, label=label, source=SOURCE_SYNTHETIC, round=round_no, verdict=verdict
    )


@pytest.fixture
def seed_pool(sst2_task):
    return [real_example(text, "Positive") for text in POSITIVE_SEEDS] + [
        real_example(text, "Negative") for text in NEGATIVE_SEEDS
    ]


class FnGateway:
    """Unit-test gateway whose reply is a pure function of the prompt."""

    def __init__(self, fn, model_ref="fn-mock"):
        self._fn = fn
        self.model_ref = model_ref
        self.transcript = []

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        text = self._fn(request.prompt)
        self.transcript.append((request.prompt, text))
        return CompletionResponse(text=text, latency_ms=0.0)


class StubHandler(BaseHTTPRequestHandler):
    """Chat-completions stub; behavior driven by the server's `plan` list."""

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        server = self.server
        with server.counter_lock:
            server.requests.append(body)
            server.active += 1
            server.max_active = max(server.max_active, server.active)
            request_no = len(server.requests)
        try:
            self._respond(server, request_no)
        finally:
            with server.counter_lock:
                server.active -= 1

    def _respond(self, server, request_no):
        action = server.plan[min(request_no - 1, len(server.plan) - 1)]
        if action.get("delay_s"):
            import time

            time.sleep(action["delay_s"])
        status = action.get("status", 200)
        if status != 200:
            self.send_response(status)
            self.end_headers()
            return
        payload = {
            "choices": [{"message": {"content": action.get("text", "ok")}}],
            "usage": {"prompt_tokens": 7, "completion_tokens": 3},
        }
        raw = json.dumps(payload).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    """Start a local chat-completions stub; yields (url, server)."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    server.plan = [{"text": "ok"}]
    server.requests = []
    server.counter_lock = threading.Lock()
    server.active = 0
    server.max_active = 0
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", server
    server.shutdown()
    thread.join(timeout=5)
