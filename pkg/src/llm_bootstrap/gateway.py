"""Completion clients: an HTTP chat-completions client and a scripted mock.

The HTTP client speaks the de facto chat-completions wire format: POST to
`<endpoint><path>` with a JSON body carrying the model id, a single user
message, temperature, and max_tokens; top_k and num_beams ride in an
"extensions" object for servers that support them. Stop sequences are the
server's job; the client truncates at them afterwards as a fallback only.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, replace
from typing import List, Optional, Protocol, Sequence, Tuple

import requests

from .errors import (
    ExhaustedRetries,
    GatewayTimeout,
    IoFailure,
    TransportFailure,
    UnscriptedPrompt,
)
from .task_model import DecodingConfig

ENDPOINT_ENV = "BOOTSTRAP_ENDPOINT"
MODEL_ENV = "BOOTSTRAP_MODEL"


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    decoding: DecodingConfig
    model_ref: str

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    latency_ms: float
    request_tokens: Optional[int] = None
    response_tokens: Optional[int] = None

    def __post_init__(self):
        if self.latency_ms < 0:
            raise ValueError("latency must be >= 0")


class Gateway(Protocol):
    model_ref: str

    def complete(self, request: CompletionRequest) -> CompletionResponse: ...


@dataclass(frozen=True)
class GatewayConfig:
    """Connection settings; file-configurable with env-var overrides."""

    endpoint: str = "http://localhost:8000"
    model_ref: str = "local-model"
    path: str = "/v1/chat/completions"
    timeout_s: float = 120.0
    max_retries: int = 3
    max_in_flight: int = 4
    backoff_s: tuple = (1.0, 2.0, 4.0)

    @classmethod
    def load(cls, path: Optional[str] = None) -> "GatewayConfig":
        """Read settings from a JSON file, then apply env overrides."""
        data = {}
        if path is not None:
            try:
                with open(path, "r", encoding="utf-8") as handle:
                    data = json.load(handle)
            except OSError as exc:
                raise IoFailure(f"cannot read gateway config {path}: {exc}") from exc
        config = cls(
            endpoint=data.get("endpoint", cls.endpoint),
            model_ref=data.get("model_ref", cls.model_ref),
            path=data.get("path", cls.path),
            timeout_s=data.get("timeout_s", cls.timeout_s),
            max_retries=data.get("max_retries", cls.max_retries),
            max_in_flight=data.get("max_in_flight", cls.max_in_flight),
            backoff_s=tuple(data.get("backoff_s", cls.backoff_s)),
        )
        endpoint = os.environ.get(ENDPOINT_ENV)
        if endpoint:
            config = replace(config, endpoint=endpoint)
        model_ref = os.environ.get(MODEL_ENV)
        if model_ref:
            config = replace(config, model_ref=model_ref)
        return config


def _truncate_at_stops(text: str, stops: Sequence[str]) -> str:
    cut = len(text)
    for stop in stops:
        if not stop:
            continue
        index = text.find(stop)
        if index != -1:
            cut = min(cut, index)
    return text[:cut]


class HttpGateway:
    """Chat-completions client with bounded retries and in-flight admission.

    Retries only timeouts and 5xx responses, sleeping per the configured
    backoff schedule between attempts. All-timeout failures surface as
    GatewayTimeout; persistent 5xx as ExhaustedRetries.
    """

    def __init__(self, config: GatewayConfig, session: Optional[requests.Session] = None):
        self.config = config
        self.model_ref = config.model_ref
        self._session = session or requests.Session()
        self._slots = threading.Semaphore(config.max_in_flight)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        body = {
            "model": request.model_ref,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.decoding.temperature,
            "max_tokens": request.decoding.max_new_tokens,
            "extensions": {
                "top_k": request.decoding.top_k,
                "num_beams": request.decoding.num_beams,
            },
        }
        if request.decoding.stop_sequences:
            body["stop"] = list(request.decoding.stop_sequences)

        url = self.config.endpoint.rstrip("/") + self.config.path
        attempts = self.config.max_retries
        last_error: Exception | None = None
        timed_out = 0

        with self._slots:
            for attempt in range(attempts):
                if attempt > 0:
                    backoff = self.config.backoff_s
                    time.sleep(backoff[min(attempt - 1, len(backoff) - 1)])
                started = time.monotonic()
                try:
                    reply = self._session.post(
                        url, json=body, timeout=self.config.timeout_s
                    )
                except requests.Timeout:
                    last_error = GatewayTimeout(f"no response within {self.config.timeout_s}s")
                    timed_out += 1
                    continue
                except requests.RequestException as exc:
                    raise TransportFailure(f"request failed: {exc}") from exc
                latency_ms = (time.monotonic() - started) * 1000.0

                if 500 <= reply.status_code < 600:
                    last_error = TransportFailure(
                        f"server error {reply.status_code}", status=reply.status_code
                    )
                    continue
                if reply.status_code != 200:
                    raise TransportFailure(
                        f"unexpected status {reply.status_code}", status=reply.status_code
                    )
                return self._parse_reply(reply, request, latency_ms)

        if timed_out == attempts:
            raise GatewayTimeout(
                f"no response within {self.config.timeout_s}s after {attempts} attempts"
            )
        raise ExhaustedRetries(attempts, last_error)

    @staticmethod
    def _parse_reply(
        reply: requests.Response, request: CompletionRequest, latency_ms: float
    ) -> CompletionResponse:
        try:
            payload = reply.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportFailure(f"malformed completion payload: {exc}") from exc
        usage = payload.get("usage") or {}
        if request.decoding.stop_sequences:
            text = _truncate_at_stops(text, request.decoding.stop_sequences)
        return CompletionResponse(
            text=text,
            latency_ms=latency_ms,
            request_tokens=usage.get("prompt_tokens"),
            response_tokens=usage.get("completion_tokens"),
        )


MATCH_ANY = "any"


class ScriptedGateway:
    """Deterministic offline mock driven by an ordered script.

    Each entry is (matcher, response); a matcher is a literal substring or
    "any". complete() consumes the first remaining entry whose matcher hits
    the prompt; entries are single-use. Latency is reported as exactly 0.
    """

    def __init__(self, script: Sequence[Tuple[str, str]], model_ref: str = "scripted"):
        self.model_ref = model_ref
        self._entries: List[Tuple[str, str]] = list(script)
        self._consumed: List[bool] = [False] * len(self._entries)
        self._lock = threading.Lock()
        self.transcript: List[Tuple[str, str]] = []

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._lock:
            for index, (matcher, response) in enumerate(self._entries):
                if self._consumed[index]:
                    continue
                if matcher == MATCH_ANY or matcher in request.prompt:
                    self._consumed[index] = True
                    self.transcript.append((request.prompt, response))
                    return CompletionResponse(text=response, latency_ms=0.0)
        raise UnscriptedPrompt(request.prompt)

    def remaining_script(self) -> List[Tuple[str, str]]:
        """Unconsumed entries, in order; lets tests resume from a cut point."""
        with self._lock:
            return [
                entry
                for entry, used in zip(self._entries, self._consumed)
                if not used
            ]


def load_script(path: str) -> List[Tuple[str, str]]:
    """Read a scripted-mock definition: JSON list of {"match", "response"}."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise IoFailure(f"cannot read script {path}: {exc}") from exc
    return [(entry["match"], entry["response"]) for entry in raw]
