"""Serve a base-plus-adapter model behind the chat-completions protocol.

The endpoint accepts POST bodies carrying a model id, one user message,
temperature, and max_tokens (top_k/num_beams ride in "extensions"), and
answers with choices[0].message.content plus token usage - the same wire
format the pipeline's HTTP gateway speaks, so the evaluator's tuned mode
needs no extra negotiation. Temperature 0 selects greedy decoding. Requests
are handled sequentially; each response is complete before the next begins.
"""

from __future__ import annotations

import errno
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import torch

from .errors import PortInUse
from .lora import load_adapter
from .training import load_base

COMPLETIONS_PATH = "/v1/chat/completions"


class AdapterServer:
    """Owns the HTTP server; use serve_forever() or run in a thread."""

    def __init__(self, model, tokenizer, host: str, port: int):
        self.model = model
        self.tokenizer = tokenizer
        self._inference_lock = threading.Lock()
        handler = _make_handler(self)
        try:
            self._http = ThreadingHTTPServer((host, port), handler)
        except OSError as exc:
            if exc.errno == errno.EADDRINUSE:
                raise PortInUse(f"port {port} is already bound")
            raise
        self.port = self._http.server_port

    def generate(self, prompt: str, temperature: float, max_tokens: int, top_k: int):
        ids = self.tokenizer(prompt, return_tensors="pt")["input_ids"]
        options = dict(
            max_new_tokens=max_tokens,
            eos_token_id=self.tokenizer.eos_token_id,
            pad_token_id=self.tokenizer.pad_token_id,
        )
        if temperature and temperature > 0:
            options.update(do_sample=True, temperature=temperature, top_k=top_k)
        else:
            options.update(do_sample=False)
        with self._inference_lock, torch.no_grad():
            output = self.model.generate(ids, **options)
        completion_ids = output[0][ids.shape[1]:]
        text = self.tokenizer.decode(completion_ids, skip_special_tokens=True)
        return text, ids.shape[1], len(completion_ids)

    def serve_forever(self):
        self._http.serve_forever()

    def shutdown(self):
        self._http.shutdown()
        self._http.server_close()


def _make_handler(server: AdapterServer):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            if self.path != COMPLETIONS_PATH:
                self._reply(404, {"error": "unknown path"})
                return
            try:
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length)) if length else {}
            except (ValueError, json.JSONDecodeError):
                self._reply(400, {"error": "invalid JSON body"})
                return
            messages = body.get("messages") or []
            prompt = messages[0].get("content", "") if messages else ""
            if not prompt:
                self._reply(400, {"error": "empty prompt"})
                return
            extensions = body.get("extensions") or {}
            text, used, generated = server.generate(
                prompt,
                temperature=float(body.get("temperature", 0.0)),
                max_tokens=int(body.get("max_tokens", 16)),
                top_k=int(extensions.get("top_k", 50)),
            )
            self._reply(
                200,
                {
                    "choices": [{"message": {"role": "assistant", "content": text}}],
                    "usage": {
                        "prompt_tokens": used,
                        "completion_tokens": generated,
                    },
                },
            )

        def _reply(self, status, payload):
            raw = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(raw)))
            self.end_headers()
            self.wfile.write(raw)

        def log_message(self, *args):
            pass

    return Handler


def serve_adapter(
    adapter_dir: str, base_model_ref: str, port: int, host: str = "127.0.0.1"
) -> AdapterServer:
    """Load base + adapter and bind the endpoint; caller drives the loop."""
    model, tokenizer = load_base(base_model_ref)
    load_adapter(model, adapter_dir, base_model_ref)
    model.eval()
    return AdapterServer(model, tokenizer, host, port)
