"""The /v1 HTTP service over trained checkpoints.

Wire contract:
  POST /v1/generate
       {"s1","s3","frame","entities":[...],"variant","max_tokens",
        "prompt_only"} -> 200 {"s2": str} | 4xx {"error": str}
  GET  /v1/health -> 200 {"status":"ok","backend_id"} | 503 while loading

Requests route to the checkpoint for (variant, frame). Decoding is
greedy and guarded by a lock, so concurrent clients get deterministic,
order-independent responses. Malformed JSON and missing fields are 400s
with an "error" body, never a stack trace.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .data import serialize_request
from .model import DecodeParams, decode
from .training import LoadedModel, load_checkpoint

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("s1", "s3", "frame", "entities", "variant")
FRAMES = ("e", "l", "p", "c")


@dataclass
class ServingConfig:
    checkpoint_dir: Path
    backend_id: str = "sidecar-gru"
    default_max_tokens: int = 32
    device: str = "cpu"
    decode: DecodeParams = field(default_factory=DecodeParams)
    host: str = "127.0.0.1"
    port: int = 8000


@dataclass
class ModelStore:
    """Lazy checkpoint registry; ready only after load() finishes."""

    config: ServingConfig
    models: dict[tuple[str, str], LoadedModel] = field(default_factory=dict)
    ready: bool = False
    _decode_lock: threading.Lock = field(default_factory=threading.Lock)

    def load(self) -> None:
        for path in sorted(self.config.checkpoint_dir.glob("*.pt")):
            if "-phase" in path.stem:  # chain checkpoints are not served
                continue
            loaded = load_checkpoint(path, device=self.config.device)
            self.models[(loaded.variant, loaded.frame)] = loaded
            logger.info(
                "serving %s/%s from %s", loaded.variant, loaded.frame, path.name
            )
        if not self.models:
            raise FileNotFoundError(
                f"no serveable checkpoints (*.pt) in {self.config.checkpoint_dir}"
            )
        self.ready = True

    def _route(self, variant: str, frame: str) -> LoadedModel:
        """Exact (variant, frame) checkpoint, else any model of the frame:
        the frame picks the model; the variant names the requesting recipe."""
        if (variant, frame) in self.models:
            return self.models[(variant, frame)]
        frame_models = sorted(
            (v, f) for v, f in self.models if f == frame
        )
        if frame_models:
            chosen = frame_models[0]
            logger.warning(
                "no checkpoint for %s/%s; serving %s/%s", variant, frame, *chosen
            )
            return self.models[chosen]
        available = ", ".join(sorted(f"{v}/{f}" for v, f in self.models))
        raise LookupError(
            f"no model for frame {frame!r} (available: {available})"
        )

    def generate(self, body: dict) -> str:
        variant = body["variant"]
        frame = body["frame"]
        loaded = self._route(variant, frame)
        text = serialize_request(
            s1=body["s1"],
            s3=body["s3"],
            entities=list(body.get("entities") or []),
            with_entities="N" in variant,
            prompt_only=bool(body.get("prompt_only", False)),
        )
        max_tokens = int(body.get("max_tokens", self.config.default_max_tokens))
        with self._decode_lock:
            return decode(
                loaded.model,
                loaded.vocab,
                text,
                max_tokens,
                loaded.fallback_word,
                params=self.config.decode,
            )


def _validate(body: object) -> str | None:
    if not isinstance(body, dict):
        return "request body must be a JSON object"
    missing = [key for key in REQUIRED_FIELDS if key not in body]
    if missing:
        return f"missing fields: {', '.join(missing)}"
    if not isinstance(body["s1"], str) or not isinstance(body["s3"], str):
        return "s1 and s3 must be strings"
    if body["frame"] not in FRAMES:
        return f"unknown frame {body['frame']!r}"
    if not isinstance(body["entities"], list):
        return "entities must be a list"
    if "max_tokens" in body:  # optional; the serving default fills it in
        try:
            if int(body["max_tokens"]) < 1:
                return "max_tokens must be >= 1"
        except (TypeError, ValueError):
            return "max_tokens must be an integer"
    return None


class _Handler(BaseHTTPRequestHandler):
    store: ModelStore  # injected by make_server

    def log_message(self, fmt, *args):
        logger.debug("http: " + fmt, *args)

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path != "/v1/health":
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        if not self.store.ready:
            self._send(503, {"error": "model loading"})
            return
        self._send(200, {"status": "ok", "backend_id": self.store.config.backend_id})

    def do_POST(self):
        if self.path != "/v1/generate":
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        if not self.store.ready:
            self._send(503, {"error": "model loading"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length)
            body = json.loads(raw)
        except (ValueError, json.JSONDecodeError):
            self._send(400, {"error": "malformed JSON body"})
            return
        problem = _validate(body)
        if problem is not None:
            self._send(400, {"error": problem})
            return
        try:
            sentence = self.store.generate(body)
        except LookupError as exc:
            self._send(400, {"error": str(exc)})
            return
        except Exception as exc:  # noqa: BLE001 - protocol forbids tracebacks
            logger.exception("generation failed")
            self._send(500, {"error": f"generation failed: {exc}"})
            return
        self._send(200, {"s2": sentence})


def make_server(config: ServingConfig, preload: bool = True) -> tuple[ThreadingHTTPServer, ModelStore]:
    """Build the HTTP server; with preload=False the store starts in the
    503 "loading" state until store.load() is called."""
    store = ModelStore(config=config)
    if preload:
        store.load()
    handler = type("BoundHandler", (_Handler,), {"store": store})
    server = ThreadingHTTPServer((config.host, config.port), handler)
    return server, store


def serve(config: ServingConfig) -> None:
    """Start serving; loads checkpoints in the background so the health
    endpoint answers 503 instead of refusing connections while loading."""
    server, store = make_server(config, preload=False)
    loader = threading.Thread(target=store.load, daemon=True)
    loader.start()
    host, port = server.server_address[:2]
    logger.info("listening on http://%s:%s (backend %s)", host, port, config.backend_id)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
