"""Uniform contract for obtaining generated sentences from any backend.

Three backends speak one small interface: a deterministic mock (offline
tests and dry runs), a replay backend that serves recorded generations
by instance id, and an HTTP client for the /v1 sidecar protocol. The
batch driver fans requests out over a bounded worker pool, preserves
input order, and collects per-instance failures without aborting runs.

The /v1 wire protocol (authoritative here):
  POST {base}/v1/generate
       {"s1","s3","frame","entities":[...],"variant","max_tokens",
        "prompt_only"} -> 200 {"s2": str} | 4xx {"error": str}
  GET  {base}/v1/health -> {"status": "ok", "backend_id": str}
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import requests

from .frames import Frame
from .instances import Instance

logger = logging.getLogger(__name__)


class GenerationError(RuntimeError):
    """A request failed permanently (after retries)."""


class ProtocolError(GenerationError):
    """Backend answered outside the /v1 contract."""


@dataclass(frozen=True)
class GenerationRequest:
    s1: str
    s3: str
    frame: Frame
    entities: tuple[str, ...]
    variant: str
    max_tokens: int = 60
    prompt_only: bool = False  # drop s3+entities; plain-LM prompting mode
    instance_id: str | None = None  # local routing only, never on the wire

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")

    def wire_body(self) -> dict:
        return {
            "s1": self.s1,
            "s3": self.s3,
            "frame": self.frame.value,
            "entities": list(self.entities),
            "variant": self.variant,
            "max_tokens": self.max_tokens,
            "prompt_only": self.prompt_only,
        }


@dataclass(frozen=True)
class ReframedInstance:
    instance_id: str
    source_frame: Frame
    target_frame: Frame
    generated: str
    backend_id: str
    provenance_marker: bool = True  # machine-generated text is always marked

    def __post_init__(self) -> None:
        if not self.generated:
            raise ValueError(f"empty generation for {self.instance_id}")

    @property
    def intra_frame(self) -> bool:
        return self.source_frame == self.target_frame


@dataclass(frozen=True)
class BatchFailure:
    instance_id: str
    target_frame: Frame
    error: str


@dataclass
class BatchResult:
    results: list[ReframedInstance] = field(default_factory=list)
    failures: list[BatchFailure] = field(default_factory=list)

    def summary(self) -> str:
        return f"{len(self.results)} generated, {len(self.failures)} failed"


# Per-frame keyword sets for the mock backend; the leading word is the
# frame's signature term, the rest pad deterministic variety.
FRAME_KEYWORDS: dict[Frame, tuple[str, ...]] = {
    Frame.ECONOMIC: ("industry", "million", "tobacco", "smoking"),
    Frame.LEGALITY: ("court", "law", "judge", "supreme"),
    Frame.POLICY: ("bill", "house", "ban", "state"),
    Frame.CRIME: ("police", "murder", "penalty", "death"),
}


def _stable_digest(request: GenerationRequest, seed: int) -> int:
    body = request.wire_body()
    if request.prompt_only:  # output must not depend on dropped fields
        body["s3"] = ""
        body["entities"] = []
    payload = json.dumps({"seed": seed, **body}, sort_keys=True, ensure_ascii=False)
    return int.from_bytes(hashlib.sha256(payload.encode()).digest()[:8], "big")


def mock_generate(request: GenerationRequest, seed: int = 0) -> str:
    """Deterministic template output carrying the request entities and a
    frame keyword; same request + seed always yields the same string."""
    digest = _stable_digest(request, seed)
    keywords = FRAME_KEYWORDS[request.frame]
    primary = keywords[0]
    secondary = keywords[1 + digest % (len(keywords) - 1)]
    entities = () if request.prompt_only else request.entities[:3]
    subject = ", ".join(entities) if entities else "Observers"
    templates = (
        f"{subject} said the {primary} question would shape the {secondary} debate.",
        f"{subject} argued that {primary} concerns outweighed the {secondary} dispute.",
        f"{subject} pressed the {primary} case while the {secondary} fight went on.",
    )
    return templates[(digest >> 8) % len(templates)]


class MockBackend:
    """Offline test double; output is a pure function of request + seed."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.backend_id = f"mock:{seed}"

    def generate_text(self, request: GenerationRequest) -> str:
        return mock_generate(request, self.seed)


class ReplayBackend:
    """Serves recorded generations from a JSONL file.

    Records: {"instance_id", "target_frame", "s2"}; records without a
    target_frame match any frame for that instance. Files produced by
    the reframe command replay directly (their text key is "generated").
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.backend_id = f"replay:{self.path.name}"
        self._by_key: dict[tuple[str, str | None], str] = {}
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if "instance_id" not in obj:  # tolerated header line
                    continue
                text = obj.get("s2", obj.get("generated"))
                if not isinstance(text, str):
                    raise ProtocolError(
                        f"{self.path}: record for {obj['instance_id']} has no "
                        f"'s2' or 'generated' string"
                    )
                key = (obj["instance_id"], obj.get("target_frame"))
                self._by_key[key] = text

    def generate_text(self, request: GenerationRequest) -> str:
        if request.instance_id is None:
            raise GenerationError("replay backend needs an instance id")
        for key in (
            (request.instance_id, request.frame.value),
            (request.instance_id, None),
        ):
            if key in self._by_key:
                return self._by_key[key]
        raise GenerationError(
            f"no recorded generation for {request.instance_id} "
            f"-> frame {request.frame.value}"
        )


class HttpBackend:
    """Client for the /v1 protocol."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.backend_id = f"http:{self.base_url}"

    def health(self) -> dict:
        try:
            response = requests.get(
                f"{self.base_url}/v1/health", timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise ProtocolError(f"health check failed: {exc}") from exc
        if response.status_code != 200:
            raise ProtocolError(f"health check returned {response.status_code}")
        body = response.json()
        if body.get("status") != "ok":
            raise ProtocolError(f"backend not healthy: {body}")
        self.backend_id = str(body.get("backend_id", self.backend_id))
        return body

    def generate_text(self, request: GenerationRequest) -> str:
        try:
            response = requests.post(
                f"{self.base_url}/v1/generate",
                json=request.wire_body(),
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProtocolError(f"generate request failed: {exc}") from exc
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError(
                f"non-JSON response (HTTP {response.status_code})"
            ) from exc
        if response.status_code != 200:
            raise ProtocolError(
                f"HTTP {response.status_code}: {body.get('error', body)}"
            )
        if not isinstance(body.get("s2"), str):
            raise ProtocolError(f"response lacks string 's2': {body}")
        return body["s2"]


def _one_line(text: str) -> str:
    return " ".join(text.split())


@dataclass(frozen=True)
class GenerationOutcome:
    text: str
    backend_id: str
    latency_s: float


def generate(backend, request: GenerationRequest, retries: int = 2) -> GenerationOutcome:
    """One generation with retry; output trimmed to a single line.

    Transient failures (protocol errors, timeouts, empty generations) are
    retried up to `retries` extra attempts, then surfaced as a
    GenerationError.
    """
    attempts = retries + 1
    last_error: Exception | None = None
    for attempt in range(attempts):
        started = time.monotonic()
        try:
            text = _one_line(backend.generate_text(request))
            if not text:
                raise ProtocolError("empty generation")
            latency = time.monotonic() - started
            logger.debug(
                "generated via %s in %.3fs (attempt %d)",
                backend.backend_id,
                latency,
                attempt + 1,
            )
            return GenerationOutcome(
                text=text, backend_id=backend.backend_id, latency_s=latency
            )
        except GenerationError as exc:
            last_error = exc
            if attempt + 1 < attempts:
                logger.debug("attempt %d failed (%s); retrying", attempt + 1, exc)
    raise GenerationError(f"failed after {attempts} attempts: {last_error}")


def reframe_batch(
    instances: Sequence[Instance],
    target_frames: Frame | Sequence[Frame],
    variant: str,
    backend,
    concurrency_limit: int = 4,
    max_tokens: int = 60,
    retries: int = 2,
    prompt_only: bool = False,
) -> BatchResult:
    """One ReframedInstance per (target frame, instance), in that order.

    At most concurrency_limit requests are in flight; collection order
    equals task order regardless of completion order. Failed instances
    become structured failures and the run continues.
    """
    if isinstance(target_frames, Frame):  # a str-enum would iterate chars
        target_frames = [target_frames]
    tasks = [
        (instance, frame) for frame in target_frames for instance in instances
    ]

    def run_one(task: tuple[Instance, Frame]):
        instance, frame = task
        request = GenerationRequest(
            s1=instance.s1.text,
            s3=instance.s3.text,
            frame=frame,
            entities=instance.entities,
            variant=variant,
            max_tokens=max_tokens,
            prompt_only=prompt_only,
            instance_id=instance.id,
        )
        try:
            outcome = generate(backend, request, retries=retries)
            return ReframedInstance(
                instance_id=instance.id,
                source_frame=instance.frame,
                target_frame=frame,
                generated=outcome.text,
                backend_id=outcome.backend_id,
            )
        except GenerationError as exc:
            return BatchFailure(
                instance_id=instance.id, target_frame=frame, error=str(exc)
            )

    result = BatchResult()
    if not tasks:
        return result
    with ThreadPoolExecutor(max_workers=max(1, concurrency_limit)) as pool:
        for outcome in pool.map(run_one, tasks):
            if isinstance(outcome, BatchFailure):
                result.failures.append(outcome)
            else:
                result.results.append(outcome)
    if result.failures:
        logger.warning("reframe batch: %s", result.summary())
    return result


def reframed_to_record(item: ReframedInstance) -> dict:
    return {
        "instance_id": item.instance_id,
        "source_frame": item.source_frame.value,
        "target_frame": item.target_frame.value,
        "generated": item.generated,
        "backend_id": item.backend_id,
        "provenance_marker": item.provenance_marker,
    }


def reframed_from_record(record: dict) -> ReframedInstance:
    return ReframedInstance(
        instance_id=record["instance_id"],
        source_frame=Frame(record["source_frame"]),
        target_frame=Frame(record["target_frame"]),
        generated=record["generated"],
        backend_id=record["backend_id"],
        provenance_marker=record["provenance_marker"],
    )


@dataclass(frozen=True)
class ConformanceCheck:
    name: str
    passed: bool
    detail: str


def run_protocol_conformance(
    base_url: str,
    timeout: float = 30.0,
    variant: str = "S0",
    frame: Frame = Frame.ECONOMIC,
) -> list[ConformanceCheck]:
    """Drive a live backend through the /v1 contract.

    Checks: health shape, a well-formed generation, 400 on malformed
    JSON, 4xx on missing fields, and prompt-only invariance (responses
    must not depend on s3 when prompt_only is set; assumes the backend
    decodes deterministically). The probed variant/frame are
    parameterizable for backends hosting a subset of models.
    """
    base = base_url.rstrip("/")
    checks: list[ConformanceCheck] = []

    def record(name: str, passed: bool, detail: str = "") -> None:
        checks.append(ConformanceCheck(name=name, passed=passed, detail=detail))

    try:
        response = requests.get(f"{base}/v1/health", timeout=timeout)
        body = response.json()
        record(
            "health",
            response.status_code == 200
            and body.get("status") == "ok"
            and isinstance(body.get("backend_id"), str),
            f"HTTP {response.status_code}: {body}",
        )
    except Exception as exc:  # noqa: BLE001 - report, don't raise
        record("health", False, str(exc))

    request = GenerationRequest(
        s1="Lawmakers debated the measure for a week.",
        s3="The vote was postponed until spring.",
        frame=frame,
        entities=("Congress",),
        variant=variant,
        max_tokens=32,
    )
    try:
        response = requests.post(
            f"{base}/v1/generate", json=request.wire_body(), timeout=timeout
        )
        body = response.json()
        record(
            "generate",
            response.status_code == 200
            and isinstance(body.get("s2"), str)
            and bool(body["s2"].strip()),
            f"HTTP {response.status_code}: {body}",
        )
    except Exception as exc:
        record("generate", False, str(exc))

    try:
        response = requests.post(
            f"{base}/v1/generate",
            data="this is not json",
            headers={"Content-Type": "application/json"},
            timeout=timeout,
        )
        body = response.json()
        record(
            "malformed_request_400",
            response.status_code == 400 and isinstance(body.get("error"), str),
            f"HTTP {response.status_code}: {body}",
        )
    except Exception as exc:
        record("malformed_request_400", False, str(exc))

    try:
        response = requests.post(
            f"{base}/v1/generate", json={"s1": "only one field"}, timeout=timeout
        )
        body = response.json()
        record(
            "missing_fields_4xx",
            400 <= response.status_code < 500 and isinstance(body.get("error"), str),
            f"HTTP {response.status_code}: {body}",
        )
    except Exception as exc:
        record("missing_fields_4xx", False, str(exc))

    try:
        base_body = request.wire_body() | {"prompt_only": True}
        changed = base_body | {"s3": "A completely different ending sentence."}
        first = requests.post(f"{base}/v1/generate", json=base_body, timeout=timeout)
        second = requests.post(f"{base}/v1/generate", json=changed, timeout=timeout)
        ok = (
            first.status_code == 200
            and second.status_code == 200
            and first.json().get("s2") == second.json().get("s2")
        )
        record(
            "prompt_only_invariance",
            ok,
            f"'{first.json().get('s2')}' vs '{second.json().get('s2')}'",
        )
    except Exception as exc:
        record("prompt_only_invariance", False, str(exc))

    return checks
