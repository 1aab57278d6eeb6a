"""Correction backends: live OpenAI-compatible HTTP, disk-cache replay,
and deterministic mocks for offline work.

Every request is identified by a stable fingerprint (SHA-256 over the
model name and the full message list).  Live replies are persisted one
JSON file per fingerprint under ``<cache_dir>/<model>/``, so threshold
sweeps and re-runs never re-bill the API.  ``correct`` is total: any
backend failure produces a record with the error set and the original
hypothesis as fallback text, never an exception.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .prompting import ChatRequest, UnusableReplyError, sanitize_response
from .types import Utterance

logger = logging.getLogger(__name__)


class BackendKind(enum.Enum):
    HTTP_CHAT = "http"
    REPLAY = "replay"
    IDENTITY = "identity"
    ORACLE = "oracle"
    SCRIPTED = "scripted"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


class ConfigError(ValueError):
    """Invalid backend configuration."""


class BackendError(RuntimeError):
    """A single request failed (after retries, where applicable)."""

    def __init__(self, message: str, retryable: bool = True):
        super().__init__(message)
        self.retryable = retryable


@dataclass
class BackendConfig:
    kind: BackendKind
    model_name: str = "gpt-3.5-turbo-0125"
    endpoint_url: str | None = None
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 30.0
    max_retries: int = 3
    cache_dir: str | Path | None = None
    backoff_base: float = 0.5
    max_in_flight: int = 4
    scripted_replies: dict[str, str] | None = None

    def validate(self) -> None:
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.kind is BackendKind.HTTP_CHAT:
            if not self.endpoint_url:
                raise ConfigError("http backend requires endpoint_url")
            if not self.api_key_env:
                raise ConfigError("http backend requires api_key_env")
        if self.kind is BackendKind.REPLAY and self.cache_dir is None:
            raise ConfigError("replay backend requires cache_dir")


@dataclass(frozen=True)
class CorrectionRecord:
    utterance_id: str
    request_fingerprint: str
    raw_reply: str
    corrected_text: str
    backend: str
    from_cache: bool
    latency: float
    error: str | None = None


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    failures: int = 0


def request_fingerprint(request: ChatRequest, model_name: str) -> str:
    """Stable across runs and platforms: SHA-256 of the canonical JSON
    encoding of the model name plus the full message list."""
    canonical = json.dumps(
        {"model": model_name, "messages": request.messages()},
        ensure_ascii=True,
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ResponseCache:
    """One JSON file per fingerprint; writes are atomic (temp + rename)."""

    def __init__(self, cache_dir: str | Path, model_name: str):
        self.root = Path(cache_dir) / model_name

    def path_for(self, fingerprint: str) -> Path:
        return self.root / f"{fingerprint}.json"

    def get(self, fingerprint: str) -> str | None:
        path = self.path_for(fingerprint)
        if not path.exists():
            return None
        entry = json.loads(path.read_text(encoding="utf-8"))
        return entry["reply"]

    def put(self, fingerprint: str, request: ChatRequest, model_name: str, reply: str) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        entry = {
            "fingerprint": fingerprint,
            "model": model_name,
            "request": {"system": request.system, "turns": list(request.turns)},
            "reply": reply,
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }
        fd, tmp_name = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                json.dump(entry, handle, ensure_ascii=False, indent=2)
        except BaseException:
            os.unlink(tmp_name)
            raise
        os.replace(tmp_name, self.path_for(fingerprint))


class Backend:
    """Interface shared by all backends.

    ``reply`` returns (raw_reply, from_cache) or raises BackendError.
    ``live_calls`` counts outbound HTTP requests (0 for offline kinds).
    """

    label: str = "backend"
    model_name: str = ""
    live_calls: int = 0

    def reply(self, request: ChatRequest, utt: Utterance) -> tuple[str, bool]:
        raise NotImplementedError


class IdentityBackend(Backend):
    """Echoes the hypothesis; useful as a no-op baseline."""

    label = "identity"

    def reply(self, request: ChatRequest, utt: Utterance) -> tuple[str, bool]:
        return utt.hypothesis_text, False


class OracleBackend(Backend):
    """Returns the reference transcript: the upper bound on correction."""

    label = "oracle"

    def reply(self, request: ChatRequest, utt: Utterance) -> tuple[str, bool]:
        if utt.reference_text is None:
            raise BackendError(f"utterance {utt.id!r} has no reference", retryable=False)
        return utt.reference_text, False


class ScriptedBackend(Backend):
    """Replays a canned id -> reply map; unknown ids echo the hypothesis."""

    label = "scripted"

    def __init__(self, replies: dict[str, str]):
        self.replies = dict(replies)
        self.calls = 0
        self._lock = threading.Lock()

    def reply(self, request: ChatRequest, utt: Utterance) -> tuple[str, bool]:
        with self._lock:
            self.calls += 1
        return self.replies.get(utt.id, utt.hypothesis_text), False


class ReplayBackend(Backend):
    """Serves exclusively from a previously written cache; a miss is an error."""

    def __init__(self, cache_dir: str | Path, model_name: str):
        self.cache = ResponseCache(cache_dir, model_name)
        self.model_name = model_name
        self.label = f"replay:{model_name}"

    def reply(self, request: ChatRequest, utt: Utterance) -> tuple[str, bool]:
        fingerprint = request_fingerprint(request, self.model_name)
        reply = self.cache.get(fingerprint)
        if reply is None:
            raise BackendError(f"cache miss for fingerprint {fingerprint}", retryable=False)
        return reply, True


class HttpChatBackend(Backend):
    """OpenAI-compatible chat-completions endpoint with retry and cache.

    Sampling parameters are deliberately absent from the payload so the
    server applies its defaults.
    """

    def __init__(self, config: BackendConfig):
        config.validate()
        self.config = config
        self.model_name = config.model_name
        self.label = f"http:{config.model_name}"
        self.cache = (
            ResponseCache(config.cache_dir, config.model_name)
            if config.cache_dir is not None
            else None
        )
        self.live_calls = 0
        self._lock = threading.Lock()

    def _bearer_token(self) -> str:
        token = os.environ.get(self.config.api_key_env)
        if not token:
            raise BackendError(
                f"environment variable {self.config.api_key_env} is not set",
                retryable=False,
            )
        return token

    def _post_once(self, body: dict) -> str:
        with self._lock:
            self.live_calls += 1
        response = requests.post(
            self.config.endpoint_url,
            json=body,
            headers={
                "Authorization": f"Bearer {self._bearer_token()}",
                "Content-Type": "application/json",
            },
            timeout=self.config.timeout,
        )
        if 400 <= response.status_code < 500:
            raise BackendError(
                f"HTTP {response.status_code}: {response.text[:200]}", retryable=False
            )
        if response.status_code != 200:
            raise BackendError(f"HTTP {response.status_code}", retryable=True)
        try:
            payload = response.json()
            content = payload["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc}", retryable=False)
        if not isinstance(content, str):
            raise BackendError("completion content is not a string", retryable=False)
        return content

    def reply(self, request: ChatRequest, utt: Utterance) -> tuple[str, bool]:
        fingerprint = request_fingerprint(request, self.config.model_name)
        if self.cache is not None:
            cached = self.cache.get(fingerprint)
            if cached is not None:
                return cached, True

        body = {"model": self.config.model_name, "messages": request.messages()}
        last_error: BackendError | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                reply = self._post_once(body)
                if self.cache is not None:
                    self.cache.put(fingerprint, request, self.config.model_name, reply)
                return reply, False
            except BackendError as exc:
                if not exc.retryable:
                    raise
                last_error = exc
            except (requests.Timeout, requests.ConnectionError) as exc:
                last_error = BackendError(f"network error: {exc}")
            if attempt < self.config.max_retries:
                time.sleep(self.config.backoff_base * (2**attempt))
        assert last_error is not None
        raise last_error


def make_backend(config: BackendConfig) -> Backend:
    config.validate()
    if config.kind is BackendKind.HTTP_CHAT:
        return HttpChatBackend(config)
    if config.kind is BackendKind.REPLAY:
        assert config.cache_dir is not None
        return ReplayBackend(config.cache_dir, config.model_name)
    if config.kind is BackendKind.IDENTITY:
        return IdentityBackend()
    if config.kind is BackendKind.ORACLE:
        return OracleBackend()
    if config.kind is BackendKind.SCRIPTED:
        return ScriptedBackend(config.scripted_replies or {})
    raise ConfigError(f"unknown backend kind {config.kind!r}")


def correct(
    request: ChatRequest,
    backend: Backend | BackendConfig,
    utt: Utterance,
) -> CorrectionRecord:
    """Obtain a corrected transcription for one utterance.

    Never raises for per-request failures: the record carries the error
    and falls back to the original hypothesis.
    """
    if isinstance(backend, BackendConfig):
        backend = make_backend(backend)
    fingerprint = request_fingerprint(request, backend.model_name)
    started = time.monotonic()
    try:
        raw_reply, from_cache = backend.reply(request, utt)
        corrected = sanitize_response(raw_reply)
        error = None
    except (BackendError, UnusableReplyError) as exc:
        logger.warning("correction failed for %s: %s", utt.id, exc)
        raw_reply = ""
        corrected = utt.hypothesis_text
        from_cache = False
        error = str(exc) or exc.__class__.__name__
    return CorrectionRecord(
        utterance_id=utt.id,
        request_fingerprint=fingerprint,
        raw_reply=raw_reply,
        corrected_text=corrected,
        backend=backend.label,
        from_cache=from_cache,
        latency=time.monotonic() - started,
        error=error,
    )


def warm_cache(chat_requests: list[ChatRequest], config: BackendConfig) -> CacheStats:
    """Answer and persist every request so later runs can replay offline.

    Requires an http backend with a cache directory.  Partial progress
    is persisted; failures leave the cache unchanged for that request.
    """
    if config.kind is not BackendKind.HTTP_CHAT:
        raise ConfigError("warm_cache requires an http backend")
    if config.cache_dir is None:
        raise ConfigError("warm_cache requires cache_dir")
    backend = HttpChatBackend(config)
    assert backend.cache is not None
    stats = CacheStats()
    lock = threading.Lock()
    placeholder = Utterance(id="warm-cache")

    def visit(chat_request: ChatRequest) -> None:
        fingerprint = request_fingerprint(chat_request, config.model_name)
        if backend.cache.get(fingerprint) is not None:
            with lock:
                stats.hits += 1
            return
        with lock:
            stats.misses += 1
        try:
            backend.reply(chat_request, placeholder)
        except BackendError as exc:
            logger.warning("warm_cache failure for %s: %s", fingerprint, exc)
            with lock:
                stats.failures += 1

    if config.max_in_flight > 1 and len(chat_requests) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
            list(pool.map(visit, chat_requests))
    else:
        for chat_request in chat_requests:
            visit(chat_request)
    return stats
