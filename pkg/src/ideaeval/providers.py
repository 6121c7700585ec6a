"""Chat-completion and embedding provider clients.

One HTTP client speaks the common chat-completions wire shape; deterministic
mocks (scripted chat, hash embedder) make full pipeline runs reproducible
without network access. A content-addressed file cache can wrap any chat
provider so identical requests are served from disk.
"""
from __future__ import annotations

import hashlib
import logging
import os
import random
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import requests

from .errors import (
    AuthError,
    MalformedResponseError,
    ProviderError,
    RateLimitError,
    TransportError,
    ValidationError,
)
from .ioutil import atomic_write_text, sha256_hex

logger = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 512
DEFAULT_TEMPERATURE = 0.0


@dataclass(frozen=True)
class GenerationConfig:
    model_name: str
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    seed: int | None = None

    def __post_init__(self):
        if self.max_tokens <= 0:
            raise ValidationError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")


@dataclass
class ChatExchange:
    """One request/response pair, recorded verbatim for audit."""

    provider_id: str
    model_name: str
    system: str
    user: str
    response: str
    wall_time: float
    token_usage: dict | None = None


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    dimension: int
    text_sha256: str

    def __post_init__(self):
        if len(self.values) != self.dimension:
            raise ValidationError(
                f"embedding has {len(self.values)} values, declared dimension {self.dimension}"
            )
        if not all(np.isfinite(self.values)):
            raise ValidationError("embedding contains non-finite values")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def _vector(values: Sequence[float], text: str) -> EmbeddingVector:
    return EmbeddingVector(
        values=tuple(float(v) for v in values),
        dimension=len(values),
        text_sha256=sha256_hex(text),
    )


# ---------------------------------------------------------------------------
# Rate limiting


class TokenBucket:
    """Thread-safe token bucket; `acquire` blocks until a token is available."""

    def __init__(self, rate_per_sec: float, capacity: int, *, clock=time.monotonic, sleep=time.sleep):
        if rate_per_sec <= 0 or capacity <= 0:
            raise ValidationError("token bucket rate and capacity must be positive")
        self.rate = rate_per_sec
        self.capacity = capacity
        self._tokens = float(capacity)
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


# ---------------------------------------------------------------------------
# Chat providers


class ChatProvider(ABC):
    """Uniform chat interface; implementations must be thread-safe."""

    provider_id: str = "chat"

    def __init__(self, max_in_flight: int = 4, rate_limiter: TokenBucket | None = None):
        self._slots = threading.Semaphore(max_in_flight)
        self._limiter = rate_limiter
        self._log_lock = threading.Lock()
        self.exchanges: list[ChatExchange] = []
        self.exchange_log: Path | None = None

    def chat(self, system: str, user: str, config: GenerationConfig) -> str:
        """Send one exchange and return the response text verbatim."""
        with self._slots:
            if self._limiter is not None:
                self._limiter.acquire()
            start = time.perf_counter()
            text, usage = self._complete(system, user, config)
        self._record(
            ChatExchange(
                provider_id=self.provider_id,
                model_name=config.model_name,
                system=system,
                user=user,
                response=text,
                wall_time=time.perf_counter() - start,
                token_usage=usage,
            )
        )
        return text

    @abstractmethod
    def _complete(self, system: str, user: str, config: GenerationConfig) -> tuple[str, dict | None]:
        ...

    def _record(self, exchange: ChatExchange) -> None:
        import json

        with self._log_lock:
            self.exchanges.append(exchange)
            if self.exchange_log is not None:
                with open(self.exchange_log, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(exchange.__dict__, ensure_ascii=False) + "\n")


RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class HttpChatProvider(ChatProvider):
    """Client for a chat-completions-style HTTP endpoint.

    Request body: {model, messages: [{role, content}], max_tokens,
    temperature[, seed]}. The credential is read from the environment
    variable named in the config, never stored in run artifacts.
    Transport and rate-limit failures are retried with exponential backoff.
    """

    def __init__(
        self,
        base_url: str,
        credential_env: str,
        *,
        provider_id: str | None = None,
        max_attempts: int = 3,
        backoff_base: float = 1.0,
        timeout: float = 120.0,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
        max_in_flight: int = 4,
        rate_limiter: TokenBucket | None = None,
    ):
        super().__init__(max_in_flight=max_in_flight, rate_limiter=rate_limiter)
        self.base_url = base_url.rstrip("/")
        self.provider_id = provider_id or f"http:{self.base_url}"
        self.credential_env = credential_env
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.timeout = timeout
        self._session = session or requests.Session()
        self._sleep = sleep

    def _credential(self) -> str:
        value = os.environ.get(self.credential_env)
        if not value:
            raise AuthError(f"credential environment variable {self.credential_env!r} is not set")
        return value

    def _complete(self, system: str, user: str, config: GenerationConfig) -> tuple[str, dict | None]:
        body = {
            "model": config.model_name,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "max_tokens": config.max_tokens,
            "temperature": config.temperature,
        }
        if config.seed is not None:
            body["seed"] = config.seed
        payload = _request_with_retry(
            self._session,
            f"{self.base_url}/chat/completions",
            body,
            self._credential(),
            max_attempts=self.max_attempts,
            backoff_base=self.backoff_base,
            timeout=self.timeout,
            sleep=self._sleep,
        )
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"unexpected chat response shape: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedResponseError("chat response content is not text")
        return text, payload.get("usage")


def _request_with_retry(
    session: requests.Session,
    url: str,
    body: dict,
    credential: str,
    *,
    max_attempts: int,
    backoff_base: float,
    timeout: float,
    sleep: Callable[[float], None],
) -> dict:
    headers = {"Authorization": f"Bearer {credential}"}
    last_error: ProviderError | None = None
    for attempt in range(max_attempts):
        if attempt:
            sleep(backoff_base * 2 ** (attempt - 1))
        try:
            resp = session.post(url, json=body, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            last_error = TransportError(f"request failed: {exc}")
            logger.warning("transport failure (attempt %d/%d): %s", attempt + 1, max_attempts, exc)
            continue
        if resp.status_code in (401, 403):
            raise AuthError(f"credential rejected ({resp.status_code})")
        if resp.status_code in RETRYABLE_STATUS:
            cls = RateLimitError if resp.status_code == 429 else TransportError
            last_error = cls(f"HTTP {resp.status_code} from {url}")
            logger.warning("retryable HTTP %d (attempt %d/%d)", resp.status_code, attempt + 1, max_attempts)
            continue
        if resp.status_code != 200:
            raise ProviderError(f"HTTP {resp.status_code} from {url}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise MalformedResponseError(f"response body is not JSON: {exc}") from exc
    assert last_error is not None
    raise last_error


class ScriptedChatProvider(ChatProvider):
    """Deterministic chat mock driven by a responder function.

    The responder receives (system, user, config) and returns the response
    text; with a pure responder a whole pipeline run is bit-reproducible.
    """

    provider_id = "mock:scripted"

    def __init__(self, responder: Callable[[str, str, GenerationConfig], str], **kwargs):
        super().__init__(**kwargs)
        self._responder = responder

    @classmethod
    def echo(cls) -> "ScriptedChatProvider":
        return cls(lambda system, user, config: user)

    @classmethod
    def from_responses(cls, responses: Sequence[str]) -> "ScriptedChatProvider":
        """Replay a fixed list of responses in call order (test use)."""
        queue = list(responses)

        def responder(system, user, config):
            if not queue:
                raise ProviderError("scripted provider exhausted its responses")
            return queue.pop(0)

        return cls(responder)

    def _complete(self, system: str, user: str, config: GenerationConfig) -> tuple[str, dict | None]:
        return self._responder(system, user, config), None


def offline_responder(system: str, user: str, config: GenerationConfig) -> str:
    """Pure function of its inputs, used by --offline pipeline runs.

    Routes on the fixed phrases of the built-in prompt templates: judge
    prompts get a numeric containment answer, contribution prompts a short
    passage or NONE, generation prompts a bulleted idea list.
    """
    digest = hashlib.blake2b(
        f"{config.model_name}\x1f{system}\x1f{user}".encode("utf-8"), digest_size=8
    ).digest()
    rng = random.Random(int.from_bytes(digest, "big"))
    if "Is the single idea contained within the collection of ideas?" in user:
        if rng.random() < 0.2:
            return "No, the idea is not contained in the collection."
        return f"Yes. Degree of presence: {rng.randrange(0, 101) / 100:.2f}"
    if "extract contributions or findings or methods" in user:
        if rng.random() < 0.15:
            return "NONE"
        return (
            f"Proposes a {rng.choice(_ADJECTIVES)} {rng.choice(_TOPICS)} method and "
            f"reports improved {rng.choice(_TOPICS)} results."
        )
    if "brainstorm to generate potential" in user:
        count = rng.randrange(4, 7)
        lines = []
        for i in range(1, count + 1):
            words = " ".join(rng.choice(_TOPICS) for _ in range(rng.randrange(8, 30)))
            lines.append(f"{i}. {rng.choice(_VERBS).capitalize()} {rng.choice(_ADJECTIVES)} {words}.")
        return "\n".join(lines)
    return user


_VERBS = ["investigate", "extend", "evaluate", "combine", "benchmark", "formalize"]
_ADJECTIVES = ["robust", "scalable", "interpretable", "lightweight", "adaptive", "hybrid"]
_TOPICS = [
    "representation learning",
    "evaluation protocols",
    "data augmentation",
    "uncertainty estimation",
    "domain adaptation",
    "retrieval pipelines",
    "annotation tooling",
    "ablation studies",
]


# ---------------------------------------------------------------------------
# Response cache


class ResponseCache:
    """Content-addressed chat response cache; one file per request digest."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    @staticmethod
    def key(provider_id: str, system: str, user: str, config: GenerationConfig) -> str:
        import json

        material = json.dumps(
            {
                "provider": provider_id,
                "model": config.model_name,
                "system": system,
                "user": user,
                "max_tokens": config.max_tokens,
                "temperature": config.temperature,
                "seed": config.seed,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return sha256_hex(material)

    def _path(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.txt"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def put(self, key: str, response: str) -> None:
        atomic_write_text(self._path(key), response)


class CachingChatProvider(ChatProvider):
    """Serves repeated requests from a ResponseCache; misses delegate."""

    def __init__(self, inner: ChatProvider, cache: ResponseCache):
        super().__init__(max_in_flight=64)
        self.inner = inner
        self.cache = cache
        self.provider_id = inner.provider_id
        self.hits = 0
        self.misses = 0

    def chat(self, system: str, user: str, config: GenerationConfig) -> str:
        key = ResponseCache.key(self.inner.provider_id, system, user, config)
        cached = self.cache.get(key)
        if cached is not None:
            self.hits += 1
            return cached
        self.misses += 1
        text = self.inner.chat(system, user, config)
        self.cache.put(key, text)
        return text

    def _complete(self, system, user, config):  # pragma: no cover - chat() is overridden
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Embedding providers


class EmbeddingProvider(ABC):
    """Maps texts to fixed-dimension vectors; order-preserving."""

    embedder_id: str = "embed"

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValidationError("embed requires at least one text")
        vectors = self._embed(list(texts))
        if len(vectors) != len(texts):
            raise MalformedResponseError(
                f"embedder returned {len(vectors)} vectors for {len(texts)} texts"
            )
        dims = {v.dimension for v in vectors}
        if len(dims) != 1:
            raise MalformedResponseError(f"mixed embedding dimensions in one batch: {sorted(dims)}")
        return vectors

    @abstractmethod
    def _embed(self, texts: list[str]) -> list[EmbeddingVector]:
        ...


class HashEmbedder(EmbeddingProvider):
    """Deterministic offline embedder: a seeded digest of the text drives a
    PRNG draw of `dimension` coordinates, unit-normalized. Not semantic —
    distinct texts get (near-)orthogonal directions — but identical text
    always maps to the identical vector, which is what offline tests need.
    """

    def __init__(self, dimension: int = 64, seed: int = 0):
        if dimension <= 0:
            raise ValidationError("dimension must be positive")
        self.dimension = dimension
        self.seed = seed
        self.embedder_id = f"hash:d={dimension}:seed={seed}"

    def _embed(self, texts: list[str]) -> list[EmbeddingVector]:
        return [self._one(t) for t in texts]

    def _one(self, text: str) -> EmbeddingVector:
        digest = hashlib.blake2b(
            text.encode("utf-8"), digest_size=16, key=self.seed.to_bytes(8, "little")
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        values = rng.standard_normal(self.dimension)
        values /= np.linalg.norm(values)
        return _vector(values, text)


class StaticEmbedder(EmbeddingProvider):
    """Fixed text → vector mapping for tests with hand-constructed geometry."""

    def __init__(self, mapping: dict[str, Sequence[float]], dimension: int | None = None):
        if not mapping:
            raise ValidationError("StaticEmbedder needs at least one entry")
        self.mapping = {k: tuple(float(x) for x in v) for k, v in mapping.items()}
        self.dimension = dimension or len(next(iter(self.mapping.values())))
        self.embedder_id = f"static:d={self.dimension}"

    def _embed(self, texts: list[str]) -> list[EmbeddingVector]:
        vectors = []
        for text in texts:
            if text not in self.mapping:
                raise ValidationError(f"StaticEmbedder has no vector for {text!r}")
            vectors.append(_vector(self.mapping[text], text))
        return vectors


class HttpEmbeddingProvider(EmbeddingProvider):
    """Client for an embeddings HTTP endpoint: POST {model, input: [...]}."""

    def __init__(
        self,
        base_url: str,
        model: str,
        credential_env: str,
        *,
        max_attempts: int = 3,
        backoff_base: float = 1.0,
        timeout: float = 120.0,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.credential_env = credential_env
        self.embedder_id = f"http:{self.base_url}:{model}"
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.timeout = timeout
        self._session = session or requests.Session()
        self._sleep = sleep

    def _embed(self, texts: list[str]) -> list[EmbeddingVector]:
        credential = os.environ.get(self.credential_env)
        if not credential:
            raise AuthError(f"credential environment variable {self.credential_env!r} is not set")
        payload = _request_with_retry(
            self._session,
            f"{self.base_url}/embeddings",
            {"model": self.model, "input": texts},
            credential,
            max_attempts=self.max_attempts,
            backoff_base=self.backoff_base,
            timeout=self.timeout,
            sleep=self._sleep,
        )
        try:
            rows = payload["data"]
            by_index = sorted(rows, key=lambda r: r.get("index", 0))
            return [_vector(row["embedding"], text) for row, text in zip(by_index, texts)]
        except (KeyError, TypeError) as exc:
            raise MalformedResponseError(f"unexpected embedding response shape: {exc}") from exc
