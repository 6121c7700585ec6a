"""Run configuration: file format, validation, and provider construction.

Secrets never appear in config or run artifacts; config names the
environment variable that holds each credential and resolution happens at
provider construction time.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .generation import TemplateName
from .ioutil import read_json
from .matcher import DEFAULT_DECISION_THRESHOLD, DEFAULT_EMBED_THRESHOLD, MatcherBackend
from .providers import (
    DEFAULT_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
    CachingChatProvider,
    ChatProvider,
    EmbeddingProvider,
    GenerationConfig,
    HashEmbedder,
    HttpChatProvider,
    HttpEmbeddingProvider,
    ResponseCache,
    ScriptedChatProvider,
    offline_responder,
)


@dataclass(frozen=True)
class ChatProviderConfig:
    kind: str  # "http" | "mock"
    base_url: str = ""
    credential_env: str = ""

    def validate(self, offline: bool) -> None:
        if self.kind not in ("http", "mock"):
            raise ConfigError(f"unknown chat provider kind {self.kind!r}")
        if self.kind == "http":
            if offline:
                raise ConfigError("offline mode requires a mock chat provider")
            if not self.base_url:
                raise ConfigError("http chat provider needs base_url")
            if not self.credential_env:
                raise ConfigError("http chat provider needs credential_env")
            if not os.environ.get(self.credential_env):
                raise ConfigError(
                    f"credential environment variable {self.credential_env!r} is not set"
                )


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: str  # "http" | "hash"
    base_url: str = ""
    model: str = ""
    credential_env: str = ""
    dimension: int = 64
    seed: int = 0

    def validate(self, offline: bool) -> None:
        if self.kind not in ("http", "hash"):
            raise ConfigError(f"unknown embedding provider kind {self.kind!r}")
        if self.kind == "http":
            if offline:
                raise ConfigError("offline mode requires the hash embedding provider")
            if not self.base_url or not self.model:
                raise ConfigError("http embedding provider needs base_url and model")
            if not self.credential_env:
                raise ConfigError("http embedding provider needs credential_env")
            if not os.environ.get(self.credential_env):
                raise ConfigError(
                    f"credential environment variable {self.credential_env!r} is not set"
                )


@dataclass(frozen=True)
class MatcherConfig:
    backend: MatcherBackend = MatcherBackend.EmbeddingThreshold
    embed_threshold: float = DEFAULT_EMBED_THRESHOLD
    decision_threshold: float = DEFAULT_DECISION_THRESHOLD
    judge_model: str = ""


@dataclass
class RunConfig:
    corpus: str
    output_dir: str
    models: list[str]
    template: TemplateName = TemplateName.Full
    chat: ChatProviderConfig = field(default_factory=lambda: ChatProviderConfig(kind="mock"))
    embedding: EmbeddingProviderConfig = field(
        default_factory=lambda: EmbeddingProviderConfig(kind="hash")
    )
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    overlap_fraction: float = 0.20
    seed: int = 0
    cache_dir: str = ""
    max_in_flight: int = 4
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    generation_seed: int | None = None

    def validate(self, offline: bool = False) -> None:
        if not self.models:
            raise ConfigError("config needs at least one model name")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("model names must be unique")
        if not (0.0 <= self.overlap_fraction <= 1.0):
            raise ConfigError("overlap_fraction must be in [0, 1]")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be at least 1")
        self.chat.validate(offline)
        self.embedding.validate(offline)
        if self.matcher.backend == MatcherBackend.LlmJudge and not self.judge_model:
            raise ConfigError("LlmJudge backend needs a judge model or a models list")

    @property
    def judge_model(self) -> str:
        return self.matcher.judge_model or (self.models[0] if self.models else "")

    def generation_config(self, model_name: str) -> GenerationConfig:
        return GenerationConfig(
            model_name=model_name,
            max_tokens=self.max_tokens,
            temperature=self.temperature,
            seed=self.generation_seed,
        )

    def to_dict(self) -> dict:
        """Manifest snapshot; carries env variable names, never values."""
        return {
            "corpus": self.corpus,
            "output_dir": self.output_dir,
            "models": list(self.models),
            "template": self.template.value,
            "chat": {
                "kind": self.chat.kind,
                "base_url": self.chat.base_url,
                "credential_env": self.chat.credential_env,
            },
            "embedding": {
                "kind": self.embedding.kind,
                "base_url": self.embedding.base_url,
                "model": self.embedding.model,
                "credential_env": self.embedding.credential_env,
                "dimension": self.embedding.dimension,
                "seed": self.embedding.seed,
            },
            "matcher": {
                "backend": self.matcher.backend.value,
                "embed_threshold": self.matcher.embed_threshold,
                "decision_threshold": self.matcher.decision_threshold,
                "judge_model": self.matcher.judge_model,
            },
            "overlap_fraction": self.overlap_fraction,
            "seed": self.seed,
            "cache_dir": self.cache_dir,
            "max_in_flight": self.max_in_flight,
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
            "generation_seed": self.generation_seed,
        }


def _enum(value: str, enum_cls, what: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"unknown {what} {value!r}; expected one of: {allowed}")


def load_config(path: str | Path) -> RunConfig:
    data = read_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    try:
        corpus = str(data["corpus"])
        output_dir = str(data["output_dir"])
        models = [str(m) for m in data["models"]]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: missing required field: {exc}") from exc
    chat_raw = data.get("chat_provider", {"kind": "mock"})
    embed_raw = data.get("embedding_provider", {"kind": "hash"})
    matcher_raw = data.get("matcher", {})
    gen_raw = data.get("generation", {})
    try:
        return RunConfig(
            corpus=corpus,
            output_dir=output_dir,
            models=models,
            template=_enum(str(data.get("template", "Full")), TemplateName, "template"),
            chat=ChatProviderConfig(
                kind=str(chat_raw.get("kind", "mock")),
                base_url=str(chat_raw.get("base_url", "")),
                credential_env=str(chat_raw.get("credential_env", "")),
            ),
            embedding=EmbeddingProviderConfig(
                kind=str(embed_raw.get("kind", "hash")),
                base_url=str(embed_raw.get("base_url", "")),
                model=str(embed_raw.get("model", "")),
                credential_env=str(embed_raw.get("credential_env", "")),
                dimension=int(embed_raw.get("dimension", 64)),
                seed=int(embed_raw.get("seed", 0)),
            ),
            matcher=MatcherConfig(
                backend=_enum(
                    str(matcher_raw.get("backend", "EmbeddingThreshold")),
                    MatcherBackend,
                    "matcher backend",
                ),
                embed_threshold=float(matcher_raw.get("embed_threshold", DEFAULT_EMBED_THRESHOLD)),
                decision_threshold=float(
                    matcher_raw.get("decision_threshold", DEFAULT_DECISION_THRESHOLD)
                ),
                judge_model=str(matcher_raw.get("judge_model", "")),
            ),
            overlap_fraction=float(data.get("overlap_fraction", 0.20)),
            seed=int(data.get("seed", 0)),
            cache_dir=str(data.get("cache_dir", "")),
            max_in_flight=int(data.get("max_in_flight", 4)),
            max_tokens=int(gen_raw.get("max_tokens", DEFAULT_MAX_TOKENS)),
            temperature=float(gen_raw.get("temperature", DEFAULT_TEMPERATURE)),
            generation_seed=(
                int(gen_raw["seed"]) if gen_raw.get("seed") is not None else None
            ),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: bad field value: {exc}") from exc


def build_chat_provider(config: RunConfig, offline: bool = False) -> ChatProvider:
    config.chat.validate(offline)
    if config.chat.kind == "mock":
        provider: ChatProvider = ScriptedChatProvider(
            offline_responder, max_in_flight=config.max_in_flight
        )
    else:
        provider = HttpChatProvider(
            base_url=config.chat.base_url,
            credential_env=config.chat.credential_env,
            max_in_flight=config.max_in_flight,
        )
    if config.cache_dir:
        provider = CachingChatProvider(provider, ResponseCache(config.cache_dir))
    return provider


def build_embedding_provider(config: RunConfig, offline: bool = False) -> EmbeddingProvider:
    config.embedding.validate(offline)
    if config.embedding.kind == "hash":
        return HashEmbedder(dimension=config.embedding.dimension, seed=config.embedding.seed)
    return HttpEmbeddingProvider(
        base_url=config.embedding.base_url,
        model=config.embedding.model,
        credential_env=config.embedding.credential_env,
    )
