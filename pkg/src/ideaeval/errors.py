"""Exception hierarchy shared across the toolkit.

The CLI maps these to exit codes: validation failures exit 2, provider and
transport failures exit 3, and a pipeline stage abort exits 4.
"""
from __future__ import annotations


class IdeaEvalError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(IdeaEvalError):
    """Invalid input data, configuration, or out-of-range value."""


class CorpusError(ValidationError):
    """A corpus document violates the schema or a type invariant."""

    def __init__(self, message: str, paper_id: str | None = None):
        self.paper_id = paper_id
        if paper_id is not None:
            message = f"paper {paper_id!r}: {message}"
        super().__init__(message)


class ConfigError(ValidationError):
    """Run configuration is missing, malformed, or unresolvable."""


class ProviderError(IdeaEvalError):
    """A chat or embedding provider failed."""


class TransportError(ProviderError):
    """Network-level failure (connection, timeout, 5xx) after retries."""


class RateLimitError(TransportError):
    """Rate limit still exceeded after retries."""


class AuthError(ProviderError):
    """Credential rejected by the provider."""


class MalformedResponseError(ProviderError):
    """Provider returned a body the client cannot interpret."""


class NoIdeasParsedError(IdeaEvalError):
    """A generation response contained no parseable ideas."""


class DuplicateRatingError(IdeaEvalError):
    """A rating already exists for this (session, idea) pair."""


class PipelineError(IdeaEvalError):
    """A pipeline stage aborted; partial artifacts are retained."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage {stage!r}: {message}")
