"""Toolkit for scoring model-generated future research ideas against the
future-work text their source papers' authors actually wrote."""

from .corpus import (
    ApFriGroup,
    Domain,
    FriAnnotation,
    FriKind,
    PaperRecord,
    Section,
    StrippedPaper,
    load_corpus,
    strip_fris,
)
from .generation import IdeaSet, GeneratedIdea, TemplateName, parse_bullets
from .matcher import MatcherBackend, MatchJudgment, benchmark_matcher
from .metrics import (
    cohens_kappa,
    domain_distinctness,
    domain_iascore,
    iascore,
    pairwise_distinctness,
)
from .providers import GenerationConfig, HashEmbedder, ScriptedChatProvider

__version__ = "0.1.0"

__all__ = [
    "ApFriGroup",
    "Domain",
    "FriAnnotation",
    "FriKind",
    "GeneratedIdea",
    "GenerationConfig",
    "HashEmbedder",
    "IdeaSet",
    "MatchJudgment",
    "MatcherBackend",
    "PaperRecord",
    "ScriptedChatProvider",
    "Section",
    "StrippedPaper",
    "TemplateName",
    "benchmark_matcher",
    "cohens_kappa",
    "domain_distinctness",
    "domain_iascore",
    "iascore",
    "load_corpus",
    "pairwise_distinctness",
    "parse_bullets",
    "strip_fris",
]
