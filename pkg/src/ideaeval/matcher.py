"""Idea containment scoring: judge-model and embedding-threshold backends.

Both backends reduce to "how strongly is this generated idea present in the
author's removed future-work groups", a score in [0,1]. The benchmark
harness turns scores into matched/unmatched decisions against labeled pairs.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .corpus import ApFriGroup
from .errors import ValidationError
from .generation import TEMPLATES, GeneratedIdea, TemplateName, build_prompt
from .ioutil import read_json
from .metrics import ConfusionCounts, cosine_similarity
from .providers import ChatProvider, EmbeddingProvider, GenerationConfig

DEFAULT_EMBED_THRESHOLD = 0.68
DEFAULT_DECISION_THRESHOLD = 0.5


class MatcherBackend(str, enum.Enum):
    LlmJudge = "LlmJudge"
    EmbeddingThreshold = "EmbeddingThreshold"


@dataclass(frozen=True)
class MatchJudgment:
    paper_id: str
    idea_index: int
    backend: MatcherBackend
    score: float
    rationale: str | None = None
    raw_response: str | None = None
    valid: bool = True

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValidationError(f"judgment score {self.score} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "paper_id": self.paper_id,
            "idea_index": self.idea_index,
            "backend": self.backend.value,
            "score": self.score,
            "rationale": self.rationale,
            "raw_response": self.raw_response,
            "valid": self.valid,
        }


def render_collection(texts: Sequence[str]) -> str:
    """Numbered list form of the author idea groups for the judge prompt."""
    if not texts:
        raise ValidationError("collection must not be empty")
    return "\n".join(f"{i}. {t}" for i, t in enumerate(texts, start=1))


_NUMBER = re.compile(r"\d+(?:\.\d+)?|\.\d+")
_NEGATION = re.compile(r"\bno\b", re.IGNORECASE)


def parse_judge_score(response: str) -> float | None:
    """First number in [0,1] from the response; bare "no" counts as 0.0.

    Returns None when the response carries neither, which the caller treats
    as a parse failure (reprompt once, then record invalid).
    """
    for token in _NUMBER.findall(response):
        value = float(token)
        if 0.0 <= value <= 1.0:
            return value
    if _NEGATION.search(response):
        return 0.0
    return None


def match_llm_judge(
    provider: ChatProvider,
    ap_fri: Sequence[ApFriGroup],
    idea: GeneratedIdea,
    config: GenerationConfig,
) -> MatchJudgment:
    """Ask the judge model whether the idea is contained in the collection."""
    if not ap_fri:
        raise ValidationError(f"paper {idea.paper_id} has no author idea groups")
    system, user = build_prompt(
        TEMPLATES[TemplateName.JudgeMatch],
        {"collection": render_collection([g.text for g in ap_fri]), "idea": idea.text},
    )
    response = provider.chat(system, user, config)
    score = parse_judge_score(response)
    if score is None:
        # one retry with the identical prompt before giving up on parsing
        response = provider.chat(system, user, config)
        score = parse_judge_score(response)
    if score is None:
        return MatchJudgment(
            paper_id=idea.paper_id,
            idea_index=idea.index,
            backend=MatcherBackend.LlmJudge,
            score=0.0,
            rationale="no numeric score or negation found after reprompt",
            raw_response=response,
            valid=False,
        )
    return MatchJudgment(
        paper_id=idea.paper_id,
        idea_index=idea.index,
        backend=MatcherBackend.LlmJudge,
        score=score,
        raw_response=response,
    )


def embedding_match_score(
    embedder: EmbeddingProvider,
    collection: Sequence[str],
    idea_text: str,
    threshold: float = DEFAULT_EMBED_THRESHOLD,
) -> float:
    """Max cosine between the idea and any group, zeroed below the threshold."""
    if not collection:
        raise ValidationError("collection must not be empty")
    vectors = embedder.embed([*collection, idea_text])
    idea_vec = vectors[-1].as_array()
    best = max(cosine_similarity(v.as_array(), idea_vec) for v in vectors[:-1])
    if best < threshold:
        return 0.0
    return max(0.0, min(1.0, best))


def match_embedding(
    embedder: EmbeddingProvider,
    ap_fri: Sequence[ApFriGroup],
    idea: GeneratedIdea,
    threshold: float = DEFAULT_EMBED_THRESHOLD,
) -> MatchJudgment:
    if not ap_fri:
        raise ValidationError(f"paper {idea.paper_id} has no author idea groups")
    score = embedding_match_score(embedder, [g.text for g in ap_fri], idea.text, threshold)
    return MatchJudgment(
        paper_id=idea.paper_id,
        idea_index=idea.index,
        backend=MatcherBackend.EmbeddingThreshold,
        score=score,
    )


# ---------------------------------------------------------------------------
# Benchmarking on labeled pairs


@dataclass(frozen=True)
class LabeledPair:
    collection: tuple[str, ...]
    idea: str
    matched: bool
    split: str

    def __post_init__(self):
        if self.split not in ("validation", "test"):
            raise ValidationError(f"unknown split {self.split!r}")
        if not self.collection:
            raise ValidationError("labeled pair has an empty collection")


@dataclass
class LabeledPairSet:
    pairs: list[LabeledPair] = field(default_factory=list)

    def split_pairs(self, split: str) -> list[LabeledPair]:
        return [p for p in self.pairs if p.split == split]


def assign_splits(
    rows: Sequence[tuple[Sequence[str], str, bool]],
    validation_fraction: float = 0.3,
    seed: int = 0,
) -> LabeledPairSet:
    """Deterministic seeded shuffle, then the first fraction becomes validation."""
    if not (0.0 <= validation_fraction <= 1.0):
        raise ValidationError("validation_fraction must be in [0, 1]")
    import random

    order = list(range(len(rows)))
    random.Random(seed).shuffle(order)
    n_val = round(validation_fraction * len(rows))
    val_indices = set(order[:n_val])
    pairs = [
        LabeledPair(
            collection=tuple(rows[i][0]),
            idea=rows[i][1],
            matched=rows[i][2],
            split="validation" if i in val_indices else "test",
        )
        for i in range(len(rows))
    ]
    return LabeledPairSet(pairs=pairs)


def load_labeled_pairs(
    path: str | Path, validation_fraction: float = 0.3, seed: int = 0
) -> LabeledPairSet:
    """Read {"pairs": [{collection, idea, label[, split]}]} from a JSON file.

    Pairs without an explicit split are partitioned by a seeded shuffle at
    the configured validation fraction.
    """
    data = read_json(path)
    raw = data.get("pairs")
    if not isinstance(raw, list) or not raw:
        raise ValidationError(f"{path}: expected a non-empty 'pairs' list")
    explicit: list[LabeledPair] = []
    unsplit: list[tuple[Sequence[str], str, bool]] = []
    for i, row in enumerate(raw):
        try:
            collection = [str(t) for t in row["collection"]]
            idea = str(row["idea"])
            label = row["label"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{path}: pair {i} malformed: {exc}") from exc
        if label not in ("matched", "unmatched"):
            raise ValidationError(f"{path}: pair {i} label must be matched|unmatched")
        matched = label == "matched"
        if "split" in row:
            explicit.append(
                LabeledPair(tuple(collection), idea, matched, str(row["split"]))
            )
        else:
            unsplit.append((collection, idea, matched))
    pairs = explicit + assign_splits(unsplit, validation_fraction, seed).pairs if unsplit else explicit
    return LabeledPairSet(pairs=list(pairs))


ScoreFn = Callable[[Sequence[str], str], float]


@dataclass
class BenchmarkResult:
    decision_threshold: float
    per_split: dict[str, ConfusionCounts]
    overall: ConfusionCounts

    def to_dict(self) -> dict:
        return {
            "decision_threshold": self.decision_threshold,
            "splits": {name: c.to_dict() for name, c in sorted(self.per_split.items())},
            "overall": self.overall.to_dict(),
        }


def benchmark_matcher(
    score_fn: ScoreFn,
    pair_set: LabeledPairSet,
    decision_threshold: float = DEFAULT_DECISION_THRESHOLD,
) -> BenchmarkResult:
    """Score every pair, decide matched at the threshold, tally per split."""
    if not pair_set.pairs:
        raise ValidationError("labeled pair set is empty")
    per_split: dict[str, ConfusionCounts] = {}
    overall = ConfusionCounts()
    for pair in pair_set.pairs:
        score = score_fn(pair.collection, pair.idea)
        if not (0.0 <= score <= 1.0):
            raise ValidationError(f"backend returned score {score} outside [0, 1]")
        predicted = score >= decision_threshold
        per_split.setdefault(pair.split, ConfusionCounts()).add(predicted, pair.matched)
        overall.add(predicted, pair.matched)
    return BenchmarkResult(
        decision_threshold=decision_threshold,
        per_split=per_split,
        overall=overall,
    )


def judge_score_fn(provider: ChatProvider, config: GenerationConfig) -> ScoreFn:
    """Benchmark adapter: judge-model scoring over bare (collection, idea)."""

    def score(collection: Sequence[str], idea_text: str) -> float:
        idea = GeneratedIdea(
            paper_id="bench", model_id=config.model_name, index=1,
            text=idea_text, word_count=len(idea_text.split()),
        )
        groups = [
            ApFriGroup(group_id=f"g{i}", text=t, spans=[])
            for i, t in enumerate(collection, start=1)
        ]
        return match_llm_judge(provider, groups, idea, config).score

    return score


def embedding_score_fn(
    embedder: EmbeddingProvider, threshold: float = DEFAULT_EMBED_THRESHOLD
) -> ScoreFn:
    def score(collection: Sequence[str], idea_text: str) -> float:
        return embedding_match_score(embedder, collection, idea_text, threshold)

    return score
