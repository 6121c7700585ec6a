"""Alignment and diversity metrics over matcher scores and idea embeddings."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError

LENGTH_BIN_EDGES = (0, 20, 40, 60)


@dataclass(frozen=True)
class PaperAlignment:
    """Per-paper alignment between generated ideas and author-stated ones.

    `scores` holds one matcher score per generated idea; `author_idea_count`
    is the number of author future-work groups for the paper. The average
    divides the score sum by the author count, so a model whose matched mass
    exceeds the author ideas can push the raw value past 1; the clamped
    variant caps it there and is what reports lead with.
    """

    paper_id: str
    scores: tuple[float, ...]
    author_idea_count: int

    def __post_init__(self):
        if self.author_idea_count <= 0:
            raise ValidationError(f"paper {self.paper_id}: author_idea_count must be positive")
        for s in self.scores:
            if not (0.0 <= s <= 1.0):
                raise ValidationError(f"paper {self.paper_id}: score {s} outside [0, 1]")

    @property
    def avg_score_raw(self) -> float:
        return float(sum(self.scores)) / self.author_idea_count

    @property
    def avg_score(self) -> float:
        return min(1.0, self.avg_score_raw)


def avg_score(idea_scores: Sequence[float], n_author_ideas: int) -> tuple[float, float]:
    """Per-paper average alignment: (raw, clamped-at-1)."""
    if n_author_ideas < 1:
        raise ValidationError("n_author_ideas must be at least 1")
    for s in idea_scores:
        if not (0.0 <= s <= 1.0):
            raise ValidationError(f"idea score {s} outside [0, 1]")
    raw = float(sum(idea_scores)) / n_author_ideas
    return raw, min(raw, 1.0)


def iascore(avg_scores: Sequence[float]) -> float:
    """Arithmetic mean of per-paper average scores."""
    if not avg_scores:
        raise ValidationError("iascore needs at least one paper value")
    return float(np.mean(avg_scores))


@dataclass(frozen=True)
class IAScoreResult:
    value: float
    value_raw: float
    paper_count: int
    per_paper: tuple[PaperAlignment, ...]


def domain_iascore(alignments: Sequence[PaperAlignment]) -> IAScoreResult:
    """IAScore over a set of papers, carrying both raw and clamped means."""
    if not alignments:
        raise ValidationError("IAScore needs at least one paper")
    return IAScoreResult(
        value=iascore([a.avg_score for a in alignments]),
        value_raw=iascore([a.avg_score_raw for a in alignments]),
        paper_count=len(alignments),
        per_paper=tuple(alignments),
    )


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine similarity undefined for zero vector")
    return float(np.dot(a, b) / (na * nb))


def pairwise_distinctness(vectors: Sequence[np.ndarray]) -> float:
    """Mean pairwise cosine distance among an idea set's vectors.

    The unordered pair mean equals the ordered double-sum normalized by
    n(n-1), since distance is symmetric. Undefined below two vectors: a
    single idea has no pairwise structure to measure.
    """
    n = len(vectors)
    if n < 2:
        raise ValidationError("distinctness needs at least two vectors")
    total = 0.0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            total += 1.0 - cosine_similarity(vectors[i], vectors[j])
            pairs += 1
    return total / pairs


def paper_distinctness(vectors: Sequence[np.ndarray]) -> float | None:
    """As pairwise_distinctness, but None (skip) below two vectors."""
    if len(vectors) < 2:
        return None
    return pairwise_distinctness(vectors)


def domain_distinctness(per_paper_values: Sequence[float]) -> float:
    """Mean of per-paper distinctness values."""
    if not per_paper_values:
        raise ValidationError("domain distinctness needs at least one paper value")
    return float(np.mean(per_paper_values))


@dataclass(frozen=True)
class DistinctnessResult:
    value: float
    paper_count: int
    skipped_papers: tuple[str, ...]


def distinctness_index(per_paper_vectors: Mapping[str, Sequence[np.ndarray]]) -> DistinctnessResult:
    """Mean of per-paper distinctness over papers that have >= 2 ideas."""
    values = []
    skipped = []
    for paper_id in sorted(per_paper_vectors):
        d = paper_distinctness(per_paper_vectors[paper_id])
        if d is None:
            skipped.append(paper_id)
        else:
            values.append(d)
    if not values:
        raise ValidationError("distinctness undefined: no paper has two or more ideas")
    return DistinctnessResult(
        value=float(np.mean(values)),
        paper_count=len(values),
        skipped_papers=tuple(skipped),
    )


def cohens_kappa(a: Sequence, b: Sequence) -> float:
    """Chance-corrected agreement between two raters over paired labels.

    kappa = (p_o - p_e) / (1 - p_e). When both raters use a single label
    identically (p_e == p_o == 1) agreement is perfect by construction and
    the indeterminate 0/0 is reported as 1.0.
    """
    if len(a) != len(b):
        raise ValidationError(f"rater label counts differ: {len(a)} vs {len(b)}")
    if not a:
        raise ValidationError("kappa needs at least one paired label")
    n = len(a)
    labels = sorted(set(a) | set(b), key=str)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    p_e = 0.0
    for label in labels:
        p_e += (sum(1 for x in a if x == label) / n) * (sum(1 for y in b if y == label) / n)
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise ValidationError("kappa indeterminate: chance agreement is 1 without full agreement")
    return (p_o - p_e) / (1.0 - p_e)


def length_bin_label(word_count: int) -> str:
    """Bin label for an idea of `word_count` words: [0,20), [20,40), [40,60), [60,inf)."""
    if word_count < 0:
        raise ValidationError("word count cannot be negative")
    edges = LENGTH_BIN_EDGES
    for lo, hi in zip(edges, edges[1:]):
        if lo <= word_count < hi:
            return f"[{lo},{hi})"
    return f"[{edges[-1]},inf)"


def score_by_length(ideas: Sequence[str], scores: Sequence[float]) -> dict[str, dict]:
    """Mean matcher score per idea-length bin; bins with no ideas are absent."""
    if len(ideas) != len(scores):
        raise ValidationError(f"idea/score counts differ: {len(ideas)} vs {len(scores)}")
    buckets: dict[str, list[float]] = {}
    for idea, score in zip(ideas, scores):
        buckets.setdefault(length_bin_label(len(idea.split())), []).append(score)
    ordered = {}
    for lo in LENGTH_BIN_EDGES:
        hi = next((h for h in LENGTH_BIN_EDGES if h > lo), None)
        label = f"[{lo},{hi})" if hi is not None else f"[{lo},inf)"
        if label in buckets:
            vals = buckets[label]
            ordered[label] = {"count": len(vals), "mean_score": float(np.mean(vals))}
    return ordered


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def add(self, predicted: bool, actual: bool) -> None:
        if predicted and actual:
            self.tp += 1
        elif predicted and not actual:
            self.fp += 1
        elif not predicted and not actual:
            self.tn += 1
        else:
            self.fn += 1

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        if self.total == 0:
            raise ValidationError("accuracy undefined with no observations")
        return (self.tp + self.tn) / self.total

    @property
    def precision(self) -> float | None:
        denom = self.tp + self.fp
        return self.tp / denom if denom else None

    @property
    def recall(self) -> float | None:
        denom = self.tp + self.fn
        return self.tp / denom if denom else None

    @property
    def f1(self) -> float | None:
        p, r = self.precision, self.recall
        if p is None or r is None or (p + r) == 0:
            return None
        return 2 * p * r / (p + r)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


NOVELTY_CATEGORIES = (
    "not novel",
    "generic",
    "moderately novel",
    "very novel",
    "extremely novel",
)


def validate_answers(relevance: int, novelty: int, feasibility: int) -> None:
    if relevance not in (0, 1):
        raise ValidationError(f"relevance must be 0 or 1, got {relevance!r}")
    if novelty not in (1, 2, 3, 4, 5):
        raise ValidationError(f"novelty must be an integer 1..5, got {novelty!r}")
    if feasibility not in (0, 1):
        raise ValidationError(f"feasibility must be 0 or 1, got {feasibility!r}")


@dataclass(frozen=True)
class HumanEvalAggregate:
    model_id: str
    rating_count: int
    relevant_pct: float
    novelty_pct: dict[str, float]
    feasible_pct: float
    kappa: dict[str, float | None]
    overlap_count: int

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "rating_count": self.rating_count,
            "relevant_pct": self.relevant_pct,
            "novelty_pct": dict(self.novelty_pct),
            "feasible_pct": self.feasible_pct,
            "kappa": dict(self.kappa),
            "overlap_count": self.overlap_count,
        }


def human_aggregate(
    model_id: str,
    answers: Sequence[tuple[int, int, int]],
    overlap_pairs: Sequence[tuple[tuple[int, int, int], tuple[int, int, int]]] = (),
) -> HumanEvalAggregate:
    """Percentages and agreement for one model's human ratings.

    `answers` are (relevance, novelty, feasibility) triples, one per rated
    idea. `overlap_pairs` pairs the two raters' triples on the dual-rated
    subset; kappa per question is None when that subset is empty.
    """
    if not answers:
        raise ValidationError(f"no ratings for model {model_id!r}")
    for triple in answers:
        validate_answers(*triple)
    for first, second in overlap_pairs:
        validate_answers(*first)
        validate_answers(*second)
    n = len(answers)
    novelty_pct = {}
    for level, name in enumerate(NOVELTY_CATEGORIES, start=1):
        novelty_pct[name] = 100.0 * sum(1 for t in answers if t[1] == level) / n
    kappa: dict[str, float | None] = {"relevance": None, "novelty": None, "feasibility": None}
    if overlap_pairs:
        for idx, question in enumerate(("relevance", "novelty", "feasibility")):
            kappa[question] = cohens_kappa(
                [pair[0][idx] for pair in overlap_pairs],
                [pair[1][idx] for pair in overlap_pairs],
            )
    return HumanEvalAggregate(
        model_id=model_id,
        rating_count=n,
        relevant_pct=100.0 * sum(t[0] for t in answers) / n,
        novelty_pct=novelty_pct,
        feasible_pct=100.0 * sum(t[2] for t in answers) / n,
        kappa=kappa,
        overlap_count=len(overlap_pairs),
    )
