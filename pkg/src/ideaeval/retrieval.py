"""Background-knowledge retrieval: title index, top-k scan, contribution
extraction, and augmented idea generation.

The index is an exact brute-force cosine scan over unit-normalized title
embeddings. At the corpus sizes involved (tens of thousands to a few
hundred thousand titles) a vectorized scan is fast enough that approximate
structures would only complicate the determinism story.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import StrippedPaper
from .errors import ValidationError
from .generation import TEMPLATES, IdeaSet, TemplateName, build_prompt, generate_ideas
from .ioutil import read_json, write_json
from .metrics import cosine_similarity
from .providers import ChatProvider, EmbeddingProvider, GenerationConfig

DEFAULT_TOP_K = 20
CONTRIBUTION_WORD_CAP = 100
OVERLAP_WARNING_COSINE = 0.95

INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MetadataRecord:
    paper_id: str
    title: str
    abstract: str


@dataclass(frozen=True)
class RetrievedEntry:
    paper_id: str
    title: str
    abstract: str
    similarity: float


@dataclass
class VectorIndex:
    """Immutable title-embedding index; rows are unit-normalized."""

    embedder_id: str
    dimension: int
    paper_ids: list[str]
    titles: list[str]
    abstracts: list[str]
    matrix: np.ndarray

    def __len__(self) -> int:
        return len(self.paper_ids)

    def query(
        self, query_vector: np.ndarray, k: int, exclude_paper_id: str | None = None
    ) -> list[RetrievedEntry]:
        """Top-k by cosine, descending; ties broken by paper_id ascending."""
        if k < 1:
            raise ValidationError("k must be at least 1")
        if len(self) == 0:
            raise ValidationError("index is empty")
        norm = np.linalg.norm(query_vector)
        if norm == 0.0:
            raise ValidationError("query vector is zero")
        # einsum evaluates every row through the same reduction, so identical
        # rows produce bit-identical similarities and the paper_id tie-break
        # below is actually reachable (BLAS gemv rounds per row block).
        sims = np.einsum(
            "ij,j->i", self.matrix, np.asarray(query_vector, dtype=np.float64) / norm
        )
        order = sorted(range(len(self)), key=lambda i: (-sims[i], self.paper_ids[i]))
        results = []
        for i in order:
            if exclude_paper_id is not None and self.paper_ids[i] == exclude_paper_id:
                continue
            results.append(
                RetrievedEntry(
                    paper_id=self.paper_ids[i],
                    title=self.titles[i],
                    abstract=self.abstracts[i],
                    similarity=float(sims[i]),
                )
            )
            if len(results) == k:
                break
        return results


def load_metadata(path: str | Path) -> list[MetadataRecord]:
    """Read metadata JSON lines: one {paper_id, title, abstract} per line."""
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                record = MetadataRecord(
                    paper_id=str(row["paper_id"]),
                    title=str(row["title"]),
                    abstract=str(row.get("abstract", "")),
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad metadata row: {exc}") from exc
            if record.paper_id in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate paper_id {record.paper_id}")
            seen.add(record.paper_id)
            records.append(record)
    return records


def build_index(records: Sequence[MetadataRecord], embedder: EmbeddingProvider) -> VectorIndex:
    if not records:
        raise ValidationError("cannot build an index from zero records")
    for r in records:
        if not r.title.strip():
            raise ValidationError(f"record {r.paper_id} has an empty title")
    vectors = embedder.embed([r.title for r in records])
    dimension = vectors[0].dimension
    matrix = np.stack([v.as_array() for v in vectors])
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        bad = records[int(np.argmin(norms))].paper_id
        raise ValidationError(f"record {bad} embedded to a zero vector")
    matrix = matrix / norms[:, None]
    return VectorIndex(
        embedder_id=embedder.embedder_id,
        dimension=dimension,
        paper_ids=[r.paper_id for r in records],
        titles=[r.title for r in records],
        abstracts=[r.abstract for r in records],
        matrix=matrix,
    )


def save_index(index: VectorIndex, path: str | Path) -> None:
    write_json(
        path,
        {
            "format_version": INDEX_FORMAT_VERSION,
            "embedder_id": index.embedder_id,
            "dimension": index.dimension,
            "entries": [
                {
                    "paper_id": pid,
                    "title": title,
                    "abstract": abstract,
                    "embedding": [float(x) for x in row],
                }
                for pid, title, abstract, row in zip(
                    index.paper_ids, index.titles, index.abstracts, index.matrix
                )
            ],
        },
    )


def load_index(path: str | Path) -> VectorIndex:
    data = read_json(path)
    if data.get("format_version") != INDEX_FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported index format {data.get('format_version')!r}")
    entries = data["entries"]
    if not entries:
        raise ValidationError(f"{path}: index has no entries")
    dimension = int(data["dimension"])
    matrix = np.asarray([e["embedding"] for e in entries], dtype=np.float64)
    if matrix.shape[1] != dimension:
        raise ValidationError(f"{path}: entry dimension {matrix.shape[1]} != declared {dimension}")
    return VectorIndex(
        embedder_id=str(data["embedder_id"]),
        dimension=dimension,
        paper_ids=[str(e["paper_id"]) for e in entries],
        titles=[str(e["title"]) for e in entries],
        abstracts=[str(e["abstract"]) for e in entries],
        matrix=matrix,
    )


def retrieve_top_k(
    index: VectorIndex,
    query_title: str,
    embedder: EmbeddingProvider,
    k: int = DEFAULT_TOP_K,
    exclude_paper_id: str | None = None,
) -> list[RetrievedEntry]:
    if embedder.embedder_id != index.embedder_id:
        raise ValidationError(
            f"index built with {index.embedder_id!r} but queried with {embedder.embedder_id!r}"
        )
    if not query_title.strip():
        raise ValidationError("query title is empty")
    vector = embedder.embed([query_title])[0]
    if vector.dimension != index.dimension:
        raise ValidationError(
            f"query dimension {vector.dimension} != index dimension {index.dimension}"
        )
    return index.query(vector.as_array(), k, exclude_paper_id=exclude_paper_id)


# ---------------------------------------------------------------------------
# Contribution extraction and augmented generation


@dataclass(frozen=True)
class BackgroundPassage:
    source_paper_id: str
    source_title: str
    contribution: str


@dataclass
class BackgroundKnowledge:
    target_paper_id: str
    passages: list[BackgroundPassage] = field(default_factory=list)

    def render(self) -> str:
        """One block per source: title line, then its contribution text."""
        parts = [f"{p.source_title}\n{p.contribution}" for p in self.passages]
        return "\n\n".join(parts)

    def to_dict(self) -> dict:
        return {
            "target_paper_id": self.target_paper_id,
            "passages": [
                {
                    "source_paper_id": p.source_paper_id,
                    "source_title": p.source_title,
                    "contribution": p.contribution,
                }
                for p in self.passages
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BackgroundKnowledge":
        return cls(
            target_paper_id=data["target_paper_id"],
            passages=[
                BackgroundPassage(
                    source_paper_id=p["source_paper_id"],
                    source_title=p["source_title"],
                    contribution=p["contribution"],
                )
                for p in data["passages"]
            ],
        )


def truncate_words(text: str, cap: int = CONTRIBUTION_WORD_CAP) -> str:
    words = text.split()
    if len(words) <= cap:
        return text.strip()
    return " ".join(words[:cap])


def extract_contributions(
    provider: ChatProvider,
    entries: Sequence[RetrievedEntry],
    target_paper_id: str,
    config: GenerationConfig,
) -> BackgroundKnowledge:
    """One extraction call per retrieved paper; NONE responses are dropped."""
    if not entries:
        raise ValidationError("no retrieved entries to extract from")
    template = TEMPLATES[TemplateName.ContributionExtract]
    passages = []
    for entry in entries:
        passage_text = f"Title: {entry.title}\nAbstract: {entry.abstract}"
        system, user = build_prompt(template, {"relevant_passage": passage_text})
        response = provider.chat(system, user, config).strip()
        if response == "NONE" or response.startswith("NONE"):
            continue
        passages.append(
            BackgroundPassage(
                source_paper_id=entry.paper_id,
                source_title=entry.title,
                contribution=truncate_words(response),
            )
        )
    return BackgroundKnowledge(target_paper_id=target_paper_id, passages=passages)


def generate_with_background(
    provider: ChatProvider,
    stripped: StrippedPaper,
    background: BackgroundKnowledge,
    config: GenerationConfig,
) -> IdeaSet:
    if background.target_paper_id != stripped.paper_id:
        raise ValidationError(
            f"background built for {background.target_paper_id!r}, "
            f"not {stripped.paper_id!r}"
        )
    return generate_ideas(
        provider,
        stripped,
        TEMPLATES[TemplateName.RagAugmented],
        config,
        extra_bindings={"background_knowledge": background.render()},
    )


def overlap_warnings(
    ideas: IdeaSet,
    background: BackgroundKnowledge,
    embedder: EmbeddingProvider,
    cosine_floor: float = OVERLAP_WARNING_COSINE,
) -> list[dict]:
    """Flag generated ideas nearly identical to a background passage.

    The augmented prompt asks for ideas distinct from the background; a
    cosine at or above the floor against any passage suggests the model
    restated its input rather than proposing something new.
    """
    if not ideas.ideas or not background.passages:
        return []
    texts = [p.contribution for p in background.passages] + ideas.texts()
    vectors = [v.as_array() for v in embedder.embed(texts)]
    passage_vecs = vectors[: len(background.passages)]
    warnings = []
    for idea, vec in zip(ideas.ideas, vectors[len(background.passages):]):
        for passage, pvec in zip(background.passages, passage_vecs):
            sim = cosine_similarity(vec, pvec)
            if sim >= cosine_floor:
                warnings.append(
                    {
                        "paper_id": ideas.paper_id,
                        "idea_index": idea.index,
                        "source_paper_id": passage.source_paper_id,
                        "cosine": sim,
                    }
                )
    return warnings
