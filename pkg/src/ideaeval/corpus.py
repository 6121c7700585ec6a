"""Paper corpus ingestion and future-research-idea (FRI) span removal.

Papers arrive as pre-annotated JSON documents (one per paper, `"schema": 1`);
annotators mark FRI spans as character offsets into section bodies. Stripping
removes exactly the annotated spans, collects the removed text into
author-perspective idea groups, and is lossless: splicing every removed span
back at its recorded offset reconstructs the original sections.

Offsets are unicode scalar values (Python string indices), never bytes.
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError, ValidationError
from .ioutil import canonical_dumps, read_json, sha256_hex

SCHEMA_VERSION = 1


class Domain(str, enum.Enum):
    CHEMISTRY = "Chemistry"
    COMPUTER_SCIENCE = "ComputerScience"
    ECONOMICS = "Economics"
    MEDICAL = "Medical"
    PHYSICS = "Physics"


class FriKind(str, enum.Enum):
    """Direct spans cover whole sentences that are purely an idea; Mixed
    spans mark the idea fragment inside a sentence that also carries other
    content."""

    DIRECT = "Direct"
    MIXED = "Mixed"


@dataclass(frozen=True)
class Section:
    name: str
    body: str


@dataclass(frozen=True)
class FriAnnotation:
    """One annotated FRI span: half-open [start, end) offsets into the body
    of ``sections[section_index]``."""

    section_index: int
    start: int
    end: int
    kind: FriKind
    group_id: str


@dataclass
class PaperRecord:
    id: str
    domain: Domain
    title: str
    abstract: str
    sections: list[Section]
    annotations: list[FriAnnotation] = field(default_factory=list)


@dataclass(frozen=True)
class RemovedSpan:
    """The text removed for one annotation, with its original location."""

    section_index: int
    start: int
    end: int
    text: str
    kind: FriKind


@dataclass
class ApFriGroup:
    """One author-written future-research idea, merged from the spans that
    share a group id (fragments joined in document order)."""

    group_id: str
    text: str
    spans: list[RemovedSpan]


@dataclass
class StrippedPaper:
    paper_id: str
    domain: Domain
    title: str
    abstract: str
    sections: list[Section]
    ap_fri: list[ApFriGroup]

    @property
    def text(self) -> str:
        """Full paper body after removal: title, abstract, then sections."""
        return assemble_text(self.title, self.abstract, self.sections)


@dataclass(frozen=True)
class DomainStats:
    papers: int
    avg_words_without_fwk: float
    avg_words_fwk: float


def assemble_text(title: str, abstract: str, sections: list[Section]) -> str:
    blocks = [title, abstract]
    blocks.extend(f"{s.name}\n{s.body}" for s in sections)
    return "\n\n".join(blocks)


def word_count(text: str) -> int:
    """Number of unicode-whitespace-separated tokens."""
    return len(text.split())


# ---------------------------------------------------------------------------
# Loading and validation


def load_corpus(path: str | Path) -> list[PaperRecord]:
    """Load all papers under `path`, validated, in stable order by id.

    `path` may be a directory (read `manifest.json` if present, otherwise
    every `*.json` file) or a manifest file. Raises CorpusError naming the
    offending paper on any invariant violation.
    """
    path = Path(path)
    if path.is_file():
        files = _manifest_files(path)
    elif path.is_dir():
        manifest = path / "manifest.json"
        if manifest.exists():
            files = _manifest_files(manifest)
        else:
            files = sorted(p for p in path.glob("*.json"))
    else:
        raise CorpusError(f"corpus path not found: {path}")

    records = []
    seen: dict[str, Path] = {}
    for file in files:
        record = load_paper_file(file)
        if record.id in seen:
            raise CorpusError(
                f"duplicate id (also in {seen[record.id].name})", paper_id=record.id
            )
        seen[record.id] = file
        records.append(record)
    records.sort(key=lambda r: r.id)
    return records


def _manifest_files(manifest_path: Path) -> list[Path]:
    doc = read_json(manifest_path)
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA_VERSION:
        raise CorpusError(f"manifest {manifest_path}: missing or unsupported schema version")
    base = manifest_path.parent
    files = []
    for domain in sorted(doc.get("domains", {})):
        for rel in doc["domains"][domain]:
            files.append(base / rel)
    return files


def load_paper_file(path: Path) -> PaperRecord:
    try:
        doc = read_json(path)
    except ValueError as exc:
        raise CorpusError(f"{path.name}: not valid JSON ({exc})") from exc
    return paper_from_dict(doc, source=path.name)


def paper_from_dict(doc: dict, source: str = "<dict>") -> PaperRecord:
    if not isinstance(doc, dict):
        raise CorpusError(f"{source}: document is not an object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise CorpusError(f"{source}: missing or unsupported schema version")
    paper_id = doc.get("id")
    if not paper_id or not isinstance(paper_id, str):
        raise CorpusError(f"{source}: missing paper id")
    try:
        domain = Domain(doc.get("domain"))
    except ValueError:
        raise CorpusError(
            f"unknown domain label {doc.get('domain')!r}", paper_id=paper_id
        ) from None
    try:
        sections = [Section(name=s["name"], body=s["body"]) for s in doc.get("sections", [])]
        annotations = [
            FriAnnotation(
                section_index=a["section_index"],
                start=a["start"],
                end=a["end"],
                kind=FriKind(a["kind"]),
                group_id=a["group_id"],
            )
            for a in doc.get("annotations", [])
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"malformed section or annotation: {exc}", paper_id=paper_id) from exc

    record = PaperRecord(
        id=paper_id,
        domain=domain,
        title=doc.get("title", ""),
        abstract=doc.get("abstract", ""),
        sections=sections,
        annotations=annotations,
    )
    validate_paper(record)
    return record


def paper_to_dict(paper: PaperRecord) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "id": paper.id,
        "domain": paper.domain.value,
        "title": paper.title,
        "abstract": paper.abstract,
        "sections": [{"name": s.name, "body": s.body} for s in paper.sections],
        "annotations": [
            {
                "section_index": a.section_index,
                "start": a.start,
                "end": a.end,
                "kind": a.kind.value,
                "group_id": a.group_id,
            }
            for a in paper.annotations
        ],
    }


def validate_paper(paper: PaperRecord) -> None:
    """Enforce the PaperRecord invariants; raises CorpusError naming the paper."""
    for i, section in enumerate(paper.sections):
        if not section.body:
            raise CorpusError(f"section {i} ({section.name!r}) has an empty body", paper.id)
    per_section: dict[int, list[FriAnnotation]] = defaultdict(list)
    for ann in paper.annotations:
        if not 0 <= ann.section_index < len(paper.sections):
            raise CorpusError(
                f"annotation section_index {ann.section_index} out of range", paper.id
            )
        body = paper.sections[ann.section_index].body
        if not 0 <= ann.start < ann.end:
            raise CorpusError(
                f"annotation span [{ann.start}, {ann.end}) is empty or negative", paper.id
            )
        if ann.end > len(body):
            raise CorpusError(
                f"annotation span [{ann.start}, {ann.end}) exceeds section "
                f"{ann.section_index} length {len(body)}",
                paper.id,
            )
        per_section[ann.section_index].append(ann)
    for idx, anns in per_section.items():
        anns.sort(key=lambda a: a.start)
        for prev, cur in zip(anns, anns[1:]):
            if cur.start < prev.end:
                raise CorpusError(
                    f"overlapping annotation spans in section {idx}: "
                    f"[{prev.start}, {prev.end}) and [{cur.start}, {cur.end})",
                    paper.id,
                )


def corpus_digest(corpus: list[PaperRecord]) -> str:
    """Content digest over the canonical serialization, order-independent."""
    payload = "".join(canonical_dumps(paper_to_dict(p)) for p in sorted(corpus, key=lambda p: p.id))
    return sha256_hex(payload)


# ---------------------------------------------------------------------------
# Stripping


def strip_fris(paper: PaperRecord) -> StrippedPaper:
    """Remove every annotated FRI span and group the removed text.

    Direct and Mixed spans are both removed exactly as annotated (span
    boundaries are the annotator's responsibility). Removed fragments that
    share a group id are merged into one ApFriGroup, concatenated in
    document order with a single space.
    """
    validate_paper(paper)
    ordered = sorted(paper.annotations, key=lambda a: (a.section_index, a.start))
    grouped: dict[str, list[RemovedSpan]] = {}
    for ann in ordered:
        original = paper.sections[ann.section_index].body
        span = RemovedSpan(
            section_index=ann.section_index,
            start=ann.start,
            end=ann.end,
            text=original[ann.start : ann.end],
            kind=ann.kind,
        )
        grouped.setdefault(ann.group_id, []).append(span)

    # Remove right-to-left within each section so earlier offsets stay valid.
    bodies = [s.body for s in paper.sections]
    for ann in sorted(paper.annotations, key=lambda a: (a.section_index, -a.start)):
        body = bodies[ann.section_index]
        bodies[ann.section_index] = body[: ann.start] + body[ann.end :]

    order_by_group = {gid: i for i, gid in enumerate(grouped)}
    ap_fri = [
        ApFriGroup(
            group_id=gid,
            text=" ".join(s.text for s in grouped[gid]),
            spans=grouped[gid],
        )
        for gid in sorted(grouped, key=order_by_group.__getitem__)
    ]
    stripped_sections = [
        Section(name=s.name, body=body) for s, body in zip(paper.sections, bodies)
    ]
    return StrippedPaper(
        paper_id=paper.id,
        domain=paper.domain,
        title=paper.title,
        abstract=paper.abstract,
        sections=stripped_sections,
        ap_fri=ap_fri,
    )


def reconstruct_sections(stripped: StrippedPaper) -> list[Section]:
    """Splice every removed span back at its recorded offset.

    Inverse of `strip_fris`: the result equals the original sections exactly.
    """
    bodies = [s.body for s in stripped.sections]
    per_section: dict[int, list[RemovedSpan]] = defaultdict(list)
    for group in stripped.ap_fri:
        for span in group.spans:
            per_section[span.section_index].append(span)
    for idx, spans in per_section.items():
        body = bodies[idx]
        for span in sorted(spans, key=lambda s: s.start):
            body = body[: span.start] + span.text + body[span.start :]
        bodies[idx] = body
    return [Section(name=s.name, body=body) for s, body in zip(stripped.sections, bodies)]


def stripped_to_dict(stripped: StrippedPaper) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "paper_id": stripped.paper_id,
        "domain": stripped.domain.value,
        "title": stripped.title,
        "abstract": stripped.abstract,
        "sections": [{"name": s.name, "body": s.body} for s in stripped.sections],
        "ap_fri": [
            {
                "group_id": g.group_id,
                "text": g.text,
                "spans": [
                    {
                        "section_index": s.section_index,
                        "start": s.start,
                        "end": s.end,
                        "text": s.text,
                        "kind": s.kind.value,
                    }
                    for s in g.spans
                ],
            }
            for g in stripped.ap_fri
        ],
    }


def stripped_from_dict(doc: dict) -> StrippedPaper:
    return StrippedPaper(
        paper_id=doc["paper_id"],
        domain=Domain(doc["domain"]),
        title=doc["title"],
        abstract=doc["abstract"],
        sections=[Section(name=s["name"], body=s["body"]) for s in doc["sections"]],
        ap_fri=[
            ApFriGroup(
                group_id=g["group_id"],
                text=g["text"],
                spans=[
                    RemovedSpan(
                        section_index=s["section_index"],
                        start=s["start"],
                        end=s["end"],
                        text=s["text"],
                        kind=FriKind(s["kind"]),
                    )
                    for s in g["spans"]
                ],
            )
            for g in doc["ap_fri"]
        ],
    )


# ---------------------------------------------------------------------------
# Statistics


def corpus_stats(corpus: list[PaperRecord]) -> dict[Domain, DomainStats]:
    """Per-domain mean word counts: paper body after stripping, and the
    removed future-work text. Domains with no papers are absent."""
    if not corpus:
        raise ValidationError("corpus_stats requires a non-empty corpus")
    body_words: dict[Domain, list[int]] = defaultdict(list)
    fwk_words: dict[Domain, list[int]] = defaultdict(list)
    for paper in corpus:
        stripped = strip_fris(paper)
        body_words[paper.domain].append(word_count(stripped.text))
        removed = sum(
            word_count(span.text) for group in stripped.ap_fri for span in group.spans
        )
        fwk_words[paper.domain].append(removed)
    return {
        domain: DomainStats(
            papers=len(body_words[domain]),
            avg_words_without_fwk=sum(body_words[domain]) / len(body_words[domain]),
            avg_words_fwk=sum(fwk_words[domain]) / len(fwk_words[domain]),
        )
        for domain in sorted(body_words, key=lambda d: d.value)
    }
