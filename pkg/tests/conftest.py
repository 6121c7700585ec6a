"""Shared fixtures: a small annotated corpus and offline run configs."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

from ideaeval.corpus import (
    Domain,
    FriAnnotation,
    FriKind,
    PaperRecord,
    Section,
    paper_to_dict,
)
from ideaeval.ioutil import write_json


def ann(body: str, fragment: str, kind: FriKind, group_id: str, section_index: int) -> FriAnnotation:
    """Annotation for `fragment` located inside `body` (must occur exactly once)."""
    if body.count(fragment) != 1:
        raise AssertionError(f"fragment occurs {body.count(fragment)} times: {fragment!r}")
    start = body.index(fragment)
    return FriAnnotation(
        section_index=section_index,
        start=start,
        end=start + len(fragment),
        kind=kind,
        group_id=group_id,
    )


def fixture_papers() -> list[PaperRecord]:
    papers = []

    intro1 = "Parsing legal text is hard. Our model handles contracts well."
    concl1 = (
        "We presented a contract parser. "
        "In future work we will extend coverage to court rulings. "
        "We also plan to release a multilingual benchmark. "
        "Accuracy remains the main open problem."
    )
    p1 = PaperRecord(
        id="cs-0001",
        domain=Domain.COMPUTER_SCIENCE,
        title="Contract Parsing with Structured Decoders",
        abstract="A structured decoder for contract clauses with strong results.",
        sections=[Section("Introduction", intro1), Section("Conclusion", concl1)],
    )
    p1.annotations = [
        ann(concl1, "In future work we will extend coverage to court rulings. ",
            FriKind.DIRECT, "g1", 1),
        ann(concl1, "We also plan to release a multilingual benchmark. ",
            FriKind.DIRECT, "g2", 1),
    ]
    papers.append(p1)

    intro2 = "Caching embeddings speeds retrieval. We study eviction policies."
    disc2 = (
        "Our policy wins on three corpora, and exploring learned eviction "
        "is a promising direction, while latency stays flat. "
        "A second thread is combining learned eviction with quantization. "
        "The gains persist across hardware."
    )
    p2 = PaperRecord(
        id="cs-0002",
        domain=Domain.COMPUTER_SCIENCE,
        title="Eviction Policies for Embedding Caches",
        abstract="An eviction policy study for embedding caches at scale.",
        sections=[Section("Introduction", intro2), Section("Discussion", disc2)],
    )
    p2.annotations = [
        ann(disc2, "exploring learned eviction is a promising direction",
            FriKind.MIXED, "g1", 1),
        ann(disc2, "combining learned eviction with quantization", FriKind.MIXED, "g1", 1),
        ann(disc2, "The gains persist across hardware.", FriKind.DIRECT, "g2", 1),
    ]
    papers.append(p2)

    body3 = (
        "Sparse attention reduces memory. "
        "Future studies should quantify the effect on long documents. "
        "Scaling to book-length inputs deserves attention. "
        "Our kernels are open source."
    )
    p3 = PaperRecord(
        id="cs-0003",
        domain=Domain.COMPUTER_SCIENCE,
        title="Sparse Attention Kernels",
        abstract="Efficient sparse attention kernels for long inputs.",
        sections=[Section("Conclusion", body3)],
    )
    p3.annotations = [
        ann(body3, "Future studies should quantify the effect on long documents. ",
            FriKind.DIRECT, "g1", 0),
        ann(body3, "Scaling to book-length inputs deserves attention. ",
            FriKind.DIRECT, "g2", 0),
    ]
    papers.append(p3)

    body4 = (
        "We measured the drift of cold atoms in a weak trap. "
        "A natural next step is probing the strong-coupling regime. "
        "Mapping the full phase diagram would settle the debate. "
        "The apparatus fits on one table."
    )
    p4 = PaperRecord(
        id="ph-0001",
        domain=Domain.PHYSICS,
        title="Cold Atom Drift in Weak Traps",
        abstract="Drift measurements of cold atoms under weak trapping.",
        sections=[Section("Outlook", body4)],
    )
    p4.annotations = [
        ann(body4, "A natural next step is probing the strong-coupling regime. ",
            FriKind.DIRECT, "g1", 0),
        ann(body4, "Mapping the full phase diagram would settle the debate. ",
            FriKind.DIRECT, "g2", 0),
    ]
    papers.append(p4)
    return papers


def write_corpus(directory: Path, papers: list[PaperRecord] | None = None) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    papers = papers if papers is not None else fixture_papers()
    by_domain: dict[str, list[str]] = {}
    for paper in papers:
        filename = f"{paper.id}.json"
        write_json(directory / filename, paper_to_dict(paper))
        by_domain.setdefault(paper.domain.value, []).append(filename)
    write_json(directory / "manifest.json", {"schema": 1, "domains": by_domain})
    return directory


@pytest.fixture
def corpus_dir(tmp_path: Path) -> Path:
    return write_corpus(tmp_path / "corpus")


def make_offline_config(
    tmp_path: Path,
    corpus: Path,
    run_name: str = "run1",
    models: tuple[str, ...] = ("mock-a", "mock-b"),
    matcher_backend: str = "LlmJudge",
    seed: int = 7,
) -> Path:
    config = {
        "corpus": str(corpus),
        "output_dir": str(tmp_path / "runs" / run_name),
        "models": list(models),
        "template": "Full",
        "chat_provider": {"kind": "mock"},
        "embedding_provider": {"kind": "hash", "dimension": 64, "seed": 0},
        "matcher": {
            "backend": matcher_backend,
            "embed_threshold": 0.68,
            "decision_threshold": 0.5,
            "judge_model": "judge-mock",
        },
        "overlap_fraction": 0.2,
        "seed": seed,
        "cache_dir": str(tmp_path / "cache"),
        "max_in_flight": 4,
        "generation": {"max_tokens": 512, "temperature": 0.0, "seed": None},
    }
    path = tmp_path / f"config-{run_name}.json"
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def offline_config(tmp_path: Path, corpus_dir: Path) -> Path:
    return make_offline_config(tmp_path, corpus_dir)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance test, printed after the run."""
    outcomes: dict[str, str] = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(report, "when", "call") == "call":
                outcomes[nodeid] = status
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for nodeid in sorted(outcomes):
        label = "PASS" if outcomes[nodeid] == "passed" else "FAIL"
        terminalreporter.write_line(f"{label} {nodeid.split('::')[-1]}")
