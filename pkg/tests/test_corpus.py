"""Corpus loading, span stripping, reconstruction, and statistics."""
from __future__ import annotations

import random

import pytest

from ideaeval.corpus import (
    Domain,
    FriAnnotation,
    FriKind,
    PaperRecord,
    Section,
    assemble_text,
    corpus_digest,
    corpus_stats,
    load_corpus,
    paper_from_dict,
    paper_to_dict,
    reconstruct_sections,
    strip_fris,
    stripped_from_dict,
    stripped_to_dict,
    word_count,
)
from ideaeval.errors import CorpusError, ValidationError
from ideaeval.ioutil import write_json

from conftest import ann, fixture_papers, write_corpus


def test_load_corpus_empty_dir(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    assert load_corpus(empty) == []


def test_load_corpus_fixture(corpus_dir):
    papers = load_corpus(corpus_dir)
    assert [p.id for p in papers] == ["cs-0001", "cs-0002", "cs-0003", "ph-0001"]
    assert papers[0].domain is Domain.COMPUTER_SCIENCE
    assert papers[3].domain is Domain.PHYSICS


def test_load_corpus_without_manifest(tmp_path):
    directory = write_corpus(tmp_path / "c")
    (directory / "manifest.json").unlink()
    papers = load_corpus(directory)
    assert len(papers) == 4


def test_load_corpus_missing_path(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(tmp_path / "nowhere")


def test_span_beyond_section_names_paper(tmp_path):
    doc = paper_to_dict(fixture_papers()[0])
    doc["annotations"][0]["end"] = 10_000
    path = tmp_path / "bad.json"
    write_json(path, doc)
    with pytest.raises(CorpusError) as err:
        load_corpus(tmp_path)
    assert "cs-0001" in str(err.value)


def test_overlapping_spans_rejected():
    body = "alpha beta gamma delta"
    paper = PaperRecord(
        id="x1", domain=Domain.CHEMISTRY, title="t", abstract="a",
        sections=[Section("s", body)],
        annotations=[
            FriAnnotation(0, 0, 10, FriKind.DIRECT, "g1"),
            FriAnnotation(0, 5, 15, FriKind.DIRECT, "g2"),
        ],
    )
    with pytest.raises(CorpusError) as err:
        strip_fris(paper)
    assert "overlap" in str(err.value)


def test_unknown_domain_label():
    doc = paper_to_dict(fixture_papers()[0])
    doc["domain"] = "Astrology"
    with pytest.raises(CorpusError) as err:
        paper_from_dict(doc)
    assert "Astrology" in str(err.value)


def test_empty_section_body_rejected():
    paper = PaperRecord(
        id="x2", domain=Domain.MEDICAL, title="t", abstract="a",
        sections=[Section("s", "")],
    )
    with pytest.raises(CorpusError):
        strip_fris(paper)


def test_duplicate_ids_rejected(tmp_path):
    paper = fixture_papers()[0]
    write_json(tmp_path / "a.json", paper_to_dict(paper))
    write_json(tmp_path / "b.json", paper_to_dict(paper))
    with pytest.raises(CorpusError) as err:
        load_corpus(tmp_path)
    assert "duplicate" in str(err.value)


def test_strip_no_annotations_is_identity():
    paper = PaperRecord(
        id="x3", domain=Domain.ECONOMICS, title="T", abstract="A",
        sections=[Section("s", "no future work here")],
    )
    stripped = strip_fris(paper)
    assert stripped.sections[0].body == "no future work here"
    assert stripped.ap_fri == []
    assert stripped.text == assemble_text("T", "A", paper.sections)


def test_strip_direct_removes_sentence():
    papers = {p.id: p for p in fixture_papers()}
    stripped = strip_fris(papers["cs-0001"])
    assert "court rulings" not in stripped.text
    assert "multilingual benchmark" not in stripped.text
    assert "Accuracy remains the main open problem." in stripped.sections[1].body
    texts = [g.text for g in stripped.ap_fri]
    assert texts == [
        "In future work we will extend coverage to court rulings. ",
        "We also plan to release a multilingual benchmark. ",
    ]


def test_strip_mixed_merges_by_group_in_document_order():
    papers = {p.id: p for p in fixture_papers()}
    stripped = strip_fris(papers["cs-0002"])
    groups = {g.group_id: g.text for g in stripped.ap_fri}
    assert groups["g1"] == (
        "exploring learned eviction is a promising direction "
        "combining learned eviction with quantization"
    )
    assert groups["g2"] == "The gains persist across hardware."
    # mixed spans remove only the annotated fragment, not the host sentence
    assert "while latency stays flat" in stripped.sections[1].body


def test_group_totality():
    for paper in fixture_papers():
        stripped = strip_fris(paper)
        span_count = sum(len(g.spans) for g in stripped.ap_fri)
        assert span_count == len(paper.annotations)
        assert len(stripped.ap_fri) <= len(paper.annotations)


def test_reconstruction_fixture_papers():
    for paper in fixture_papers():
        stripped = strip_fris(paper)
        rebuilt = reconstruct_sections(stripped)
        assert [s.body for s in rebuilt] == [s.body for s in paper.sections]
        assert [s.name for s in rebuilt] == [s.name for s in paper.sections]


def _random_annotated_paper(rng: random.Random) -> PaperRecord:
    sections = []
    annotations = []
    for sec_idx in range(rng.randint(1, 3)):
        words = [
            rng.choice(["alpha", "beta", "gamma", "delta", "epsilon", "zeta"])
            for _ in range(rng.randint(10, 60))
        ]
        body = " ".join(words)
        sections.append(Section(f"s{sec_idx}", body))
        cursor = 0
        while cursor < len(body) - 2 and rng.random() < 0.6:
            start = rng.randint(cursor, len(body) - 2)
            end = rng.randint(start + 1, min(len(body), start + 25))
            annotations.append(
                FriAnnotation(
                    section_index=sec_idx,
                    start=start,
                    end=end,
                    kind=rng.choice([FriKind.DIRECT, FriKind.MIXED]),
                    group_id=f"g{rng.randint(1, 4)}",
                )
            )
            cursor = end + rng.randint(1, 5)
    return PaperRecord(
        id="r", domain=Domain.CHEMISTRY, title="t", abstract="a",
        sections=sections, annotations=annotations,
    )


def test_reconstruction_randomized_spans():
    rng = random.Random(42)
    for _ in range(200):
        paper = _random_annotated_paper(rng)
        stripped = strip_fris(paper)
        rebuilt = reconstruct_sections(stripped)
        assert [s.body for s in rebuilt] == [s.body for s in paper.sections]


def test_word_count_conservation_on_token_boundaries():
    # spans in cs-0001 start and end on token boundaries
    paper = {p.id: p for p in fixture_papers()}["cs-0001"]
    stripped = strip_fris(paper)
    removed_words = sum(
        word_count(s.text) for g in stripped.ap_fri for s in g.spans
    )
    original_words = word_count(assemble_text(paper.title, paper.abstract, paper.sections))
    assert original_words == word_count(stripped.text) + removed_words


def test_stripped_round_trip():
    paper = fixture_papers()[1]
    stripped = strip_fris(paper)
    clone = stripped_from_dict(stripped_to_dict(stripped))
    assert clone.text == stripped.text
    assert [g.text for g in clone.ap_fri] == [g.text for g in stripped.ap_fri]
    assert reconstruct_sections(clone) == reconstruct_sections(stripped)


def test_paper_round_trip_and_digest():
    papers = fixture_papers()
    clones = [paper_from_dict(paper_to_dict(p)) for p in papers]
    assert corpus_digest(clones) == corpus_digest(papers)
    assert corpus_digest(list(reversed(clones))) == corpus_digest(papers)


def test_corpus_stats_hand_counts():
    # 2 title + 1 abstract + 1 section-name words, then the body words
    p_a = PaperRecord(
        id="a", domain=Domain.MEDICAL, title="t1 t2", abstract="a1",
        sections=[Section("s", " ".join(["w"] * 96))],
    )
    p_b = PaperRecord(
        id="b", domain=Domain.MEDICAL, title="t1 t2", abstract="a1",
        sections=[Section("s", " ".join(["w"] * 196))],
    )
    stats = corpus_stats([p_a, p_b])
    med = stats[Domain.MEDICAL]
    assert med.papers == 2
    assert med.avg_words_without_fwk == pytest.approx(150.0)
    assert med.avg_words_fwk == 0.0


def test_corpus_stats_fwk_words():
    body = "keep one two three " + "drop1 drop2 drop3"
    paper = PaperRecord(
        id="c", domain=Domain.PHYSICS, title="t", abstract="a",
        sections=[Section("s", body)],
        annotations=[ann(body, "drop1 drop2 drop3", FriKind.DIRECT, "g1", 0)],
    )
    stats = corpus_stats([paper])
    assert stats[Domain.PHYSICS].avg_words_fwk == 3.0
    assert Domain.CHEMISTRY not in stats


def test_corpus_stats_empty_corpus():
    with pytest.raises(ValidationError):
        corpus_stats([])
