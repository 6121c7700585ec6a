"""Judge and embedding matchers plus the labeled-pair benchmark harness."""
from __future__ import annotations

import itertools

import pytest

from ideaeval.corpus import ApFriGroup
from ideaeval.errors import ValidationError
from ideaeval.generation import GeneratedIdea
from ideaeval.matcher import (
    LabeledPair,
    LabeledPairSet,
    MatchJudgment,
    MatcherBackend,
    assign_splits,
    benchmark_matcher,
    embedding_match_score,
    embedding_score_fn,
    judge_score_fn,
    load_labeled_pairs,
    match_embedding,
    match_llm_judge,
    parse_judge_score,
    render_collection,
)
from ideaeval.providers import (
    GenerationConfig,
    HashEmbedder,
    ScriptedChatProvider,
    StaticEmbedder,
)
from ideaeval.ioutil import write_json

CONFIG = GenerationConfig(model_name="judge-1")


def idea(text="an idea", index=1):
    return GeneratedIdea("p1", "m1", index, text, len(text.split()))


def groups(*texts):
    return [ApFriGroup(f"g{i}", t, []) for i, t in enumerate(texts, start=1)]


@pytest.mark.parametrize(
    "response,expected",
    [
        ("Yes, 0.8", 0.8),
        ("Yes. Degree of presence: 0.35", 0.35),
        ("No", 0.0),
        ("No, the idea is absent.", 0.0),
        ("0.95", 0.95),
        ("Idea 3 is the closest; degree 0.5", 0.5),
        ("The answer is 1", 1.0),
        ("definitely present", None),
        ("", None),
    ],
)
def test_parse_judge_score(response, expected):
    assert parse_judge_score(response) == expected


def test_render_collection_numbers_entries():
    assert render_collection(["a", "b"]) == "1. a\n2. b"
    with pytest.raises(ValidationError):
        render_collection([])


def test_match_llm_judge_score_parsed():
    provider = ScriptedChatProvider.from_responses(["Yes, 0.8"])
    judgment = match_llm_judge(provider, groups("ref idea"), idea(), CONFIG)
    assert judgment.score == 0.8
    assert judgment.valid
    assert judgment.backend is MatcherBackend.LlmJudge
    assert "1. ref idea" in provider.exchanges[0].user
    assert "Single idea: an idea" in provider.exchanges[0].user


def test_match_llm_judge_no_answer():
    provider = ScriptedChatProvider.from_responses(["No"])
    judgment = match_llm_judge(provider, groups("ref"), idea(), CONFIG)
    assert judgment.score == 0.0
    assert judgment.valid


def test_match_llm_judge_reprompts_identically_then_invalid():
    provider = ScriptedChatProvider.from_responses(["word salad", "more salad"])
    judgment = match_llm_judge(provider, groups("ref"), idea(), CONFIG)
    assert not judgment.valid
    assert judgment.score == 0.0
    assert len(provider.exchanges) == 2
    assert provider.exchanges[0].user == provider.exchanges[1].user
    assert provider.exchanges[0].system == provider.exchanges[1].system


def test_match_llm_judge_reprompt_recovers():
    provider = ScriptedChatProvider.from_responses(["word salad", "Yes: 0.7"])
    judgment = match_llm_judge(provider, groups("ref"), idea(), CONFIG)
    assert judgment.valid
    assert judgment.score == 0.7


def test_match_llm_judge_requires_groups():
    with pytest.raises(ValidationError):
        match_llm_judge(ScriptedChatProvider.echo(), [], idea(), CONFIG)


def test_match_embedding_identity_text():
    embedder = HashEmbedder()
    judgment = match_embedding(embedder, groups("exact same words"), idea("exact same words"))
    assert judgment.score == pytest.approx(1.0)
    assert judgment.backend is MatcherBackend.EmbeddingThreshold


def test_match_embedding_below_threshold_zeroes():
    # cos(collection at e1, idea at 30 degrees past e1) = 0.5 < 0.68
    embedder = StaticEmbedder({"ref": [1.0, 0.0], "cand": [0.5, 0.8660254037844386]})
    assert embedding_match_score(embedder, ["ref"], "cand") == 0.0
    assert embedding_match_score(embedder, ["ref"], "cand", threshold=0.0) == pytest.approx(0.5)


def test_match_embedding_max_over_groups_order_invariant():
    embedder = StaticEmbedder(
        {"g-far": [1.0, 0.0], "g-near": [0.0, 1.0], "cand": [0.1, 0.99498743710662]}
    )
    for perm in itertools.permutations(["g-far", "g-near"]):
        score = embedding_match_score(embedder, list(perm), "cand", threshold=0.68)
        assert score == pytest.approx(0.99498743710662, abs=1e-12)


def test_judgment_score_bounds():
    with pytest.raises(ValidationError):
        MatchJudgment("p", 1, MatcherBackend.LlmJudge, 1.2)


def balanced_pairs():
    pairs = []
    for i in range(4):
        pairs.append(LabeledPair(("ref",), f"match-{i}", True, "test"))
        pairs.append(LabeledPair(("ref",), f"nonmatch-{i}", False, "test"))
    return LabeledPairSet(pairs=pairs)


def test_benchmark_oracle_backend_is_perfect():
    result = benchmark_matcher(
        lambda collection, idea_text: 1.0 if idea_text.startswith("match") else 0.0,
        balanced_pairs(),
    )
    assert result.overall.accuracy == 1.0
    assert result.per_split["test"].accuracy == 1.0
    assert result.per_split["test"].tp == 4
    assert result.per_split["test"].tn == 4


def test_benchmark_constant_backend_on_balanced_set():
    result = benchmark_matcher(lambda c, i: 1.0, balanced_pairs())
    assert result.overall.accuracy == 0.5
    assert result.overall.fp == 4


def test_benchmark_hand_counted_accuracy():
    # 8 pairs, scorer wrong on exactly two
    def scorer(collection, idea_text):
        if idea_text in ("match-0", "nonmatch-1"):  # one fn, one fp
            return 0.0 if idea_text == "match-0" else 1.0
        return 1.0 if idea_text.startswith("match") else 0.0

    result = benchmark_matcher(scorer, balanced_pairs())
    assert result.overall.accuracy == pytest.approx(0.75)
    assert result.overall.total == 8


def test_benchmark_empty_set_rejected():
    with pytest.raises(ValidationError):
        benchmark_matcher(lambda c, i: 1.0, LabeledPairSet(pairs=[]))


def test_benchmark_rejects_out_of_range_scores():
    with pytest.raises(ValidationError):
        benchmark_matcher(lambda c, i: 1.5, balanced_pairs())


def test_assign_splits_30_70_and_determinism():
    rows = [(("c",), f"idea-{i}", i % 2 == 0) for i in range(10)]
    first = assign_splits(rows, validation_fraction=0.3, seed=9)
    second = assign_splits(rows, validation_fraction=0.3, seed=9)
    assert [p.split for p in first.pairs] == [p.split for p in second.pairs]
    assert len(first.split_pairs("validation")) == 3
    assert len(first.split_pairs("test")) == 7
    different = assign_splits(rows, validation_fraction=0.3, seed=10)
    assert [p.split for p in different.pairs] != [p.split for p in first.pairs]


def test_load_labeled_pairs_file(tmp_path):
    path = tmp_path / "pairs.json"
    write_json(
        path,
        {
            "pairs": [
                {"collection": ["a"], "idea": "x", "label": "matched", "split": "test"},
                {"collection": ["a"], "idea": "y", "label": "unmatched"},
            ]
        },
    )
    pair_set = load_labeled_pairs(path)
    assert len(pair_set.pairs) == 2
    labels = {(p.idea, p.matched) for p in pair_set.pairs}
    assert labels == {("x", True), ("y", False)}


def test_load_labeled_pairs_bad_label(tmp_path):
    path = tmp_path / "pairs.json"
    write_json(path, {"pairs": [{"collection": ["a"], "idea": "x", "label": "maybe"}]})
    with pytest.raises(ValidationError):
        load_labeled_pairs(path)


def test_judge_score_fn_adapter():
    provider = ScriptedChatProvider.from_responses(["Yes, 0.9"])
    fn = judge_score_fn(provider, CONFIG)
    assert fn(["ref a", "ref b"], "candidate") == 0.9


def test_embedding_score_fn_adapter():
    embedder = HashEmbedder()
    fn = embedding_score_fn(embedder, threshold=0.68)
    assert fn(["identical words"], "identical words") == pytest.approx(1.0)
    assert fn(["something entirely else"], "identical words") == 0.0
