"""Prompt templates, idea generation, and bullet-list response parsing.

Template wording is fixed; the toolkit's comparisons only hold if every run
uses byte-identical instructions, so the texts here are constants and the
render step refuses unbound placeholders instead of guessing.
"""
from __future__ import annotations

import enum
import re
import string
from dataclasses import dataclass, field

from .corpus import StrippedPaper, word_count
from .errors import NoIdeasParsedError, ValidationError
from .providers import ChatProvider, GenerationConfig


class TemplateName(str, enum.Enum):
    Full = "Full"
    TopFive = "TopFive"
    RagAugmented = "RagAugmented"
    ContributionExtract = "ContributionExtract"
    JudgeMatch = "JudgeMatch"


@dataclass(frozen=True)
class PromptTemplate:
    name: TemplateName
    system: str
    user_template: str

    @property
    def placeholders(self) -> frozenset[str]:
        return frozenset(
            name for _, name, _, _ in string.Formatter().parse(self.user_template) if name
        )


TEMPLATES: dict[TemplateName, PromptTemplate] = {
    TemplateName.Full: PromptTemplate(
        name=TemplateName.Full,
        system="You are a research scientist.",
        user_template=(
            "Imagine you are a research scientist. After reading the following paper, "
            "brainstorm to generate potential future research ideas:\n\n"
            "{paper_text}\n\n"
            "Potential future research ideas from the paper in bullet points are:"
        ),
    ),
    TemplateName.TopFive: PromptTemplate(
        name=TemplateName.TopFive,
        system="You are a research scientist.",
        user_template=(
            "Imagine you are a research scientist. After reading the following paper, "
            "brainstorm to generate potential top 5 future research ideas:\n\n"
            "{paper_text}\n\n"
            "Potential top 5 future research ideas from the paper in bullet points are:"
        ),
    ),
    TemplateName.RagAugmented: PromptTemplate(
        name=TemplateName.RagAugmented,
        system="You are a research scientist.",
        user_template=(
            "Imagine you are a research scientist. After reading the following paper "
            "and background knowledge, brainstorm to generate potential top 5 future "
            "research ideas:\n\n"
            "{paper_text}\n\n"
            "{background_knowledge}\n\n"
            "Make sure the future research ideas are very distinct from the background "
            "knowledge provided. Potential top 5 future research ideas from the paper "
            "in bullet points are:"
        ),
    ),
    TemplateName.ContributionExtract: PromptTemplate(
        name=TemplateName.ContributionExtract,
        system=(
            "You are a helpful research agent that generates background knowledge or "
            "related works given abstracts of papers."
        ),
        # The closing line below is part of the published instruction text and is
        # kept as-is even though it reads like a stray generation suffix.
        user_template=(
            "You are given abstracts of research papers and your task is to extract "
            "contributions or findings or methods proposed in the paper. You are not "
            "allowed to make any changes to data given to you. Return the response as "
            "it is and return response for all 20 papers in passage. Return title of "
            "paper followed by its contributions or findings or methods in less than "
            "100 words. If no contributions or findings or methods are found, return "
            "NONE.\n\n"
            "PASSAGE: '{relevant_passage}'\n\n"
            "Potential top 5 future research ideas from the paper in bullet points are:"
        ),
    ),
    TemplateName.JudgeMatch: PromptTemplate(
        name=TemplateName.JudgeMatch,
        system="",
        user_template=(
            "Your task is to examine whether a particular idea is incorporated within "
            "a set of ideas and to what degree.\n"
            "Collection of ideas: {collection}\n"
            "Single idea: {idea}\n"
            "Is the single idea contained within the collection of ideas?\n"
            "If yes, quantify its degree of presence or relevance of the single idea "
            "in the collection of ideas on a scale from 0 to 1."
        ),
    ),
}


def build_prompt(template: PromptTemplate, bindings: dict[str, str]) -> tuple[str, str]:
    """Render (system, user) from a template; every placeholder must be bound."""
    missing = template.placeholders - set(bindings)
    if missing:
        raise ValidationError(
            f"template {template.name.value} is missing bindings for: {', '.join(sorted(missing))}"
        )
    user = template.user_template.format(**{k: bindings[k] for k in template.placeholders})
    return template.system, user


@dataclass(frozen=True)
class GeneratedIdea:
    paper_id: str
    model_id: str
    index: int
    text: str
    word_count: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("idea text is empty")
        if self.index < 1:
            raise ValidationError("idea index starts at 1")


@dataclass
class IdeaSet:
    paper_id: str
    model_id: str
    ideas: list[GeneratedIdea] = field(default_factory=list)
    raw_response: str = ""

    def texts(self) -> list[str]:
        return [i.text for i in self.ideas]

    def to_dict(self) -> dict:
        return {
            "paper_id": self.paper_id,
            "model_id": self.model_id,
            "ideas": [
                {"index": i.index, "text": i.text, "word_count": i.word_count}
                for i in self.ideas
            ],
            "raw_response": self.raw_response,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IdeaSet":
        ideas = [
            GeneratedIdea(
                paper_id=data["paper_id"],
                model_id=data["model_id"],
                index=item["index"],
                text=item["text"],
                word_count=item["word_count"],
            )
            for item in data["ideas"]
        ]
        return cls(
            paper_id=data["paper_id"],
            model_id=data["model_id"],
            ideas=ideas,
            raw_response=data["raw_response"],
        )


# Leading bullet or enumeration markers: -, *, •, "1.", "1)", "(1)".
_MARKER = re.compile(r"^\s*(?:[-*•]\s+|\(\d+\)\s*|\d+[.)]\s+)")


def parse_bullets(text: str) -> list[str]:
    """Split a model response into idea strings.

    Lines opening with a bullet or enumeration marker start a new idea;
    marker-less lines continue the previous one (model output wraps).
    Text before the first marker is preamble and dropped. Bold markers
    are stripped so downstream word counts see prose, not markup.
    """
    ideas: list[str] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        match = _MARKER.match(line)
        if match:
            ideas.append(line[match.end():].strip())
        elif ideas:
            ideas[-1] = f"{ideas[-1]} {line.strip()}"
    cleaned = []
    for idea in ideas:
        idea = idea.replace("**", "").replace("__", "").strip().strip("`").strip()
        if idea:
            cleaned.append(idea)
    return cleaned


def generate_ideas(
    provider: ChatProvider,
    stripped: StrippedPaper,
    template: PromptTemplate,
    config: GenerationConfig,
    extra_bindings: dict[str, str] | None = None,
) -> IdeaSet:
    """Prompt the provider with the stripped paper and parse the idea list."""
    paper_text = stripped.text
    if not paper_text.strip():
        raise ValidationError(f"paper {stripped.paper_id} has no text after stripping")
    bindings = {"paper_text": paper_text}
    if extra_bindings:
        bindings.update(extra_bindings)
    system, user = build_prompt(template, bindings)
    response = provider.chat(system, user, config)
    texts = parse_bullets(response)
    if not texts:
        raise NoIdeasParsedError(
            f"no ideas parsed from response for paper {stripped.paper_id} "
            f"(model {config.model_name})"
        )
    ideas = [
        GeneratedIdea(
            paper_id=stripped.paper_id,
            model_id=config.model_name,
            index=i,
            text=t,
            word_count=word_count(t),
        )
        for i, t in enumerate(texts, start=1)
    ]
    return IdeaSet(
        paper_id=stripped.paper_id,
        model_id=config.model_name,
        ideas=ideas,
        raw_response=response,
    )
