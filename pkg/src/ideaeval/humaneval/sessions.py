"""Rating session construction and the in-memory session registry.

Each session hands one annotator the ideas for one paper, pooled across
models and shuffled, with every idea behind a blind key so nothing in the
rater-facing path names a model. A seeded sample of ideas goes to a second
annotator; that dual-rated slice is what agreement statistics use.
"""
from __future__ import annotations

import csv
import hashlib
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import ValidationError
from ..generation import IdeaSet
from ..ioutil import read_json, write_json
from ..metrics import HumanEvalAggregate, human_aggregate
from .store import Rating, RatingStore

DEFAULT_OVERLAP_FRACTION = 0.20


def blind_key(run_id: str, paper_id: str, model_id: str, idea_index: int, seed: int) -> str:
    """Stable per-run pseudonym for one generated idea.

    Keyed digest so the mapping cannot be inverted from the key alone;
    the run keeps the key map in a separate private file.
    """
    material = f"{run_id}\x1f{paper_id}\x1f{model_id}\x1f{idea_index}"
    return hashlib.blake2b(
        material.encode("utf-8"), digest_size=6, key=seed.to_bytes(8, "little", signed=True)
    ).hexdigest()


@dataclass
class Session:
    session_id: str
    paper_id: str
    annotator_id: str
    idea_keys: list[str]
    overlap: bool
    shuffle_seed: int
    title: str = ""
    abstract: str = ""

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "paper_id": self.paper_id,
            "annotator_id": self.annotator_id,
            "idea_keys": list(self.idea_keys),
            "overlap": self.overlap,
            "shuffle_seed": self.shuffle_seed,
            "title": self.title,
            "abstract": self.abstract,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Session":
        return cls(
            session_id=data["session_id"],
            paper_id=data["paper_id"],
            annotator_id=data["annotator_id"],
            idea_keys=list(data["idea_keys"]),
            overlap=bool(data["overlap"]),
            shuffle_seed=int(data["shuffle_seed"]),
            title=data.get("title", ""),
            abstract=data.get("abstract", ""),
        )


@dataclass
class SessionPlan:
    """Everything `humaneval create` persists: sessions plus the private
    blind-key map (key -> paper/model/idea/text)."""

    run_id: str
    seed: int
    overlap_fraction: float
    sessions: list[Session] = field(default_factory=list)
    key_map: dict[str, dict] = field(default_factory=dict)

    def session(self, session_id: str) -> Session | None:
        for s in self.sessions:
            if s.session_id == session_id:
                return s
        return None

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        write_json(
            directory / "sessions.json",
            {
                "run_id": self.run_id,
                "seed": self.seed,
                "overlap_fraction": self.overlap_fraction,
                "sessions": [s.to_dict() for s in self.sessions],
            },
        )
        write_json(directory / "keymap.json", {"run_id": self.run_id, "keys": self.key_map})

    @classmethod
    def load(cls, directory: str | Path) -> "SessionPlan":
        directory = Path(directory)
        sess = read_json(directory / "sessions.json")
        keys = read_json(directory / "keymap.json")
        if sess["run_id"] != keys["run_id"]:
            raise ValidationError("sessions.json and keymap.json belong to different runs")
        return cls(
            run_id=sess["run_id"],
            seed=int(sess["seed"]),
            overlap_fraction=float(sess["overlap_fraction"]),
            sessions=[Session.from_dict(d) for d in sess["sessions"]],
            key_map=dict(keys["keys"]),
        )


def create_sessions(
    run_id: str,
    idea_sets: Sequence[IdeaSet],
    assignments: Mapping[str, Sequence[str]],
    paper_front_matter: Mapping[str, tuple[str, str]] | None = None,
    overlap_fraction: float = DEFAULT_OVERLAP_FRACTION,
    seed: int = 0,
) -> SessionPlan:
    """Build sessions for every assigned paper.

    `assignments` maps paper_id to its annotators: the first gets every
    idea for the paper, the second (when present) rates only the ideas
    drawn into the overlap sample. The sample size is
    round(overlap_fraction * total ideas), drawn seeded from the ideas of
    dual-annotator papers only.
    """
    if not (0.0 <= overlap_fraction <= 1.0):
        raise ValidationError("overlap_fraction must be in [0, 1]")
    by_paper: dict[str, list[IdeaSet]] = {}
    for ideas in idea_sets:
        by_paper.setdefault(ideas.paper_id, []).append(ideas)
    for paper_id in assignments:
        if paper_id not in by_paper or not any(s.ideas for s in by_paper[paper_id]):
            raise ValidationError(f"paper {paper_id} is assigned but has no generated ideas")

    key_map: dict[str, dict] = {}
    paper_keys: dict[str, list[str]] = {}
    total_ideas = 0
    for paper_id in sorted(assignments):
        keys = []
        for ideas in sorted(by_paper[paper_id], key=lambda s: s.model_id):
            for idea in ideas.ideas:
                key = blind_key(run_id, paper_id, ideas.model_id, idea.index, seed)
                if key in key_map:
                    raise ValidationError(f"blind key collision on {key}")
                key_map[key] = {
                    "paper_id": paper_id,
                    "model_id": ideas.model_id,
                    "idea_index": idea.index,
                    "text": idea.text,
                }
                keys.append(key)
                total_ideas += 1
        paper_keys[paper_id] = keys

    dual_papers = [p for p in sorted(assignments) if len(assignments[p]) >= 2]
    overlap_pool = [k for p in dual_papers for k in paper_keys[p]]
    quota = round(overlap_fraction * total_ideas)
    if quota > len(overlap_pool):
        raise ValidationError(
            f"overlap quota {quota} exceeds the {len(overlap_pool)} ideas on "
            "papers with a second annotator"
        )
    rng = random.Random(seed)
    overlap_keys = set(rng.sample(overlap_pool, quota)) if quota else set()

    plan = SessionPlan(run_id=run_id, seed=seed, overlap_fraction=overlap_fraction)
    plan.key_map = key_map
    front = paper_front_matter or {}
    for paper_id in sorted(assignments):
        annotators = list(assignments[paper_id])
        if not annotators:
            raise ValidationError(f"paper {paper_id} has an empty annotator list")
        title, abstract = front.get(paper_id, ("", ""))
        for position, annotator in enumerate(annotators[:2]):
            if position == 0:
                keys = list(paper_keys[paper_id])
            else:
                keys = [k for k in paper_keys[paper_id] if k in overlap_keys]
                if not keys:
                    continue
            session_id = hashlib.blake2b(
                f"{run_id}\x1f{paper_id}\x1f{annotator}".encode("utf-8"),
                digest_size=5,
                key=seed.to_bytes(8, "little", signed=True),
            ).hexdigest()
            if plan.session(session_id) is not None:
                raise ValidationError(f"session id collision on {session_id}")
            shuffle_seed = seed * 1_000_003 + len(plan.sessions)
            random.Random(shuffle_seed).shuffle(keys)
            plan.sessions.append(
                Session(
                    session_id=session_id,
                    paper_id=paper_id,
                    annotator_id=annotator,
                    idea_keys=keys,
                    overlap=position == 1,
                    shuffle_seed=shuffle_seed,
                    title=title,
                    abstract=abstract,
                )
            )
    return plan


def load_assignments(path: str | Path) -> dict[str, list[str]]:
    """Read {"assignments": {paper_id: [annotator, ...]}} from JSON."""
    data = read_json(path)
    table = data.get("assignments")
    if not isinstance(table, dict) or not table:
        raise ValidationError(f"{path}: expected a non-empty 'assignments' map")
    out = {}
    for paper_id, annotators in table.items():
        if not isinstance(annotators, list) or not all(isinstance(a, str) for a in annotators):
            raise ValidationError(f"{path}: annotators for {paper_id} must be a string list")
        out[str(paper_id)] = list(annotators)
    return out


class SessionManager:
    """Serves session views and records ratings against the plan."""

    def __init__(self, plan: SessionPlan, store: RatingStore):
        self.plan = plan
        self.store = store

    def session_view(self, session_id: str) -> dict | None:
        """Rater-facing snapshot; contains blind keys and texts, no models."""
        session = self.plan.session(session_id)
        if session is None:
            return None
        rated = {r.idea_key for r in self.store.for_session(session_id)}
        total = len(session.idea_keys)
        return {
            "session_id": session.session_id,
            "paper_id": session.paper_id,
            "title": session.title,
            "abstract": session.abstract,
            "ideas": [
                {"key": k, "text": self.plan.key_map[k]["text"]} for k in session.idea_keys
            ],
            "rated_keys": sorted(rated),
            "status": "complete" if len(rated) == total else "open",
            "progress": {"rated": len(rated), "total": total},
        }

    def record(self, session_id: str, idea_key: str, relevance: int, novelty: int,
               feasibility: int, submitted_at: str = "") -> Rating:
        session = self.plan.session(session_id)
        if session is None:
            raise KeyError(session_id)
        if idea_key not in session.idea_keys:
            raise ValidationError(f"idea key {idea_key!r} does not belong to this session")
        rating = Rating(
            session_id=session_id,
            idea_key=idea_key,
            relevance=relevance,
            novelty=novelty,
            feasibility=feasibility,
            submitted_at=submitted_at,
        )
        self.store.append(rating)
        return rating

    def completed_sessions(self) -> list[Session]:
        done = []
        for session in self.plan.sessions:
            rated = {r.idea_key for r in self.store.for_session(session.session_id)}
            if session.idea_keys and rated.issuperset(session.idea_keys):
                done.append(session)
        return done

    def report(self) -> dict:
        """Per-model aggregates with model identity resolved.

        Every stored rating counts once in its model's percentages; the
        dual-rated subset feeds kappa, pairing each idea's primary-session
        rating with its overlap-session rating (rater A is the
        lexicographically smaller annotator id).
        """
        if not self.completed_sessions():
            raise ValidationError("no completed sessions to report on")
        session_by_id = {s.session_id: s for s in self.plan.sessions}
        per_model_answers: dict[str, list[tuple[int, int, int]]] = {}
        # (paper, key) -> {annotator: triple} over dual-rated ideas
        seen: dict[tuple[str, str], dict[str, tuple[int, int, int]]] = {}
        for rating in self.store.all():
            session = session_by_id.get(rating.session_id)
            if session is None:
                raise ValidationError(f"rating references unknown session {rating.session_id}")
            meta = self.plan.key_map[rating.idea_key]
            triple = (rating.relevance, rating.novelty, rating.feasibility)
            per_model_answers.setdefault(meta["model_id"], []).append(triple)
            seen.setdefault((session.paper_id, rating.idea_key), {})[session.annotator_id] = triple

        # overlap pairs are pooled per model across papers
        per_model_pairs: dict[str, list[tuple[tuple, tuple]]] = {}
        for (paper_id, idea_key), by_annotator in sorted(seen.items()):
            if len(by_annotator) < 2:
                continue
            raters = sorted(by_annotator)[:2]
            model_id = self.plan.key_map[idea_key]["model_id"]
            per_model_pairs.setdefault(model_id, []).append(
                (by_annotator[raters[0]], by_annotator[raters[1]])
            )

        aggregates: dict[str, HumanEvalAggregate] = {}
        for model_id in sorted(per_model_answers):
            aggregates[model_id] = human_aggregate(
                model_id,
                per_model_answers[model_id],
                per_model_pairs.get(model_id, ()),
            )
        return {
            "run_id": self.plan.run_id,
            "rating_count": len(self.store),
            "completed_sessions": len(self.completed_sessions()),
            "models": {m: a.to_dict() for m, a in aggregates.items()},
        }


REQUIRED_CSV_COLUMNS = ("session_id", "idea_key", "relevance", "novelty", "feasibility")


@dataclass
class ImportResult:
    stored: int
    rejected: list[tuple[int, str]]


def import_ratings_csv(manager: SessionManager, path: str | Path) -> ImportResult:
    """Load ratings from CSV rows, continuing past bad rows.

    Rejections carry the row number and reason; a duplicate key is
    reported the same way the HTTP endpoint reports 409.
    """
    stored = 0
    rejected: list[tuple[int, str]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_CSV_COLUMNS if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing CSV columns: {', '.join(missing)}")
        for row_no, row in enumerate(reader, start=2):
            try:
                manager.record(
                    session_id=row["session_id"],
                    idea_key=row["idea_key"],
                    relevance=int(row["relevance"]),
                    novelty=int(row["novelty"]),
                    feasibility=int(row["feasibility"]),
                )
                stored += 1
            except KeyError:
                rejected.append((row_no, f"unknown session {row.get('session_id')!r}"))
            except ValueError as exc:
                rejected.append((row_no, f"non-integer answer: {exc}"))
            except Exception as exc:  # duplicate or validation, both per-row
                rejected.append((row_no, str(exc)))
    return ImportResult(stored=stored, rejected=rejected)


def now_utc() -> str:
    return datetime.now(timezone.utc).isoformat()
