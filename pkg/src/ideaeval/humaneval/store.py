"""Append-only durable log for human ratings.

One JSON object per line; the file is the source of truth and is replayed
on startup. Appends go through a single lock so concurrent raters cannot
interleave partial lines.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from ..errors import DuplicateRatingError, ValidationError
from ..metrics import validate_answers


@dataclass(frozen=True)
class Rating:
    session_id: str
    idea_key: str
    relevance: int
    novelty: int
    feasibility: int
    submitted_at: str = ""

    def __post_init__(self):
        validate_answers(self.relevance, self.novelty, self.feasibility)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "idea_key": self.idea_key,
            "relevance": self.relevance,
            "novelty": self.novelty,
            "feasibility": self.feasibility,
            "submitted_at": self.submitted_at,
        }


class RatingStore:
    """Holds ratings keyed by (session_id, idea_key); duplicates rejected."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._ratings: dict[tuple[str, str], Rating] = {}
        if self.path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                    rating = Rating(
                        session_id=row["session_id"],
                        idea_key=row["idea_key"],
                        relevance=int(row["relevance"]),
                        novelty=int(row["novelty"]),
                        feasibility=int(row["feasibility"]),
                        submitted_at=str(row.get("submitted_at", "")),
                    )
                except (ValueError, KeyError, TypeError) as exc:
                    raise ValidationError(f"{self.path}:{lineno}: bad rating row: {exc}") from exc
                key = (rating.session_id, rating.idea_key)
                if key in self._ratings:
                    raise ValidationError(
                        f"{self.path}:{lineno}: duplicate rating for {key} in log"
                    )
                self._ratings[key] = rating

    def append(self, rating: Rating) -> None:
        with self._lock:
            key = (rating.session_id, rating.idea_key)
            if key in self._ratings:
                raise DuplicateRatingError(
                    f"idea {rating.idea_key} in session {rating.session_id} is already rated"
                )
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rating.to_dict(), ensure_ascii=False) + "\n")
                fh.flush()
            self._ratings[key] = rating

    def has(self, session_id: str, idea_key: str) -> bool:
        return (session_id, idea_key) in self._ratings

    def for_session(self, session_id: str) -> list[Rating]:
        return [r for (sid, _), r in sorted(self._ratings.items()) if sid == session_id]

    def all(self) -> list[Rating]:
        return [self._ratings[k] for k in sorted(self._ratings)]

    def __len__(self) -> int:
        return len(self._ratings)
