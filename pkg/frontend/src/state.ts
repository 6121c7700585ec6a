import type { IdeaView, SessionView } from "./types.js";

// The five novelty categories, in scale order (radio value = index + 1).
// These must stay in lockstep with the labels the report aggregates by.
export const NOVELTY_LABELS = [
  "not novel",
  "generic",
  "moderately novel",
  "very novel",
  "extremely novel",
] as const;

export interface DraftAnswers {
  relevance: number | null;
  novelty: number | null;
  feasibility: number | null;
}

export function emptyDraft(): DraftAnswers {
  return { relevance: null, novelty: null, feasibility: null };
}

// Client-side checks are a strict subset of what the server enforces:
// anything that passes here is inside the server's accepted ranges.
export function answerProblems(draft: DraftAnswers): string[] {
  const problems: string[] = [];
  if (draft.relevance === null) {
    problems.push("answer the relevance question");
  } else if (draft.relevance !== 0 && draft.relevance !== 1) {
    problems.push("relevance must be 0 or 1");
  }
  if (draft.novelty === null) {
    problems.push("answer the novelty question");
  } else if (!Number.isInteger(draft.novelty) || draft.novelty < 1 || draft.novelty > 5) {
    problems.push("novelty must be a whole number from 1 to 5");
  }
  if (draft.feasibility === null) {
    problems.push("answer the feasibility question");
  } else if (draft.feasibility !== 0 && draft.feasibility !== 1) {
    problems.push("feasibility must be 0 or 1");
  }
  return problems;
}

export function draftComplete(draft: DraftAnswers): boolean {
  return answerProblems(draft).length === 0;
}

/**
 * Progress through one session: which ideas are rated, which comes next.
 *
 * Rated keys live in a set, so marking the same idea twice (for example
 * after the server answers 409 for a duplicate) can never inflate the
 * count.
 */
export class SessionState {
  readonly sessionId: string;
  readonly title: string;
  readonly abstract: string;
  readonly ideas: IdeaView[];
  private rated: Set<string>;

  constructor(view: SessionView) {
    this.sessionId = view.session_id;
    this.title = view.title;
    this.abstract = view.abstract;
    this.ideas = view.ideas.slice();
    this.rated = new Set(view.rated_keys);
  }

  get total(): number {
    return this.ideas.length;
  }

  get ratedCount(): number {
    return this.rated.size;
  }

  get complete(): boolean {
    return this.ideas.every((idea) => this.rated.has(idea.key));
  }

  /** First idea, in session order, without a stored rating. */
  get currentIdea(): IdeaView | null {
    return this.ideas.find((idea) => !this.rated.has(idea.key)) ?? null;
  }

  /** 1-based position of the current idea, for the "Idea k of N" heading. */
  get currentPosition(): number {
    const current = this.currentIdea;
    if (current === null) {
      return this.total;
    }
    return this.ideas.findIndex((idea) => idea.key === current.key) + 1;
  }

  /** Returns false when the idea was already marked, so callers can tell
   *  a fresh rating from a duplicate. */
  markRated(key: string): boolean {
    if (this.rated.has(key)) {
      return false;
    }
    this.rated.add(key);
    return true;
  }

  isRated(key: string): boolean {
    return this.rated.has(key);
  }
}
