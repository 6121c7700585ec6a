import { describe, expect, it } from "vitest";

import {
  NOVELTY_LABELS,
  SessionState,
  answerProblems,
  draftComplete,
  emptyDraft,
} from "../src/state.js";
import type { SessionView } from "../src/types.js";

function view(overrides: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "s1",
    paper_id: "p1",
    title: "A Paper",
    abstract: "An abstract.",
    ideas: [
      { key: "k1", text: "first idea" },
      { key: "k2", text: "second idea" },
      { key: "k3", text: "third idea" },
    ],
    rated_keys: [],
    status: "open",
    progress: { rated: 0, total: 3 },
    ...overrides,
  };
}

describe("novelty scale", () => {
  it("offers exactly the five categories, in scale order", () => {
    expect(NOVELTY_LABELS).toEqual([
      "not novel",
      "generic",
      "moderately novel",
      "very novel",
      "extremely novel",
    ]);
  });
});

describe("answerProblems", () => {
  it("flags every unanswered question", () => {
    expect(answerProblems(emptyDraft())).toHaveLength(3);
    expect(answerProblems({ relevance: 1, novelty: null, feasibility: null })).toHaveLength(2);
    expect(answerProblems({ relevance: 1, novelty: 3, feasibility: null })).toHaveLength(1);
  });

  it("accepts every in-range combination", () => {
    for (const relevance of [0, 1]) {
      for (const novelty of [1, 2, 3, 4, 5]) {
        for (const feasibility of [0, 1]) {
          expect(answerProblems({ relevance, novelty, feasibility })).toEqual([]);
        }
      }
    }
  });

  it("rejects out-of-range answers, novelty 6 included", () => {
    expect(answerProblems({ relevance: 1, novelty: 6, feasibility: 1 })).not.toEqual([]);
    expect(answerProblems({ relevance: 1, novelty: 0, feasibility: 1 })).not.toEqual([]);
    expect(answerProblems({ relevance: 1, novelty: 2.5, feasibility: 1 })).not.toEqual([]);
    expect(answerProblems({ relevance: 2, novelty: 3, feasibility: 1 })).not.toEqual([]);
    expect(answerProblems({ relevance: 1, novelty: 3, feasibility: -1 })).not.toEqual([]);
  });

  it("draftComplete mirrors the problem list", () => {
    expect(draftComplete(emptyDraft())).toBe(false);
    expect(draftComplete({ relevance: 0, novelty: 5, feasibility: 1 })).toBe(true);
    expect(draftComplete({ relevance: 0, novelty: 6, feasibility: 1 })).toBe(false);
  });
});

describe("SessionState", () => {
  it("walks ideas in session order", () => {
    const state = new SessionState(view());
    expect(state.total).toBe(3);
    expect(state.currentIdea?.key).toBe("k1");
    expect(state.currentPosition).toBe(1);
    state.markRated("k1");
    expect(state.currentIdea?.key).toBe("k2");
    expect(state.currentPosition).toBe(2);
  });

  it("resumes at the first unrated idea, not merely after the last rated one", () => {
    const state = new SessionState(view({ rated_keys: ["k2"] }));
    expect(state.ratedCount).toBe(1);
    expect(state.currentIdea?.key).toBe("k1");
    state.markRated("k1");
    expect(state.currentIdea?.key).toBe("k3");
  });

  it("never double-counts a repeated mark", () => {
    const state = new SessionState(view());
    expect(state.markRated("k1")).toBe(true);
    expect(state.markRated("k1")).toBe(false);
    expect(state.ratedCount).toBe(1);
    expect(state.complete).toBe(false);
  });

  it("reports completion once every idea is rated", () => {
    const state = new SessionState(view({ rated_keys: ["k1", "k2"] }));
    expect(state.complete).toBe(false);
    state.markRated("k3");
    expect(state.complete).toBe(true);
    expect(state.currentIdea).toBeNull();
    expect(state.ratedCount).toBe(3);
  });
});
