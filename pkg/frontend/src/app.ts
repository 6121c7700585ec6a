import { ApiError, fetchSession, submitRating } from "./api.js";
import { answerProblems, draftComplete, SessionState } from "./state.js";
import type { DraftAnswers } from "./state.js";

const PANELS = ["loadingPanel", "instructionsPanel", "ratingPanel", "summaryPanel", "errorPanel"];
const QUESTION_NAMES = ["relevance", "novelty", "feasibility"];

/** The rating link looks like /rate/<session-id>; anything else is not a session. */
export function sessionIdFromPath(pathname: string): string | null {
  const match = /^\/rate\/([^/]+)\/?$/.exec(pathname);
  if (!match) {
    return null;
  }
  return decodeURIComponent(match[1]);
}

export class IdeaRatingApp {
  private sessionId: string | null;
  private state: SessionState | null = null;
  private busy = false;
  private retryAction: (() => void) | null = null;

  constructor() {
    this.sessionId = sessionIdFromPath(window.location.pathname);
    this.initializeEventListeners();
  }

  private getElement(id: string) {
    const element = document.getElementById(id);
    if (!element) {
      console.error(`Element with id '${id}' not found`);
    }
    return element;
  }

  private initializeEventListeners() {
    this.getElement("startButton")?.addEventListener("click", () => this.startRating());
    this.getElement("submitButton")?.addEventListener("click", () => {
      void this.handleSubmit();
    });
    this.getElement("retryButton")?.addEventListener("click", () => {
      this.hideRetryBanner();
      this.retryAction?.();
    });
    for (const name of QUESTION_NAMES) {
      document
        .querySelectorAll<HTMLInputElement>(`input[name="${name}"]`)
        .forEach((input) => input.addEventListener("change", () => this.updateSubmitState()));
    }
  }

  async init(): Promise<void> {
    this.hideRetryBanner();
    if (!this.sessionId) {
      this.showError(
        "This page needs a rating link of the form /rate/<session-id>. " +
          "Please open the exact link you were given.",
      );
      return;
    }
    this.showInterface("loadingPanel");
    let view;
    try {
      view = await fetchSession(this.sessionId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.showError(`No session with id '${this.sessionId}' exists. Check your rating link.`);
      } else if (error instanceof ApiError) {
        this.showError(error.message);
      } else {
        this.showRetryBanner("Could not reach the rating service.", () => {
          void this.init();
        });
      }
      return;
    }
    this.state = new SessionState(view);
    this.renderProgress();
    if (this.state.complete) {
      this.renderSummary();
    } else {
      this.renderInstructions();
    }
  }

  private startRating() {
    if (!this.state || this.state.complete) {
      return;
    }
    this.renderCurrentIdea();
    this.showInterface("ratingPanel");
  }

  private async handleSubmit(): Promise<void> {
    if (!this.state || !this.sessionId || this.busy) {
      return;
    }
    const idea = this.state.currentIdea;
    if (!idea) {
      return;
    }
    const draft = this.readDraft();
    const problems = answerProblems(draft);
    const formMessage = this.getElement("formMessage");
    if (problems.length > 0) {
      // normally unreachable: the submit button stays disabled until the
      // draft is complete, but keep the form honest if it is reached
      if (formMessage) formMessage.textContent = `Please ${problems.join("; ")}.`;
      return;
    }
    if (formMessage) formMessage.textContent = "";
    const button = this.getElement("submitButton") as HTMLButtonElement | null;
    this.busy = true;
    if (button) button.disabled = true;
    try {
      await submitRating(this.sessionId, idea.key, {
        relevance: draft.relevance as number,
        novelty: draft.novelty as number,
        feasibility: draft.feasibility as number,
      });
      this.state.markRated(idea.key);
      this.setStatusNote("Saved.");
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // someone (or an earlier tab) already rated this idea; the set
        // semantics of markRated keep the count from inflating
        this.state.markRated(idea.key);
        this.setStatusNote("This idea already had a rating; moving on.");
      } else if (error instanceof ApiError) {
        if (formMessage) formMessage.textContent = error.message;
        if (button) button.disabled = !draftComplete(this.readDraft());
        return;
      } else {
        this.showRetryBanner("Could not reach the rating service. Your answers are kept.", () => {
          void this.handleSubmit();
        });
        if (button) button.disabled = !draftComplete(this.readDraft());
        return;
      }
    } finally {
      this.busy = false;
    }
    this.renderProgress();
    if (this.state.complete) {
      this.renderSummary();
    } else {
      this.renderCurrentIdea();
    }
  }

  private readDraft(): DraftAnswers {
    return {
      relevance: this.readChecked("relevance"),
      novelty: this.readChecked("novelty"),
      feasibility: this.readChecked("feasibility"),
    };
  }

  private readChecked(name: string): number | null {
    const checked = document.querySelector<HTMLInputElement>(`input[name="${name}"]:checked`);
    if (!checked) {
      return null;
    }
    const value = Number(checked.value);
    return Number.isFinite(value) ? value : null;
  }

  private updateSubmitState() {
    const button = this.getElement("submitButton") as HTMLButtonElement | null;
    if (button && !this.busy) {
      button.disabled = !draftComplete(this.readDraft());
    }
  }

  private renderInstructions() {
    if (!this.state) return;
    const title = this.getElement("paperTitle");
    const abstract = this.getElement("paperAbstract");
    const count = this.getElement("ideaCount");
    if (title) title.textContent = this.state.title;
    if (abstract) abstract.textContent = this.state.abstract;
    if (count) {
      const remaining = this.state.total - this.state.ratedCount;
      const noun = remaining === 1 ? "idea" : "ideas";
      count.textContent =
        this.state.ratedCount > 0
          ? `${remaining} ${noun} left to rate (${this.state.ratedCount} already saved).`
          : `${remaining} ${noun} to rate.`;
    }
    this.showInterface("instructionsPanel");
  }

  private renderCurrentIdea() {
    if (!this.state) return;
    const idea = this.state.currentIdea;
    if (!idea) {
      this.renderSummary();
      return;
    }
    const heading = this.getElement("ideaHeading");
    const text = this.getElement("ideaText");
    if (heading) {
      heading.textContent = `Idea ${this.state.currentPosition} of ${this.state.total}`;
    }
    if (text) text.textContent = idea.text;
    document
      .querySelectorAll<HTMLInputElement>("#ratingForm input[type=radio]")
      .forEach((input) => {
        input.checked = false;
      });
    const formMessage = this.getElement("formMessage");
    if (formMessage) formMessage.textContent = "";
    const button = this.getElement("submitButton") as HTMLButtonElement | null;
    if (button) button.disabled = true;
  }

  private renderSummary() {
    if (!this.state) return;
    const panel = this.getElement("summaryPanel");
    if (panel) {
      const noun = this.state.total === 1 ? "idea" : "ideas";
      panel.innerHTML = `
        <h2>All done</h2>
        <p>
          All ${this.state.total} ${noun} for
          <strong>${this.escapeHtml(this.state.title)}</strong> are rated.
        </p>
        <p>Ratings are final once stored, so there is nothing left to do here. Thank you!</p>
      `;
    }
    this.showInterface("summaryPanel");
  }

  private renderProgress() {
    if (!this.state) return;
    const section = this.getElement("progressSection");
    const text = this.getElement("progressText");
    const bar = this.getElement("progressBar");
    const rated = this.state.ratedCount;
    const total = this.state.total;
    if (section) section.classList.remove("hidden");
    if (text) text.textContent = `${rated} / ${total} rated`;
    if (bar) {
      const percent = total > 0 ? (rated / total) * 100 : 0;
      (bar as HTMLElement).style.width = `${percent}%`;
    }
  }

  private setStatusNote(message: string) {
    const note = this.getElement("statusNote");
    if (note) note.textContent = message;
  }

  private showError(message: string) {
    const element = this.getElement("errorMessage");
    if (element) element.textContent = message;
    this.showInterface("errorPanel");
  }

  private showRetryBanner(message: string, action: () => void) {
    this.retryAction = action;
    const banner = this.getElement("retryBanner");
    const text = this.getElement("retryMessage");
    if (text) text.textContent = message;
    if (banner) banner.classList.remove("hidden");
  }

  private hideRetryBanner() {
    const banner = this.getElement("retryBanner");
    if (banner) banner.classList.add("hidden");
  }

  private showInterface(panelId: string) {
    PANELS.forEach((id) => {
      const element = document.getElementById(id);
      if (element) {
        element.classList.toggle("hidden", id !== panelId);
      }
    });
  }

  private escapeHtml(text: string) {
    const div = document.createElement("div");
    div.textContent = text;
    return div.innerHTML;
  }
}
