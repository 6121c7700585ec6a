import type { RatingAnswers, RatingReceipt, SessionView } from "./types.js";

// The page is served by the same process that answers these endpoints,
// so requests are same-origin by default. Tests point the client at a
// server on another port.
let apiBase = "";

export function setApiBase(base: string): void {
  apiBase = base.replace(/\/+$/, "");
}

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(apiBase + path, init);
  let data: unknown = null;
  try {
    data = await res.json();
  } catch {
    // non-JSON body; report the status alone
  }
  if (!res.ok) {
    const detail =
      data && typeof data === "object" && typeof (data as { detail?: unknown }).detail === "string"
        ? ((data as { detail: string }).detail)
        : `request failed with status ${res.status}`;
    throw new ApiError(res.status, detail);
  }
  return data as T;
}

export function fetchSession(sessionId: string): Promise<SessionView> {
  return request<SessionView>(`/api/sessions/${encodeURIComponent(sessionId)}`);
}

export function submitRating(
  sessionId: string,
  ideaKey: string,
  answers: RatingAnswers,
): Promise<RatingReceipt> {
  return request<RatingReceipt>(`/api/sessions/${encodeURIComponent(sessionId)}/ratings`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({
      idea_key: ideaKey,
      relevance: answers.relevance,
      novelty: answers.novelty,
      feasibility: answers.feasibility,
    }),
  });
}
