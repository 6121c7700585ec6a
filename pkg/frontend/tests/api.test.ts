import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, fetchSession, setApiBase, submitRating } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
  setApiBase("");
});

describe("fetchSession", () => {
  it("returns the parsed session view", async () => {
    const payload = { session_id: "abc", ideas: [] };
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(200, payload));
    vi.stubGlobal("fetch", fetchMock);
    const view = await fetchSession("abc");
    expect(view.session_id).toBe("abc");
    expect(fetchMock).toHaveBeenCalledWith("/api/sessions/abc", undefined);
  });

  it("escapes the session id in the path", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(200, {}));
    vi.stubGlobal("fetch", fetchMock);
    await fetchSession("a/b c");
    expect(fetchMock).toHaveBeenCalledWith("/api/sessions/a%2Fb%20c", undefined);
  });

  it("maps an error body onto ApiError with the server's detail", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(jsonResponse(404, { detail: "unknown session 'abc'" })),
    );
    const error = await fetchSession("abc").catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(404);
    expect((error as ApiError).message).toBe("unknown session 'abc'");
  });

  it("falls back to the status code when the body is not JSON", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(new Response("gateway timeout", { status: 502 })),
    );
    const error = await fetchSession("abc").catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).message).toContain("502");
  });
});

describe("submitRating", () => {
  it("POSTs the three answers with the idea key", async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse(201, {
        status: "stored",
        idea_key: "k1",
        session_status: "open",
        progress: { rated: 1, total: 3 },
      }),
    );
    vi.stubGlobal("fetch", fetchMock);
    const receipt = await submitRating("abc", "k1", { relevance: 1, novelty: 4, feasibility: 0 });
    expect(receipt.progress.rated).toBe(1);
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("/api/sessions/abc/ratings");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body)).toEqual({
      idea_key: "k1",
      relevance: 1,
      novelty: 4,
      feasibility: 0,
    });
  });

  it("surfaces a 409 as ApiError so the app can advance", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(jsonResponse(409, { detail: "already rated" })),
    );
    const error = await submitRating("abc", "k1", {
      relevance: 1,
      novelty: 1,
      feasibility: 1,
    }).catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(409);
  });
});

describe("setApiBase", () => {
  it("prefixes requests and tolerates a trailing slash", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(200, {}));
    vi.stubGlobal("fetch", fetchMock);
    setApiBase("http://127.0.0.1:9999/");
    await fetchSession("abc");
    expect(fetchMock).toHaveBeenCalledWith("http://127.0.0.1:9999/api/sessions/abc", undefined);
  });
});
