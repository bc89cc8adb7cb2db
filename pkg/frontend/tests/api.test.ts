import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function mockFetch(status: number, body: unknown) {
  return vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    statusText: `status ${status}`,
    json: async () => body,
  })) as unknown as typeof fetch;
}

describe("ApiClient", () => {
  it("creates a session and returns its id", async () => {
    const fetchImpl = mockFetch(200, { session_id: "abc123" });
    const api = new ApiClient("http://svc", fetchImpl);
    const id = await api.createSession({ mode: "human", generations: 5 });
    expect(id).toBe("abc123");
    const [url, init] = (fetchImpl as any).mock.calls[0];
    expect(url).toBe("http://svc/sessions");
    expect(JSON.parse(init.body)).toEqual({ mode: "human", generations: 5 });
  });

  it("submits choices as JSON bodies", async () => {
    const fetchImpl = mockFetch(200, { accepted: true, provenance: "cas" });
    const api = new ApiClient("", fetchImpl);
    const out = await api.submitChoice("sid", { proposal_index: 0 });
    expect(out.provenance).toBe("cas");
    const [url, init] = (fetchImpl as any).mock.calls[0];
    expect(url).toBe("/sessions/sid/choice");
    expect(init.method).toBe("POST");
  });

  it("surfaces server error details as ApiError", async () => {
    const fetchImpl = mockFetch(422, { detail: "concept already in the pool" });
    const api = new ApiClient("", fetchImpl);
    await expect(api.step("sid")).rejects.toMatchObject({
      status: 422,
      detail: "concept already in the pool",
    });
  });

  it("falls back to status text when the error body is not JSON", async () => {
    const fetchImpl = vi.fn(async () => ({
      ok: false,
      status: 500,
      statusText: "Internal Server Error",
      json: async () => {
        throw new Error("not json");
      },
    })) as unknown as typeof fetch;
    const api = new ApiClient("", fetchImpl);
    await expect(api.health()).rejects.toBeInstanceOf(ApiError);
    await expect(api.health()).rejects.toMatchObject({ detail: "Internal Server Error" });
  });

  it("unwraps the vocabulary labels", async () => {
    const api = new ApiClient("", mockFetch(200, { labels: ["a", "b"] }));
    expect(await api.vocabulary()).toEqual(["a", "b"]);
  });
});
