// The API client is a thin request shaper: right verbs, right paths,
// bearer token on every call, errors surfaced with status codes.

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

interface Recorded {
  url: string;
  method?: string;
  headers: Record<string, string>;
  body?: string;
}

function recordingFetch(replies: Record<string, unknown> = {}) {
  const calls: Recorded[] = [];
  const impl = async (url: string, init?: RequestInit) => {
    calls.push({
      url,
      method: init?.method,
      headers: (init?.headers ?? {}) as Record<string, string>,
      body: init?.body as string | undefined,
    });
    const body = replies[url.replace(/^http:\/\/api/, "").split("?")[0]] ?? {};
    return new Response(JSON.stringify(body), { status: 200 });
  };
  return { calls, impl };
}

describe("api client", () => {
  it("registers and stores the token", async () => {
    const { calls, impl } = recordingFetch({
      "/users": { user_id: "u", token: "tok-1" },
    });
    const api = new ApiClient("http://api", "", impl);
    await api.register("u");
    expect(api.token).toBe("tok-1");
    expect(calls[0].method).toBe("POST");
    expect(calls[0].body).toBe(JSON.stringify({ user_id: "u" }));
  });

  it("sends the bearer token on every request", async () => {
    const { calls, impl } = recordingFetch();
    const api = new ApiClient("http://api", "tok-9", impl);
    await api.sendUtterance("u", "hello");
    await api.getMemory("u", "Events", 2);
    for (const call of calls) {
      expect(call.headers["Authorization"]).toBe("Bearer tok-9");
    }
    expect(calls[1].url).toBe("http://api/memory?user_id=u&collection=Events&page=2");
  });

  it("posts ablation toggles to /config", async () => {
    const { calls, impl } = recordingFetch();
    const api = new ApiClient("http://api", "t", impl);
    await api.setFlags("u", { use_profile: false });
    expect(calls[0].url).toBe("http://api/config");
    expect(JSON.parse(calls[0].body!)).toEqual({ user_id: "u", use_profile: false });
  });

  it("fetches traces by turn id", async () => {
    const { calls, impl } = recordingFetch();
    const api = new ApiClient("http://api", "t", impl);
    await api.getTrace("u-t00004");
    expect(calls[0].url).toBe("http://api/trace/u-t00004");
    expect(calls[0].method).toBe("GET");
  });

  it("surfaces http errors with their status", async () => {
    const impl = async () => new Response("forbidden", { status: 403 });
    const api = new ApiClient("http://api", "t", impl);
    await expect(api.getProfiles("other")).rejects.toThrowError(ApiError);
    await expect(api.getProfiles("other")).rejects.toMatchObject({ status: 403 });
  });
});
