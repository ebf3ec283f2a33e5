// Thin typed client over the HTTP JSON API. The UI never derives numbers
// itself; everything it shows comes back from these calls.

import type {
  AblationFlags,
  MemoryPage,
  ProfileView,
  TraceView,
  TurnReply,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    public token: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const reply = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!reply.ok) {
      throw new ApiError(reply.status, `${method} ${path} -> ${reply.status}`);
    }
    return (await reply.json()) as T;
  }

  async register(userId: string): Promise<{ user_id: string; token: string }> {
    const out = await this.request<{ user_id: string; token: string }>(
      "POST", "/users", { user_id: userId });
    this.token = out.token;
    return out;
  }

  sendFrame(userId: string, caption: string, timestamp?: number) {
    return this.request<{ seq: number }>("POST", "/frames", {
      user_id: userId, caption, timestamp,
    });
  }

  sendUtterance(userId: string, text: string, timestamp?: number) {
    return this.request<TurnReply>("POST", "/utterances", {
      user_id: userId, text, timestamp,
    });
  }

  rollover(userId: string, day?: string) {
    return this.request<Record<string, unknown>>("POST", "/rollover", {
      user_id: userId, day,
    });
  }

  setFlags(userId: string, flags: Partial<AblationFlags>) {
    return this.request<AblationFlags>("POST", "/config", {
      user_id: userId, ...flags,
    });
  }

  getTrace(turnId: string) {
    return this.request<TraceView>("GET", `/trace/${turnId}`);
  }

  getProfiles(userId: string) {
    return this.request<{ user_id: string; profiles: ProfileView[] }>(
      "GET", `/profiles?user_id=${encodeURIComponent(userId)}`);
  }

  getMemory(userId: string, collection: string, page: number = 0) {
    return this.request<MemoryPage>(
      "GET",
      `/memory?user_id=${encodeURIComponent(userId)}` +
        `&collection=${encodeURIComponent(collection)}&page=${page}`);
  }
}
