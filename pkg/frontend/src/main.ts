// App shell: one session per tab, the event stream as the sole push channel.

import { ApiClient } from "./api.js";
import { ChatPanel } from "./chatPanel.js";
import { MemoryBrowser } from "./memoryBrowser.js";
import { openEventStream } from "./sse.js";
import { TraceInspector } from "./traceInspector.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function start(): Promise<void> {
  const baseUrl = (el<HTMLInputElement>("base-url").value || "http://127.0.0.1:8700")
    .replace(/\/$/, "");
  const userId = el<HTMLInputElement>("user-id").value || "webui";
  const api = new ApiClient(baseUrl);
  const existing = el<HTMLInputElement>("token").value.trim();
  if (existing) {
    api.token = existing;
  } else {
    const registered = await api.register(userId);
    el<HTMLInputElement>("token").value = registered.token;
  }

  const inspector = new TraceInspector(api, userId, {
    container: el("trace-view"),
    toggles: {
      use_profile: el<HTMLInputElement>("toggle-profile"),
      use_history: el<HTMLInputElement>("toggle-history"),
      use_realtime: el<HTMLInputElement>("toggle-realtime"),
    },
  });
  const browser = new MemoryBrowser(api, userId, {
    container: el("memory-view"),
    tabs: el("memory-tabs"),
    pager: {
      prev: el<HTMLButtonElement>("page-prev"),
      next: el<HTMLButtonElement>("page-next"),
      label: el("page-label"),
    },
  });
  const chat = new ChatPanel(api, userId, {
    log: el("chat-log"),
    input: el<HTMLInputElement>("chat-input"),
    send: el<HTMLButtonElement>("chat-send"),
    scene: el<HTMLSelectElement>("scene-select"),
    state: el("conn-state"),
  }, (turnId) => {
    void inspector.show(turnId);
    void browser.refresh();
  });

  openEventStream(baseUrl, userId, api.token, {
    onTurn: (event) => chat.onTurnEvent(event),
    onRollover: () => void browser.refresh(),
    onState: (state) => chat.setConnectionState(state),
  });

  el<HTMLButtonElement>("rollover-btn").addEventListener("click", () => {
    void api.rollover(userId).then(() => browser.refresh());
  });
  await browser.refresh();
}

el<HTMLButtonElement>("connect-btn").addEventListener("click", () => {
  void start().catch((error) => {
    el("conn-state").textContent = `error: ${String(error)}`;
  });
});
