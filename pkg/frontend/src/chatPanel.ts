// Chat panel: sends utterances, renders replies as they arrive on the
// event stream, badges each system message with its provenance tags.

import type { ApiClient } from "./api.js";
import { messageFromEvent, renderMessage } from "./render.js";
import type { TurnEvent } from "./types.js";

export class ChatPanel {
  private pendingScene = "";

  constructor(
    private api: ApiClient,
    private userId: string,
    private elements: {
      log: HTMLElement;
      input: HTMLInputElement;
      send: HTMLButtonElement;
      scene: HTMLSelectElement | null;
      state: HTMLElement | null;
    },
    private onTurnId?: (turnId: string) => void,
  ) {
    this.elements.input.addEventListener("input", () => this.syncSendDisabled());
    this.elements.send.addEventListener("click", () => void this.send());
    this.elements.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter" && !this.sendDisabled()) void this.send();
    });
    this.elements.scene?.addEventListener("change", () => {
      this.pendingScene = this.elements.scene?.value ?? "";
    });
    this.syncSendDisabled();
  }

  sendDisabled(): boolean {
    return this.elements.input.value.trim().length === 0;
  }

  private syncSendDisabled(): void {
    this.elements.send.disabled = this.sendDisabled();
  }

  setConnectionState(state: string): void {
    if (this.elements.state) {
      this.elements.state.textContent = state;
      this.elements.state.className = `state ${state}`;
    }
  }

  async send(): Promise<void> {
    const text = this.elements.input.value.trim();
    if (!text) return;
    if (this.pendingScene) {
      await this.api.sendFrame(this.userId, this.pendingScene);
      this.pendingScene = "";
    }
    this.elements.log.insertAdjacentHTML(
      "beforeend",
      renderMessage({ turnId: "", text, badges: "", tags: [] }, "user"));
    this.elements.input.value = "";
    this.syncSendDisabled();
    await this.api.sendUtterance(this.userId, text);
    // the reply itself arrives on the event stream
  }

  onTurnEvent(event: TurnEvent): void {
    const view = messageFromEvent(event);
    this.elements.log.insertAdjacentHTML("beforeend", renderMessage(view, "system"));
    this.elements.log.scrollTop = this.elements.log.scrollHeight;
    this.onTurnId?.(event.turn_id);
  }
}
