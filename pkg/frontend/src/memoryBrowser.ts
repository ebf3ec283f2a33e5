// Memory browser: paginated events / summaries / profiles views.

import type { ApiClient } from "./api.js";
import { renderMemoryRows, renderProfiles } from "./render.js";

export class MemoryBrowser {
  private page = 0;
  private collection = "Events";

  constructor(
    private api: ApiClient,
    private userId: string,
    private elements: {
      container: HTMLElement;
      tabs: HTMLElement | null;
      pager: { prev: HTMLButtonElement; next: HTMLButtonElement; label: HTMLElement } | null;
    },
  ) {
    this.elements.tabs?.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      const tab = target.dataset?.collection;
      if (tab) {
        this.collection = tab;
        this.page = 0;
        void this.refresh();
      }
    });
    this.elements.pager?.prev.addEventListener("click", () => {
      this.page = Math.max(0, this.page - 1);
      void this.refresh();
    });
    this.elements.pager?.next.addEventListener("click", () => {
      this.page += 1;
      void this.refresh();
    });
  }

  async refresh(): Promise<void> {
    if (this.collection === "Profiles") {
      const reply = await this.api.getProfiles(this.userId);
      this.elements.container.innerHTML = renderProfiles(reply.profiles);
      if (this.elements.pager) {
        this.elements.pager.label.textContent = `${reply.profiles.length} profiles`;
      }
      return;
    }
    const reply = await this.api.getMemory(this.userId, this.collection, this.page);
    this.elements.container.innerHTML = renderMemoryRows(reply.records);
    if (this.elements.pager) {
      this.elements.pager.label.textContent =
        `${this.collection} page ${reply.page} — ${reply.total} records`;
    }
  }
}
