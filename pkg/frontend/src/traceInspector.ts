// Trace inspector: rank-score table straight from the API, the strategy
// plan with step statuses, and live ablation toggles for subsequent turns.

import type { ApiClient } from "./api.js";
import { renderBadges, renderHitTable, renderPlan, escapeHtml } from "./render.js";
import type { AblationFlags, TraceView } from "./types.js";

export class TraceInspector {
  constructor(
    private api: ApiClient,
    private userId: string,
    private elements: {
      container: HTMLElement;
      toggles: {
        use_profile: HTMLInputElement;
        use_history: HTMLInputElement;
        use_realtime: HTMLInputElement;
      } | null;
    },
  ) {
    if (this.elements.toggles) {
      for (const name of ["use_profile", "use_history", "use_realtime"] as const) {
        this.elements.toggles[name].addEventListener("change", () =>
          void this.pushFlags());
      }
    }
  }

  private async pushFlags(): Promise<AblationFlags | undefined> {
    if (!this.elements.toggles) return undefined;
    return this.api.setFlags(this.userId, {
      use_profile: this.elements.toggles.use_profile.checked,
      use_history: this.elements.toggles.use_history.checked,
      use_realtime: this.elements.toggles.use_realtime.checked,
    });
  }

  async show(turnId: string): Promise<TraceView> {
    const trace = await this.api.getTrace(turnId);
    this.elements.container.innerHTML = renderTrace(trace);
    return trace;
  }
}

export function renderTrace(trace: TraceView): string {
  const timing = Object.entries(trace.stage_ms)
    .map(([stage, ms]) => `${stage} ${ms.toFixed(1)}ms`).join(" / ");
  return `<div class="trace" data-turn="${trace.turn_id}">
    <div class="head">
      <span class="turn-id">${escapeHtml(trace.turn_id)}</span>
      <span class="factors">${renderBadges(trace.tags)}</span>
      <span class="primary">primary: ${escapeHtml(trace.primary_factor)}</span>
    </div>
    <div class="timing">${escapeHtml(timing)}</div>
    ${renderPlan(trace.plan)}
    <div class="action">next: ${escapeHtml(trace.action.directive)}
      <span class="note">${escapeHtml(trace.action.evaluation_note)}</span></div>
    <div class="queries">${trace.queries.map((query) =>
      `<span class="query">${escapeHtml(query.aspect)} &rarr; ${query.target}</span>`)
      .join(" ")}</div>
    ${renderHitTable(trace.hits)}
    <details class="prompt"><summary>rendered prompt</summary>
      <pre>${escapeHtml(trace.rendered_prompt)}</pre></details>
    <div class="response">${escapeHtml(trace.response)}</div>
  </div>`;
}
