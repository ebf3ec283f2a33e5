// Pure view-model builders and HTML renderers. Every number shown is the
// API's value verbatim (formatted, never recomputed); the only arithmetic
// here is the consistency check mark comparing the server's own components
// against its own total.

import type {
  MemoryRecordView,
  PlanStep,
  ProfileView,
  TraceHit,
  TracePlan,
  TraceView,
  TurnEvent,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatScore(value: number): string {
  return value.toFixed(3);
}

export interface HitRow {
  recordId: string;
  collection: string;
  text: string;
  sSimilarity: string;
  sImportance: string;
  sRecency: string;
  sRank: string;
  sumMatches: boolean;
}

export function hitRow(hit: TraceHit): HitRow {
  const sum = hit.s_similarity + hit.s_importance + hit.s_recency;
  return {
    recordId: hit.record_id,
    collection: hit.collection,
    text: hit.text,
    sSimilarity: formatScore(hit.s_similarity),
    sImportance: formatScore(hit.s_importance),
    sRecency: formatScore(hit.s_recency),
    sRank: formatScore(hit.s_rank),
    sumMatches: Math.abs(sum - hit.s_rank) < 1e-9,
  };
}

export function renderHitTable(hits: TraceHit[]): string {
  if (hits.length === 0) {
    return `<p class="empty">no retrieved documents</p>`;
  }
  const rows = hits.map(hitRow).map((row) => `
    <tr class="hit ${row.sumMatches ? "ok" : "bad"}" data-collection="${row.collection}">
      <td class="badge collection-${row.collection.toLowerCase()}">${row.collection}</td>
      <td class="text">${escapeHtml(row.text)}</td>
      <td class="num">${row.sSimilarity}</td>
      <td class="num">${row.sImportance}</td>
      <td class="num">${row.sRecency}</td>
      <td class="num rank">${row.sRank}</td>
      <td class="check">${row.sumMatches ? "&#10003;" : "&#10007;"}</td>
    </tr>`).join("");
  return `<table class="hits">
    <thead><tr><th>source</th><th>text</th><th>sim</th><th>imp</th><th>rec</th><th>rank</th><th>&Sigma;</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

export function renderPlan(plan: TracePlan): string {
  const steps = plan.steps.map((step: PlanStep, index: number) => `
    <li class="step ${step.status.toLowerCase()}">
      <span class="status">${step.status === "Done" ? "&#10003;" : "&#9675;"}</span>
      <span class="idx">${index + 1}.</span> ${escapeHtml(step.description)}
    </li>`).join("");
  return `<div class="plan">
    <div class="objective">${escapeHtml(plan.objective)}
      <span class="revision">rev ${plan.revision}</span></div>
    <ol class="steps">${steps}</ol>
  </div>`;
}

export function renderBadges(tags: string[]): string {
  return tags.map((tag) =>
    `<span class="tag tag-${tag.toLowerCase()}">[${escapeHtml(tag)}]</span>`).join(" ");
}

export interface MessageView {
  turnId: string;
  text: string;
  badges: string;
  tags: string[];
}

export function messageFromEvent(event: TurnEvent): MessageView {
  return {
    turnId: event.turn_id,
    text: event.text,
    badges: renderBadges(event.tags),
    tags: event.tags,
  };
}

export function renderMessage(view: MessageView, who: "user" | "system"): string {
  const badges = who === "system" ? `<div class="badges">${view.badges}</div>` : "";
  return `<div class="message ${who}" data-turn="${view.turnId}">
    <div class="bubble">${escapeHtml(view.text)}</div>${badges}
  </div>`;
}

export interface ProfileRow {
  id: string;
  aspect: string;
  confidence: string;
  barPercent: number;
  revisionLines: string[];
}

export function profileRow(profile: ProfileView): ProfileRow {
  return {
    id: profile.id,
    aspect: profile.aspect_text,
    confidence: profile.confidence.toFixed(2),
    barPercent: Math.round(profile.confidence * 100),
    revisionLines: profile.revisions.map((rev) =>
      `${rev.cause}: ${rev.prior_text || "(new)"} @ ${rev.prior_confidence.toFixed(2)}`),
  };
}

export function renderProfiles(profiles: ProfileView[]): string {
  if (profiles.length === 0) {
    return `<p class="empty">no profiles distilled yet</p>`;
  }
  return profiles.map(profileRow).map((row) => `
    <div class="profile" data-id="${row.id}">
      <div class="aspect">${escapeHtml(row.aspect)}</div>
      <div class="bar"><div class="fill" style="width:${row.barPercent}%"></div></div>
      <div class="confidence">${row.confidence}</div>
      <ul class="revisions">${row.revisionLines.map((line) =>
        `<li>${escapeHtml(line)}</li>`).join("")}</ul>
    </div>`).join("");
}

export function eventTriplet(record: MemoryRecordView): string {
  const meta = record.meta as { location?: string; activity?: string };
  const start = new Date(record.created_at * 1000).toISOString().slice(0, 19).replace("T", " ");
  if (meta.location && meta.activity) {
    return `<${start}, at the ${meta.location}, ${meta.activity}>`;
  }
  return record.text;
}

export function renderMemoryRows(records: MemoryRecordView[]): string {
  if (records.length === 0) {
    return `<p class="empty">this collection is empty</p>`;
  }
  return `<table class="memory"><tbody>${records.map((record) => `
    <tr data-id="${record.id}">
      <td class="triplet">${escapeHtml(
        record.collection === "Events" ? eventTriplet(record) : record.text)}</td>
      <td class="keys">${record.index_keys.map(escapeHtml).join("; ")}</td>
      <td class="imp">imp ${record.importance}</td>
    </tr>`).join("")}</tbody></table>`;
}
