// API payload shapes, mirroring the service's JSON responses.

export interface TurnReply {
  turn_id: string;
  text: string;
  tags: string[];
  primary_factor: string;
}

export interface TraceHit {
  record_id: string;
  collection: string;
  text: string;
  importance: number;
  s_similarity: number;
  s_importance: number;
  s_recency: number;
  s_rank: number;
}

export interface PlanStep {
  description: string;
  status: "Pending" | "Done";
}

export interface TracePlan {
  objective: string;
  kind: string;
  revision: number;
  steps: PlanStep[];
}

export interface TraceAction {
  step_index: number;
  directive: string;
  evaluation_note: string;
}

export interface TraceView {
  turn_id: string;
  user_id: string;
  timestamp: number;
  stage_ms: Record<string, number>;
  tags: string[];
  primary_factor: string;
  plan: TracePlan;
  action: TraceAction;
  queries: { aspect: string; target: string }[];
  hits: TraceHit[];
  reporter_text: string;
  rendered_prompt: string;
  response: string;
  caption: string;
  stale_caption: boolean;
}

export interface ProfileRevision {
  timestamp: number;
  prior_text: string;
  prior_confidence: number;
  cause: string;
}

export interface ProfileView {
  id: string;
  aspect_text: string;
  confidence: number;
  revisions: ProfileRevision[];
}

export interface MemoryRecordView {
  id: string;
  collection: string;
  text: string;
  index_keys: string[];
  importance: number;
  created_at: number;
  updated_at: number;
  meta: Record<string, unknown>;
}

export interface MemoryPage {
  user_id: string;
  collection: string;
  page: number;
  total: number;
  records: MemoryRecordView[];
}

export interface AblationFlags {
  use_profile: boolean;
  use_history: boolean;
  use_realtime: boolean;
}

export interface TurnEvent {
  turn_id: string;
  text: string;
  tags: string[];
  primary_factor: string;
}

export interface RolloverEvent {
  day: string;
  events: number;
  summaries: number;
  distill: Record<string, number>;
}
