// Event-stream subscription with a visible connection state; the SSE
// channel is the only push path from the service to the UI.

import type { RolloverEvent, TurnEvent } from "./types.js";

export type ConnectionState = "connecting" | "open" | "reconnecting";

export interface StreamHandlers {
  onTurn: (event: TurnEvent) => void;
  onRollover?: (event: RolloverEvent) => void;
  onState?: (state: ConnectionState) => void;
}

export interface EventSourceLike {
  addEventListener(type: string, listener: (event: MessageEvent) => void): void;
  close(): void;
  onopen: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

const defaultFactory: EventSourceFactory = (url) =>
  new EventSource(url) as unknown as EventSourceLike;

export function openEventStream(
  baseUrl: string,
  userId: string,
  token: string,
  handlers: StreamHandlers,
  factory: EventSourceFactory = defaultFactory,
): EventSourceLike {
  const url = `${baseUrl}/events/${encodeURIComponent(userId)}` +
    `?token=${encodeURIComponent(token)}`;
  handlers.onState?.("connecting");
  const source = factory(url);
  source.onopen = () => handlers.onState?.("open");
  source.onerror = () => handlers.onState?.("reconnecting");
  source.addEventListener("turn", (event) => {
    handlers.onTurn(JSON.parse(event.data) as TurnEvent);
  });
  source.addEventListener("rollover", (event) => {
    handlers.onRollover?.(JSON.parse(event.data) as RolloverEvent);
  });
  return source;
}
