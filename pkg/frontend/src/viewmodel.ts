// Pure view model: (event stream) -> (state, commands to send).
// Keeping this a pure reducer makes replayed snapshot streams render
// deterministically and keeps every UI rule unit-testable.

import { Command, Snapshot, parseErrorReply, parseSnapshot, setTrust } from "./protocol.js";

export const STALE_AFTER_MS = 3000;

export type Connection = "connecting" | "open" | "closed";

export interface PendingRating {
  robotId: number;
  level: number;
  at: number;
}

export interface ViewState {
  connection: Connection;
  snapshot: Snapshot | null;
  lastSnapshotAt: number | null;
  pending: PendingRating[];
  queued: Command[];
  lastError: string | null;
  parseFailures: number;
}

export type ViewEvent =
  | { kind: "socket-open"; at: number }
  | { kind: "socket-closed"; at: number }
  | { kind: "message"; raw: string; at: number }
  | { kind: "rate"; robotId: number; level: number; at: number }
  | { kind: "command"; command: Command };

export interface Reduction {
  state: ViewState;
  send: Command[];
}

export function initialState(): ViewState {
  return {
    connection: "connecting",
    snapshot: null,
    lastSnapshotAt: null,
    pending: [],
    queued: [],
    lastError: null,
    parseFailures: 0,
  };
}

function reconcilePending(pending: PendingRating[], snapshot: Snapshot): PendingRating[] {
  return pending.filter((p) => {
    const robot = snapshot.robots.find((r) => r.id === p.robotId);
    return robot !== undefined && robot.trust_level !== p.level;
  });
}

export function reduce(state: ViewState, event: ViewEvent): Reduction {
  switch (event.kind) {
    case "socket-open": {
      // flush anything rated while offline
      const send = state.queued;
      return { state: { ...state, connection: "open", queued: [], lastError: null }, send };
    }
    case "socket-closed":
      return { state: { ...state, connection: "closed" }, send: [] };
    case "message": {
      const snapshot = parseSnapshot(event.raw);
      if (snapshot !== null) {
        return {
          state: {
            ...state,
            snapshot,
            lastSnapshotAt: event.at,
            pending: reconcilePending(state.pending, snapshot),
          },
          send: [],
        };
      }
      const error = parseErrorReply(event.raw);
      if (error !== null) {
        return { state: { ...state, lastError: error.reason }, send: [] };
      }
      // malformed frame: count it and carry on
      return { state: { ...state, parseFailures: state.parseFailures + 1 }, send: [] };
    }
    case "rate": {
      const command = setTrust(event.robotId, event.level);
      const pending = [
        ...state.pending.filter((p) => p.robotId !== event.robotId),
        { robotId: event.robotId, level: event.level, at: event.at },
      ];
      if (state.connection === "open") {
        return { state: { ...state, pending }, send: [command] };
      }
      return { state: { ...state, pending, queued: [...state.queued, command] }, send: [] };
    }
    case "command": {
      if (state.connection === "open") {
        return { state, send: [event.command] };
      }
      return { state: { ...state, queued: [...state.queued, event.command] }, send: [] };
    }
  }
}

export function isStale(state: ViewState, now: number): boolean {
  return state.lastSnapshotAt !== null && now - state.lastSnapshotAt > STALE_AFTER_MS;
}

/** A robot is shown as abandoned once every edge touching it carries zero quality. */
export function isAbandoned(snapshot: Snapshot, robotId: number): boolean {
  const robot = snapshot.robots.find((r) => r.id === robotId);
  if (robot === undefined || robot.trust_gain > 0) return false;
  const incident = snapshot.edges.filter((e) => e.i === robotId || e.j === robotId);
  return incident.every((e) => e.quality <= 0);
}

export function hasPendingRating(state: ViewState, robotId: number): boolean {
  return state.pending.some((p) => p.robotId === robotId);
}
