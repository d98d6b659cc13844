// Wire protocol v1: snapshots in, trust/mission commands out.

export const PROTOCOL_VERSION = 1;

export type Role = "leader" | "follower";

export interface RobotView {
  id: number;
  x: number;
  y: number;
  z: number;
  heading_deg: number;
  speed: number;
  role: Role;
  trust_level: number;
  trust_gain: number;
}

export interface EdgeView {
  i: number;
  j: number;
  quality: number;
}

export interface LeaderView {
  x: number;
  y: number;
  target_index: number;
}

export interface Snapshot {
  v: number;
  type: "snapshot";
  t: number;
  paused: boolean;
  done: boolean;
  robots: RobotView[];
  edges: EdgeView[];
  leader: LeaderView;
  metrics_so_far: Record<string, number>;
}

export interface ErrorReply {
  v: number;
  type: "error";
  reason: string;
}

export type Command =
  | { v: 1; type: "set_trust"; robot_id: number; level: number }
  | { v: 1; type: "clear_trust_override"; robot_id: number }
  | { v: 1; type: "pause" }
  | { v: 1; type: "resume" }
  | { v: 1; type: "switch_target"; index: number };

function isNum(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value);
}

function isRobot(value: unknown): value is RobotView {
  if (typeof value !== "object" || value === null) return false;
  const r = value as Record<string, unknown>;
  return (
    isNum(r.id) &&
    isNum(r.x) &&
    isNum(r.y) &&
    isNum(r.z) &&
    isNum(r.heading_deg) &&
    isNum(r.speed) &&
    (r.role === "leader" || r.role === "follower") &&
    isNum(r.trust_level) &&
    r.trust_level >= 1 &&
    r.trust_level <= 5 &&
    isNum(r.trust_gain)
  );
}

function isEdge(value: unknown): value is EdgeView {
  if (typeof value !== "object" || value === null) return false;
  const e = value as Record<string, unknown>;
  return isNum(e.i) && isNum(e.j) && isNum(e.quality);
}

/** Strictly validate one inbound frame; returns null on anything malformed. */
export function parseSnapshot(raw: string): Snapshot | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const m = msg as Record<string, unknown>;
  if (m.v !== PROTOCOL_VERSION || m.type !== "snapshot") return null;
  if (!isNum(m.t) || typeof m.paused !== "boolean") return null;
  if (!Array.isArray(m.robots) || !m.robots.every(isRobot)) return null;
  if (!Array.isArray(m.edges) || !m.edges.every(isEdge)) return null;
  const leader = m.leader as Record<string, unknown> | null;
  if (
    typeof leader !== "object" ||
    leader === null ||
    !isNum(leader.x) ||
    !isNum(leader.y) ||
    !isNum(leader.target_index)
  ) {
    return null;
  }
  const metrics =
    typeof m.metrics_so_far === "object" && m.metrics_so_far !== null
      ? (m.metrics_so_far as Record<string, number>)
      : {};
  return {
    v: PROTOCOL_VERSION,
    type: "snapshot",
    t: m.t,
    paused: m.paused,
    done: m.done === true,
    robots: m.robots as RobotView[],
    edges: m.edges as EdgeView[],
    leader: leader as unknown as LeaderView,
    metrics_so_far: metrics,
  };
}

export function parseErrorReply(raw: string): ErrorReply | null {
  try {
    const msg = JSON.parse(raw) as Record<string, unknown>;
    if (msg && msg.v === PROTOCOL_VERSION && msg.type === "error" && typeof msg.reason === "string") {
      return { v: PROTOCOL_VERSION, type: "error", reason: msg.reason };
    }
  } catch {
    /* malformed server reply falls through to null */
  }
  return null;
}

export function setTrust(robotId: number, level: number): Command {
  if (!Number.isInteger(level) || level < 1 || level > 5) {
    throw new RangeError(`trust level must be 1..5, got ${level}`);
  }
  return { v: 1, type: "set_trust", robot_id: robotId, level };
}

export function clearTrust(robotId: number): Command {
  return { v: 1, type: "clear_trust_override", robot_id: robotId };
}

export function pause(): Command {
  return { v: 1, type: "pause" };
}

export function resume(): Command {
  return { v: 1, type: "resume" };
}

export function switchTarget(index: number): Command {
  if (!Number.isInteger(index) || index < 0) {
    throw new RangeError(`target index must be >= 0, got ${index}`);
  }
  return { v: 1, type: "switch_target", index };
}
