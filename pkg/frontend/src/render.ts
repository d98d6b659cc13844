// Canvas renderer for the arena view. Takes a minimal 2D-context surface so
// tests can drive it with a recorder instead of a browser canvas.

import { Snapshot } from "./protocol.js";
import { ViewState, isAbandoned, isStale } from "./viewmodel.js";

export interface Ctx2D {
  fillStyle: string;
  strokeStyle: string;
  globalAlpha: number;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(angle: number): void;
}

export interface RenderOptions {
  width: number;
  height: number;
  arenaWidth: number;
  arenaHeight: number;
  margin: number;
}

export interface RenderStats {
  robots: number;
  edgesDrawn: number;
  badges: number;
  banners: string[];
}

export const TRUST_COLORS: Record<number, string> = {
  1: "#c0392b",
  2: "#e67e22",
  3: "#d4af37",
  4: "#7dac44",
  5: "#27ae60",
};

export function defaultOptions(width = 640, height = 640): RenderOptions {
  return { width, height, arenaWidth: 50, arenaHeight: 50, margin: 20 };
}

export function worldToScreen(x: number, y: number, o: RenderOptions): [number, number] {
  const sx = o.margin + (x / o.arenaWidth) * (o.width - 2 * o.margin);
  // screen y grows downward; world y grows upward
  const sy = o.height - o.margin - (y / o.arenaHeight) * (o.height - 2 * o.margin);
  return [sx, sy];
}

function drawRobotGlyph(ctx: Ctx2D, sx: number, sy: number, headingDeg: number, color: string): void {
  ctx.save();
  ctx.translate(sx, sy);
  ctx.rotate((-headingDeg * Math.PI) / 180); // screen y is flipped
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.moveTo(8, 0);
  ctx.lineTo(-5, 5);
  ctx.lineTo(-5, -5);
  ctx.closePath();
  ctx.fill();
  ctx.restore();
}

function drawBanner(ctx: Ctx2D, text: string, o: RenderOptions, slot: number): void {
  ctx.save();
  ctx.globalAlpha = 0.85;
  ctx.fillStyle = "#222222";
  ctx.fillRect(o.margin, o.margin + slot * 28, 150, 22);
  ctx.fillStyle = "#ffffff";
  ctx.font = "14px sans-serif";
  ctx.fillText(text, o.margin + 8, o.margin + slot * 28 + 16);
  ctx.restore();
}

function drawScene(ctx: Ctx2D, snapshot: Snapshot, o: RenderOptions): { edges: number; badges: number } {
  // targets and reference point
  const metrics = snapshot.metrics_so_far;
  if (typeof metrics.target_x === "number" && typeof metrics.target_y === "number") {
    const [tx, ty] = worldToScreen(metrics.target_x, metrics.target_y, o);
    ctx.strokeStyle = "#888888";
    ctx.globalAlpha = 1;
    ctx.beginPath();
    ctx.arc(tx, ty, 10, 0, 2 * Math.PI);
    ctx.stroke();
  }
  const [lx, ly] = worldToScreen(snapshot.leader.x, snapshot.leader.y, o);
  ctx.strokeStyle = "#5b8dd9";
  ctx.beginPath();
  ctx.moveTo(lx - 6, ly);
  ctx.lineTo(lx + 6, ly);
  ctx.moveTo(lx, ly - 6);
  ctx.lineTo(lx, ly + 6);
  ctx.stroke();

  // comm edges, opacity tracking quality; zero-quality edges are invisible
  const byId = new Map(snapshot.robots.map((r) => [r.id, r]));
  let edges = 0;
  for (const edge of snapshot.edges) {
    if (edge.quality <= 0) continue;
    const a = byId.get(edge.i);
    const b = byId.get(edge.j);
    if (a === undefined || b === undefined) continue;
    const [ax, ay] = worldToScreen(a.x, a.y, o);
    const [bx, by] = worldToScreen(b.x, b.y, o);
    ctx.globalAlpha = Math.min(1, edge.quality);
    ctx.strokeStyle = "#4a4a4a";
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
    edges += 1;
  }
  ctx.globalAlpha = 1;

  // robots, colored by trust level, badge ring once fully cut off
  let badges = 0;
  for (const robot of snapshot.robots) {
    const [sx, sy] = worldToScreen(robot.x, robot.y, o);
    const color = TRUST_COLORS[robot.trust_level] ?? "#999999";
    drawRobotGlyph(ctx, sx, sy, robot.heading_deg, color);
    if (isAbandoned(snapshot, robot.id)) {
      ctx.strokeStyle = TRUST_COLORS[1] ?? "#c0392b";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(sx, sy, 12, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.lineWidth = 1;
      badges += 1;
    }
    ctx.fillStyle = "#dddddd";
    ctx.font = "11px sans-serif";
    ctx.fillText(String(robot.id), sx + 10, sy - 10);
  }
  return { edges, badges };
}

export function renderScene(ctx: Ctx2D, state: ViewState, o: RenderOptions, now: number): RenderStats {
  ctx.clearRect(0, 0, o.width, o.height);
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, o.width, o.height);
  ctx.strokeStyle = "#3a3f45";
  ctx.strokeRect(o.margin, o.margin, o.width - 2 * o.margin, o.height - 2 * o.margin);

  const banners: string[] = [];
  let edges = 0;
  let badges = 0;
  if (state.snapshot !== null) {
    const drawn = drawScene(ctx, state.snapshot, o);
    edges = drawn.edges;
    badges = drawn.badges;
    if (state.snapshot.paused) banners.push("PAUSED");
    if (state.snapshot.done) banners.push("RUN COMPLETE");
  }
  if (state.connection === "closed") banners.push("DISCONNECTED");
  if (isStale(state, now)) banners.push("STALE DATA");
  if (state.lastError !== null) banners.push(`SERVER: ${state.lastError}`);
  banners.forEach((text, slot) => drawBanner(ctx, text, o, slot));

  return {
    robots: state.snapshot === null ? 0 : state.snapshot.robots.length,
    edgesDrawn: edges,
    badges,
    banners,
  };
}
