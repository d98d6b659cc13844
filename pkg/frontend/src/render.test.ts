import { describe, expect, it } from "vitest";

import { sampleSnapshot } from "./protocol.test.js";
import { Ctx2D, defaultOptions, renderScene, worldToScreen } from "./render.js";
import { ViewEvent, initialState, reduce } from "./viewmodel.js";

class RecorderCtx implements Ctx2D {
  fillStyle = "";
  strokeStyle = "";
  globalAlpha = 1;
  lineWidth = 1;
  font = "";
  ops: string[] = [];

  private log(op: string, ...args: unknown[]) {
    this.ops.push(`${op}(${args.map((a) => (typeof a === "number" ? a.toFixed(2) : String(a))).join(",")})`);
  }

  clearRect(x: number, y: number, w: number, h: number) { this.log("clearRect", x, y, w, h); }
  fillRect(x: number, y: number, w: number, h: number) { this.log("fillRect", x, y, w, h); }
  strokeRect(x: number, y: number, w: number, h: number) { this.log("strokeRect", x, y, w, h); }
  beginPath() { this.log("beginPath"); }
  moveTo(x: number, y: number) { this.log("moveTo", x, y); }
  lineTo(x: number, y: number) { this.log("lineTo", x, y); }
  arc(x: number, y: number, r: number, a0: number, a1: number) { this.log("arc", x, y, r, a0, a1); }
  closePath() { this.log("closePath"); }
  fill() { this.log("fill"); }
  stroke() { this.log("stroke"); }
  fillText(text: string, x: number, y: number) { this.log("fillText", text, x, y); }
  save() { this.log("save"); }
  restore() { this.log("restore"); }
  translate(x: number, y: number) { this.log("translate", x, y); }
  rotate(angle: number) { this.log("rotate", angle); }
}

function stateWith(events: ViewEvent[]) {
  let state = initialState();
  for (const event of events) {
    state = reduce(state, event).state;
  }
  return state;
}

describe("worldToScreen", () => {
  it("maps arena corners with a flipped y axis", () => {
    const o = defaultOptions(640, 640);
    expect(worldToScreen(0, 0, o)).toEqual([20, 620]);
    expect(worldToScreen(50, 50, o)).toEqual([620, 20]);
    expect(worldToScreen(25, 25, o)).toEqual([320, 320]);
  });
});

describe("renderScene", () => {
  const live: ViewEvent[] = [
    { kind: "socket-open", at: 0 },
    { kind: "message", raw: sampleSnapshot(), at: 100 },
  ];

  it("draws one glyph per robot and hides zero-quality edges", () => {
    const ctx = new RecorderCtx();
    const stats = renderScene(ctx, stateWith(live), defaultOptions(), 200);
    expect(stats.robots).toBe(2);
    expect(stats.edgesDrawn).toBe(0); // the only edge has quality 0
    expect(stats.badges).toBe(1); // robot 3 is fully cut off
    expect(stats.banners).toEqual([]);
  });

  it("draws edges with opacity proportional to quality", () => {
    const ctx = new RecorderCtx();
    const events: ViewEvent[] = [
      { kind: "socket-open", at: 0 },
      { kind: "message", raw: sampleSnapshot({ edges: [{ i: 0, j: 3, quality: 0.4 }] }), at: 100 },
    ];
    const stats = renderScene(ctx, stateWith(events), defaultOptions(), 200);
    expect(stats.edgesDrawn).toBe(1);
    expect(stats.badges).toBe(0);
  });

  it("shows the paused banner", () => {
    const ctx = new RecorderCtx();
    const events: ViewEvent[] = [
      { kind: "socket-open", at: 0 },
      { kind: "message", raw: sampleSnapshot({ paused: true }), at: 100 },
    ];
    const stats = renderScene(ctx, stateWith(events), defaultOptions(), 200);
    expect(stats.banners).toContain("PAUSED");
  });

  it("flags stale data and disconnects", () => {
    const ctx = new RecorderCtx();
    const events: ViewEvent[] = [...live, { kind: "socket-closed", at: 300 }];
    const stats = renderScene(ctx, stateWith(events), defaultOptions(), 10_000);
    expect(stats.banners).toContain("DISCONNECTED");
    expect(stats.banners).toContain("STALE DATA");
  });

  it("renders an empty state without a snapshot", () => {
    const ctx = new RecorderCtx();
    const stats = renderScene(ctx, initialState(), defaultOptions(), 0);
    expect(stats.robots).toBe(0);
    expect(ctx.ops.length).toBeGreaterThan(0); // frame still drawn
  });

  it("replayed snapshot streams produce identical draw commands", () => {
    const events: ViewEvent[] = [
      { kind: "socket-open", at: 0 },
      { kind: "message", raw: sampleSnapshot(), at: 100 },
      { kind: "message", raw: "malformed junk", at: 150 },
      { kind: "message", raw: sampleSnapshot({ t: 13.0, paused: true }), at: 200 },
    ];
    const a = new RecorderCtx();
    renderScene(a, stateWith(events), defaultOptions(), 300);
    const b = new RecorderCtx();
    renderScene(b, stateWith(events), defaultOptions(), 300);
    expect(b.ops).toEqual(a.ops);
  });
});
