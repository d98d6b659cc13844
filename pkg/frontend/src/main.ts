// Browser entry point: wires the socket client, canvas, and control panel.

import { ConsoleClient } from "./net.js";
import { clearTrust, pause, resume, switchTarget } from "./protocol.js";
import { Ctx2D, defaultOptions, renderScene } from "./render.js";
import { ViewState, hasPendingRating } from "./viewmodel.js";

function wsUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const token = params.get("token");
  const base = `${window.location.protocol === "https:" ? "wss" : "ws"}://${window.location.host}/ws`;
  return token === null ? base : `${base}?token=${encodeURIComponent(token)}`;
}

function buildPanel(client: ConsoleClient, panel: HTMLElement, state: ViewState): void {
  panel.textContent = "";
  const status = document.createElement("div");
  status.className = "status";
  status.textContent = `link: ${state.connection}` + (state.lastError ? ` | ${state.lastError}` : "");
  panel.appendChild(status);

  const mission = document.createElement("div");
  mission.className = "mission";
  const pauseButton = document.createElement("button");
  pauseButton.textContent = state.snapshot?.paused ? "resume" : "pause";
  pauseButton.onclick = () => client.command(state.snapshot?.paused ? resume() : pause());
  mission.appendChild(pauseButton);
  const retarget = document.createElement("button");
  const nextIndex = (state.snapshot?.leader.target_index ?? 0) + 1;
  retarget.textContent = `emergency retarget -> ${nextIndex}`;
  retarget.onclick = () => client.command(switchTarget(nextIndex));
  mission.appendChild(retarget);
  panel.appendChild(mission);

  for (const robot of state.snapshot?.robots ?? []) {
    const row = document.createElement("div");
    row.className = "robot-row";
    const label = document.createElement("span");
    const pending = hasPendingRating(state, robot.id) ? " (pending)" : "";
    label.textContent = `#${robot.id} ${robot.role} trust ${robot.trust_level}${pending} `;
    row.appendChild(label);
    for (let level = 1; level <= 5; level += 1) {
      const button = document.createElement("button");
      button.textContent = String(level);
      button.disabled = robot.trust_level === level;
      button.onclick = () => client.rate(robot.id, level);
      row.appendChild(button);
    }
    const clear = document.createElement("button");
    clear.textContent = "auto";
    clear.onclick = () => client.command(clearTrust(robot.id));
    row.appendChild(clear);
    panel.appendChild(row);
  }
}

function start(): void {
  const canvas = document.getElementById("arena") as HTMLCanvasElement;
  const panel = document.getElementById("panel") as HTMLElement;
  const ctx = canvas.getContext("2d") as unknown as Ctx2D;
  const options = defaultOptions(canvas.width, canvas.height);
  const client = new ConsoleClient(wsUrl(), (url) => new WebSocket(url) as unknown as never);

  client.onchange = (state) => buildPanel(client, panel, state);
  client.connect();

  const frame = () => {
    renderScene(ctx, client.state, options, Date.now());
    window.requestAnimationFrame(frame);
  };
  window.requestAnimationFrame(frame);
}

if (typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", start);
}
