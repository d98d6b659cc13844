"""Live supervisor protocol: state snapshots out, trust and mission commands in."""

import asyncio
import json
import logging
import math
import queue
import threading
import time
from dataclasses import dataclass

from .comms import build_comm_graph
from .model import TRUST_LEVEL_MAX, TRUST_LEVEL_MIN
from .telemetry import write_run

log = logging.getLogger("trustflock")

PROTOCOL_VERSION = 1
DEFAULT_PORT = 8600
DEFAULT_SNAPSHOT_EVERY = 5  # ticks between snapshots (2 Hz at dt = 0.1 s)

CMD_SET_TRUST = "set_trust"
CMD_CLEAR_TRUST = "clear_trust_override"
CMD_PAUSE = "pause"
CMD_RESUME = "resume"
CMD_SWITCH_TARGET = "switch_target"
COMMAND_KINDS = (CMD_SET_TRUST, CMD_CLEAR_TRUST, CMD_PAUSE, CMD_RESUME, CMD_SWITCH_TARGET)


class MalformedCommand(ValueError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class Command:
    kind: str
    robot_id: int | None = None
    level: int | None = None
    index: int | None = None


def _require_int(msg: dict, key: str) -> int:
    value = msg.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise MalformedCommand(f"{key} must be an integer")
    return value


def decode_command(raw) -> Command:
    """Parse one inbound frame; raises MalformedCommand with a reason string."""
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedCommand("message is not valid UTF-8") from exc
    try:
        msg = json.loads(raw)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedCommand("message is not valid JSON") from exc
    if not isinstance(msg, dict):
        raise MalformedCommand("command must be a JSON object")
    if msg.get("v") != PROTOCOL_VERSION:
        raise MalformedCommand(f"unsupported protocol version {msg.get('v')!r}")
    kind = msg.get("type")
    if kind not in COMMAND_KINDS:
        raise MalformedCommand(f"unknown command type {kind!r}")
    if kind == CMD_SET_TRUST:
        robot_id = _require_int(msg, "robot_id")
        level = _require_int(msg, "level")
        if not TRUST_LEVEL_MIN <= level <= TRUST_LEVEL_MAX:
            raise MalformedCommand("level out of range")
        return Command(CMD_SET_TRUST, robot_id=robot_id, level=level)
    if kind == CMD_CLEAR_TRUST:
        return Command(CMD_CLEAR_TRUST, robot_id=_require_int(msg, "robot_id"))
    if kind == CMD_SWITCH_TARGET:
        index = _require_int(msg, "index")
        if index < 0:
            raise MalformedCommand("index must be >= 0")
        return Command(CMD_SWITCH_TARGET, index=index)
    return Command(kind)


def error_reply(reason: str) -> str:
    return json.dumps({"v": PROTOCOL_VERSION, "type": "error", "reason": reason})


def _sig6(x: float) -> float:
    # Snapshots carry floats at six significant digits.
    return float(f"{float(x):.6g}")


def snapshot_view(sim, paused: bool) -> dict:
    """Assemble the state a supervisor monitors from a simulation instance."""
    trust = sim.trust
    graph = build_comm_graph(sim.states, trust, sim.spec.params)
    target = sim.spec.targets[sim.target_index]
    centroid = sim._centroid_pos(trust)
    robots = [
        {
            "id": s.id,
            "x": _sig6(s.pos[0]),
            "y": _sig6(s.pos[1]),
            "z": _sig6(s.pos[2]),
            "heading_deg": _sig6(math.degrees(s.heading)),
            "speed": _sig6(s.speed),
            "role": s.role,
            "trust_level": trust.level_of(s.id),
            "trust_gain": _sig6(trust.gain_of(s.id)),
        }
        for s in sorted(sim.states, key=lambda s: s.id)
    ]
    edges = [
        {"i": i, "j": j, "quality": _sig6(graph.quality[(i, j)])}
        for (i, j) in sorted(graph.edges)
    ]
    return {
        "v": PROTOCOL_VERSION,
        "type": "snapshot",
        "t": _sig6(sim.t),
        "paused": paused,
        "done": sim.done,
        "robots": robots,
        "edges": edges,
        "leader": {
            "x": _sig6(sim.leader.pos[0]),
            "y": _sig6(sim.leader.pos[1]),
            "target_index": sim.target_index,
        },
        "metrics_so_far": {
            "t": _sig6(sim.t),
            "target_index": sim.target_index,
            "target_x": _sig6(target.x),
            "target_y": _sig6(target.y),
            "distance_to_target": _sig6(
                math.hypot(centroid[0] - target.x, centroid[1] - target.y)
            ),
        },
    }


def encode_snapshot(view: dict) -> str:
    return json.dumps(view, separators=(",", ":"))


class SimSession:
    """Runs one simulation on its own thread; the sole mutator of its state.

    Network handlers enqueue decoded commands and read published snapshot
    frames.  Commands drain at tick boundaries, so a snapshot never shows a
    half-applied command, and the last command per robot in a tick wins.
    """

    def __init__(self, sim, pace: float = 1.0, snapshot_every: int = DEFAULT_SNAPSHOT_EVERY,
                 token: str | None = None, out_dir=None):
        self.sim = sim
        self.pace = pace
        self.snapshot_every = max(1, snapshot_every)
        self.token = token
        self.out_dir = out_dir
        self.paused = False
        self.record = None
        self._commands = queue.Queue()
        self._lock = threading.Lock()
        self._seq = 0
        self._frame = ""
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, name="sim-session", daemon=True)
        self._publish()

    # -- network-facing side ------------------------------------------------

    def authorized(self, token: str | None) -> bool:
        return self.token is None or token == self.token

    def enqueue(self, command: Command) -> None:
        self._commands.put(command)

    def latest(self) -> tuple:
        with self._lock:
            return self._seq, self._frame

    # -- loop ownership -------------------------------------------------------

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()

    def join(self, timeout: float | None = None) -> None:
        self._thread.join(timeout)

    def _apply(self, cmd: Command) -> None:
        if cmd.kind == CMD_SET_TRUST:
            self.sim.provider.set_override(cmd.robot_id, cmd.level)
        elif cmd.kind == CMD_CLEAR_TRUST:
            self.sim.provider.clear_override(cmd.robot_id)
        elif cmd.kind == CMD_PAUSE:
            self.paused = True
        elif cmd.kind == CMD_RESUME:
            self.paused = False
        elif cmd.kind == CMD_SWITCH_TARGET:
            self.sim.request_switch(cmd.index)

    def _drain(self) -> None:
        while True:
            try:
                cmd = self._commands.get_nowait()
            except queue.Empty:
                return
            self._apply(cmd)

    def _publish(self) -> None:
        frame = encode_snapshot(snapshot_view(self.sim, self.paused))
        with self._lock:
            self._seq += 1
            self._frame = frame

    def _loop(self) -> None:
        dt = self.sim.spec.params.dt
        ticks = 0
        while not self._stop.is_set() and not self.sim.done:
            started = time.monotonic()
            self._drain()
            if not self.paused:
                self.sim.tick()
            ticks += 1
            if ticks % self.snapshot_every == 0 or self.sim.done:
                self._publish()
            if self.pace > 0:
                budget = dt / self.pace
                remaining = budget - (time.monotonic() - started)
                if remaining > 0:
                    time.sleep(remaining)
            elif self.paused:
                time.sleep(0.005)  # unpaced but frozen; avoid a busy spin
        self._drain()
        self._publish()
        if self.sim.done:
            self.record = self.sim._record
            if self.out_dir is not None:
                write_run(self.record, self.out_dir)
                log.info("live run persisted to %s", self.out_dir)


def build_app(session: SimSession, static_dir=None):
    """FastAPI app: /snapshot for polling, /ws for the live session."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
    from fastapi.responses import Response

    app = FastAPI(title="trustflock supervisor service")

    @app.get("/snapshot")
    def snapshot() -> Response:
        _, frame = session.latest()
        return Response(content=frame, media_type="application/json")

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        can_command = session.authorized(websocket.query_params.get("token"))

        async def push_snapshots():
            last = -1
            while True:
                seq, frame = session.latest()
                if seq != last:
                    await websocket.send_text(frame)
                    last = seq
                await asyncio.sleep(0.01)

        async def receive_commands():
            while True:
                raw = await websocket.receive_text()
                try:
                    cmd = decode_command(raw)
                except MalformedCommand as exc:
                    await websocket.send_text(error_reply(exc.reason))
                    continue
                if not can_command:
                    await websocket.send_text(error_reply("not authorized to command"))
                    continue
                session.enqueue(cmd)

        tasks = [
            asyncio.create_task(push_snapshots()),
            asyncio.create_task(receive_commands()),
        ]
        try:
            done, pending = await asyncio.wait(tasks, return_when=asyncio.FIRST_EXCEPTION)
            for task in pending:
                task.cancel()
            for task in done:
                exc = task.exception()
                if exc is not None and not isinstance(exc, WebSocketDisconnect):
                    raise exc
        except WebSocketDisconnect:
            pass
        finally:
            for task in tasks:
                task.cancel()

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app
