"""Scenario definitions, the run loop, task transitions, and run metrics."""

import logging
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np
import yaml

from .control import ControlMethod, NumericalDivergence, VirtualLeader, step_swarm
from .faults import FaultProfile
from .model import (
    FOLLOWER,
    LEADER,
    DegenerateDisplacement,
    InvalidParams,
    RobotState,
    SwarmParams,
    bearing_deg,
    vec3,
    wrap_deg,
)
from .telemetry import ENGINE_VERSION, MANIFEST_SCHEMA_VERSION, RunRecord
from .trust import TrustEvent, TrustProvider, TrustSourceConfig

log = logging.getLogger("trustflock")

ON_ARRIVAL = "on_arrival"
AT_TIME = "at_time"
ON_COMMAND = "on_command"
TRANSITION_KINDS = (ON_ARRIVAL, AT_TIME, ON_COMMAND)

# Initial positions get a centimeter-scale jitter from the run seed so the
# determinism contract is observable without disturbing the dynamics.
SEED_JITTER = 0.05

_SPEC_KEYS = {
    "name",
    "arena",
    "method",
    "duration",
    "seed",
    "report_leg",
    "transition",
    "robots",
    "targets",
    "faults",
    "trust_schedule",
    "trust",
    "params",
}


@dataclass
class Target:
    x: float
    y: float
    radius: float = 1.0
    cruise_speed: float = 1.4

    def center(self, altitude: float) -> np.ndarray:
        return vec3(self.x, self.y, altitude)


@dataclass
class TransitionRule:
    kind: str = ON_ARRIVAL
    distance: float | None = None  # on_arrival; falls back to the target radius
    time: float | None = None      # at_time


@dataclass
class RobotInit:
    id: int
    x: float
    y: float
    role: str = FOLLOWER


@dataclass
class ScenarioSpec:
    """Everything that defines one run; loads from a YAML key-value tree."""

    name: str = "scenario"
    robots: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    transition: TransitionRule = field(default_factory=TransitionRule)
    fault_profiles: list = field(default_factory=list)
    trust_schedule: list = field(default_factory=list)
    method: str = ControlMethod.AVERAGED.value
    duration: float = 60.0
    seed: int = 0
    arena_width: float = 50.0
    arena_height: float = 50.0
    report_leg: int = 0
    params: SwarmParams = field(default_factory=SwarmParams)
    trust: TrustSourceConfig = field(default_factory=TrustSourceConfig)

    def validate(self) -> "ScenarioSpec":
        self.params.validate()
        self.trust.validate()
        if not self.targets:
            raise InvalidParams("scenario needs at least one target")
        if not self.robots:
            raise InvalidParams("scenario needs at least one robot")
        ids = [r.id for r in self.robots]
        if len(set(ids)) != len(ids):
            raise InvalidParams(f"robot ids must be unique, got {ids}")
        for r in self.robots:
            if r.role not in (LEADER, FOLLOWER):
                raise InvalidParams(f"robot {r.id}: bad role {r.role!r}")
            if not (0.0 <= r.x <= self.arena_width and 0.0 <= r.y <= self.arena_height):
                raise InvalidParams(f"robot {r.id} starts outside the arena")
        for tgt in self.targets:
            if tgt.cruise_speed <= 0.0 or tgt.cruise_speed > self.params.u_max:
                raise InvalidParams(
                    f"cruise_speed must be in (0, u_max], got {tgt.cruise_speed}"
                )
            if tgt.radius <= 0.0:
                raise InvalidParams(f"target radius must be > 0, got {tgt.radius}")
        if self.transition.kind not in TRANSITION_KINDS:
            raise InvalidParams(f"unknown transition kind {self.transition.kind!r}")
        if self.transition.kind == AT_TIME and self.transition.time is None:
            raise InvalidParams("at_time transition needs a time")
        for prof in self.fault_profiles:
            prof.validate()
            if prof.robot_id not in ids:
                raise InvalidParams(f"fault targets unknown robot {prof.robot_id}")
        for ev in self.trust_schedule:
            if not 1 <= ev.level <= 5:
                raise InvalidParams(f"trust schedule level out of range: {ev.level}")
            if ev.time < 0.0:
                raise InvalidParams(f"trust schedule time must be >= 0, got {ev.time}")
        try:
            ControlMethod(self.method)
        except ValueError as exc:
            raise InvalidParams(f"unknown method {self.method!r}") from exc
        if self.duration <= 0.0:
            raise InvalidParams(f"duration must be > 0, got {self.duration}")
        if self.report_leg < 0:
            raise InvalidParams(f"report_leg must be >= 0, got {self.report_leg}")
        return self

    def to_dict(self) -> dict:
        transition = {"kind": self.transition.kind}
        if self.transition.distance is not None:
            transition["distance"] = self.transition.distance
        if self.transition.time is not None:
            transition["time"] = self.transition.time
        return {
            "name": self.name,
            "arena": {"width": self.arena_width, "height": self.arena_height},
            "method": self.method,
            "duration": self.duration,
            "seed": self.seed,
            "report_leg": self.report_leg,
            "transition": transition,
            "robots": [asdict(r) for r in self.robots],
            "targets": [asdict(t) for t in self.targets],
            "faults": [asdict(p) for p in self.fault_profiles],
            "trust_schedule": [asdict(e) for e in self.trust_schedule],
            "trust": asdict(self.trust),
            "params": asdict(self.params),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        unknown = set(data) - _SPEC_KEYS
        if unknown:
            raise InvalidParams(f"unknown scenario keys: {sorted(unknown)}")
        arena = data.get("arena", {})
        transition = data.get("transition", {})
        try:
            spec = cls(
                name=str(data.get("name", "scenario")),
                robots=[RobotInit(**r) for r in data.get("robots", [])],
                targets=[Target(**t) for t in data.get("targets", [])],
                transition=TransitionRule(**transition),
                fault_profiles=[FaultProfile(**p) for p in data.get("faults", [])],
                trust_schedule=[TrustEvent(**e) for e in data.get("trust_schedule", [])],
                method=str(data.get("method", ControlMethod.AVERAGED.value)),
                duration=float(data.get("duration", 60.0)),
                seed=int(data.get("seed", 0)),
                arena_width=float(arena.get("width", 50.0)),
                arena_height=float(arena.get("height", 50.0)),
                report_leg=int(data.get("report_leg", 0)),
                params=SwarmParams(**data.get("params", {})),
                trust=TrustSourceConfig(**data.get("trust", {})),
            )
        except TypeError as exc:
            raise InvalidParams(f"bad scenario structure: {exc}") from exc
        return spec


def load_scenario(path) -> ScenarioSpec:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise InvalidParams(f"scenario file {path} must hold a mapping")
    return ScenarioSpec.from_dict(data).validate()


def save_scenario(spec: ScenarioSpec, path) -> None:
    with open(path, "w", newline="\n") as fh:
        yaml.safe_dump(spec.to_dict(), fh, sort_keys=False)


def builtin_scenario(name: str) -> ScenarioSpec:
    """Load one of the two shipped missions ("1" transit, "2" emergency)."""
    ref = resources.files("trustflock").joinpath("scenarios", f"scenario{name}.yaml")
    with resources.as_file(ref) as path:
        return load_scenario(path)


def resolve_scenario(ref: str) -> ScenarioSpec:
    if str(ref) in ("1", "2"):
        return builtin_scenario(str(ref))
    return load_scenario(ref)


def compute_accumulated_uncertainty(actual_pos, actual_vel, planned_pos, planned_vel) -> tuple:
    """Drift of the swarm against its planned state at a task transition.

    Returns (delta_x, delta_u); the caller holds them constant until the
    next transition.  The planned state is the reference trajectory's state
    at the instant the new task arrives.
    """
    dx = np.asarray(actual_pos, dtype=float) - np.asarray(planned_pos, dtype=float)
    du = np.asarray(actual_vel, dtype=float) - np.asarray(planned_vel, dtype=float)
    return dx, du


def transition_check(
    centroid,
    t: float,
    spec: ScenarioSpec,
    current_index: int,
    at_time_fired: bool = False,
    requested: int | None = None,
) -> int | None:
    """Decide whether the mission advances to another target this tick.

    Returns the new target index or None to continue.  A supervisor request
    wins over the scenario's own rule; on_command scenarios only ever
    advance through requests.
    """
    if (
        requested is not None
        and 0 <= requested < len(spec.targets)
        and requested != current_index
    ):
        return requested
    nxt = current_index + 1
    if nxt >= len(spec.targets):
        return None
    rule = spec.transition
    if rule.kind == ON_ARRIVAL:
        tgt = spec.targets[current_index]
        radius = rule.distance if rule.distance is not None else tgt.radius
        if math.hypot(centroid[0] - tgt.x, centroid[1] - tgt.y) < radius:
            return nxt
    elif rule.kind == AT_TIME:
        if not at_time_fired and t >= rule.time:
            return nxt
    return None


@dataclass
class LegMetrics:
    leg: int
    target_index: int
    t_start: float
    t_end: float
    designed_heading_deg: float | None
    heading_deg: float | None
    heading_error_deg: float | None
    final_distance_m: float


@dataclass
class MetricsReport:
    """Heading and distance per leg plus the scenario's headline numbers."""

    legs: list = field(default_factory=list)
    headline_leg: int = 0
    designed_heading_deg: float | None = None
    heading_deg: float | None = None
    heading_error_deg: float | None = None
    final_distance_m: float = 0.0
    connectivity_fraction: float = 0.0
    centroid_trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "headline_leg": self.headline_leg,
            "designed_heading_deg": self.designed_heading_deg,
            "heading_deg": self.heading_deg,
            "heading_error_deg": self.heading_error_deg,
            "final_distance_m": self.final_distance_m,
            "connectivity_fraction": self.connectivity_fraction,
            "legs": [asdict(leg) for leg in self.legs],
            "centroid_trace": self.centroid_trace,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(
            legs=[LegMetrics(**leg) for leg in data.get("legs", [])],
            headline_leg=int(data.get("headline_leg", 0)),
            designed_heading_deg=data.get("designed_heading_deg"),
            heading_deg=data.get("heading_deg"),
            heading_error_deg=data.get("heading_error_deg"),
            final_distance_m=float(data.get("final_distance_m", 0.0)),
            connectivity_fraction=float(data.get("connectivity_fraction", 0.0)),
            centroid_trace=[list(p) for p in data.get("centroid_trace", [])],
        )


def _connected(points: list, radius: float) -> bool:
    if len(points) <= 1:
        return True
    seen = {0}
    frontier = [0]
    while frontier:
        a = frontier.pop()
        for b in range(len(points)):
            if b in seen:
                continue
            if math.hypot(points[a][0] - points[b][0], points[a][1] - points[b][1]) < radius:
                seen.add(b)
                frontier.append(b)
    return len(seen) == len(points)


def compute_metrics(record: RunRecord, spec: ScenarioSpec) -> MetricsReport:
    """Per-leg headings and distances from a recorded run.

    Works off the persisted trajectory and leg marks so a replayed record
    yields exactly the numbers computed at run time.  Once a robot has been
    abandoned (zero trust gain under the weighted method) it no longer
    belongs to the team, so it drops out of the centroid.
    """
    run_info = record.manifest["run"]
    n_robots = int(run_info["n_robots"])
    steps = int(run_info["steps_recorded"])
    if steps <= 0:
        raise InvalidParams("record holds no steps")
    abandonment = (
        run_info["method"] == ControlMethod.TRUST_R.value and spec.params.abandon_at_zero_trust
    )

    trace = []
    positions_by_step = []
    for k in range(steps):
        chunk = record.trajectory[k * n_robots : (k + 1) * n_robots]
        active = [r for r in chunk if not abandonment or r[10] > 0.0] or chunk
        t = chunk[0][0]
        cx = sum(r[2] for r in active) / len(active)
        cy = sum(r[3] for r in active) / len(active)
        trace.append([t, cx, cy])
        positions_by_step.append([(r[2], r[3]) for r in active])

    connected_steps = sum(
        1 for pts in positions_by_step if _connected(pts, spec.params.comm_radius)
    )

    leg_marks = run_info["legs"]
    legs = []
    for li, mark in enumerate(leg_marks):
        start = int(mark["step_start"])
        end = int(leg_marks[li + 1]["step_start"]) if li + 1 < len(leg_marks) else steps - 1
        target = spec.targets[int(mark["target_index"])]
        t0, x0, y0 = trace[start]
        t1, x1, y1 = trace[end]
        heading = designed = error = None
        try:
            heading = bearing_deg((x1 - x0, y1 - y0))
            designed = bearing_deg((target.x - x0, target.y - y0))
            error = wrap_deg(heading - designed)
        except DegenerateDisplacement:
            pass
        legs.append(
            LegMetrics(
                leg=li,
                target_index=int(mark["target_index"]),
                t_start=t0,
                t_end=t1,
                designed_heading_deg=designed,
                heading_deg=heading,
                heading_error_deg=error,
                final_distance_m=math.hypot(x1 - target.x, y1 - target.y),
            )
        )

    headline = min(spec.report_leg, len(legs) - 1)
    head = legs[headline]
    return MetricsReport(
        legs=legs,
        headline_leg=headline,
        designed_heading_deg=head.designed_heading_deg,
        heading_deg=head.heading_deg,
        heading_error_deg=head.heading_error_deg,
        final_distance_m=legs[-1].final_distance_m,
        connectivity_fraction=connected_steps / steps,
        centroid_trace=trace,
    )


class Simulation:
    """Single-owner loop for one run.

    `tick()` advances one synchronous step; the live service drives ticks
    at wall pace, `run()` drives them to completion.  Live trust overrides
    and retarget requests must be applied between ticks by whoever owns
    the loop.
    """

    def __init__(self, spec: ScenarioSpec):
        spec.validate()
        self.spec = spec
        p = spec.params
        self.method = ControlMethod(spec.method)
        rng = np.random.default_rng(spec.seed)
        jitter = rng.uniform(-SEED_JITTER, SEED_JITTER, size=(len(spec.robots), 2))
        self.states = [
            RobotState(
                id=r.id,
                pos=vec3(r.x + jitter[k, 0], r.y + jitter[k, 1], p.altitude_hold),
                vel=vec3(),
                heading=0.0,
                role=r.role,
            )
            for k, r in enumerate(spec.robots)
        ]
        self.profiles = {f.robot_id: f for f in spec.fault_profiles}
        self.provider = TrustProvider(spec.trust, spec.trust_schedule, [r.id for r in spec.robots])
        self.trust = self.provider.update(0.0, 0, self.states, p.comm_radius)

        self.t = 0.0
        self.step_idx = 0
        self.n_steps = max(1, int(round(spec.duration / p.dt)))
        self.target_index = 0
        self.delta_x = vec3()
        self.delta_u = vec3()
        start = self._centroid_pos(self.trust)
        self.leader = self._aim_leader(start, 0)
        self.legs = [{"index": 0, "target_index": 0, "step_start": 0, "t_start": 0.0}]

        self.rows = []
        self.trust_rows = []
        self.done = False
        self.valid = True
        self.divergence = None
        self.report = None
        self._record = None
        self._at_time_fired = False
        self._switch_requested = None

    # -- centroid over the robots still on the team ---------------------

    def _abandonment_active(self) -> bool:
        return self.method is ControlMethod.TRUST_R and self.spec.params.abandon_at_zero_trust

    def _active_states(self, trust) -> list:
        if self._abandonment_active():
            active = [s for s in self.states if trust.gain_of(s.id) > 0.0]
            if active:
                return active
        return self.states

    def _centroid_pos(self, trust) -> np.ndarray:
        active = self._active_states(trust)
        return sum((s.pos for s in active), start=np.zeros(3)) / len(active)

    def _centroid_vel(self, trust) -> np.ndarray:
        active = self._active_states(trust)
        return sum((s.vel for s in active), start=np.zeros(3)) / len(active)

    # -- virtual leader handling ----------------------------------------

    def _aim_leader(self, start_pos, target_index: int) -> VirtualLeader:
        tgt = self.spec.targets[target_index]
        center = tgt.center(self.spec.params.altitude_hold)
        disp = center - np.asarray(start_pos, dtype=float)
        dist = float(np.linalg.norm(disp))
        vel = tgt.cruise_speed * disp / dist if dist > 1e-9 else vec3()
        return VirtualLeader(pos=np.asarray(start_pos, dtype=float).copy(), vel=vel)

    def _park_leader(self) -> None:
        # The reference stops exactly on the destination instead of flying past.
        speed = float(np.linalg.norm(self.leader.vel))
        if speed <= 0.0:
            return
        center = self.spec.targets[self.target_index].center(self.spec.params.altitude_hold)
        if float(np.linalg.norm(center - self.leader.pos)) <= speed * self.spec.params.dt:
            self.leader = VirtualLeader(pos=center.copy(), vel=vec3())

    # -- live commands ----------------------------------------------------

    def request_switch(self, target_index: int) -> None:
        self._switch_requested = int(target_index)

    # -- the loop ---------------------------------------------------------

    def tick(self) -> None:
        if self.done:
            return
        p = self.spec.params
        trust = self.provider.update(self.t, self.step_idx, self.states, p.comm_radius)
        self.trust = trust
        self._record_step(trust)

        requested = self._switch_requested
        self._switch_requested = None
        new_index = transition_check(
            self._centroid_pos(trust), self.t, self.spec, self.target_index,
            at_time_fired=self._at_time_fired, requested=requested,
        )
        if self.spec.transition.kind == AT_TIME and self.spec.transition.time is not None:
            if self.t >= self.spec.transition.time:
                self._at_time_fired = True
        if new_index is not None:
            self._switch_to(new_index, trust)

        try:
            self.states, self.leader = step_swarm(
                self.states, trust, self.leader, self.delta_x, self.delta_u,
                self.method, p, self.profiles, self.t,
            )
        except NumericalDivergence as exc:
            log.error("run aborted: %s", exc)
            self.valid = False
            self.divergence = str(exc)
            self._finalize()
            return
        self._park_leader()
        self.step_idx += 1
        self.t = round(self.step_idx * p.dt, 9)
        if self.step_idx >= self.n_steps:
            self._finalize()

    def run(self) -> RunRecord:
        while not self.done:
            self.tick()
        return self._record

    def _switch_to(self, new_index: int, trust) -> None:
        c_pos = self._centroid_pos(trust)
        c_vel = self._centroid_vel(trust)
        self.delta_x, self.delta_u = compute_accumulated_uncertainty(
            c_pos, c_vel, self.leader.pos, self.leader.vel
        )
        self.target_index = new_index
        self.leader = self._aim_leader(c_pos, new_index)
        self.legs.append(
            {
                "index": len(self.legs),
                "target_index": new_index,
                "step_start": self.step_idx,
                "t_start": self.t,
            }
        )
        log.info(
            "t=%.1fs: switched to target %d, delta_x=%s delta_u=%s",
            self.t, new_index, np.round(self.delta_x, 3), np.round(self.delta_u, 3),
        )

    def _record_step(self, trust) -> None:
        for s in self.states:
            profile = self.profiles.get(s.id)
            self.rows.append(
                (
                    self.t,
                    s.id,
                    float(s.pos[0]),
                    float(s.pos[1]),
                    float(s.pos[2]),
                    float(s.vel[0]),
                    float(s.vel[1]),
                    float(s.vel[2]),
                    float(s.heading),
                    trust.level_of(s.id),
                    trust.gain_of(s.id),
                    s.role,
                    profile is not None and profile.active(self.t),
                )
            )
            self.trust_rows.append((self.t, s.id, trust.level_of(s.id), trust.gain_of(s.id)))

    def _finalize(self) -> None:
        steps_recorded = len(self.rows) // max(1, len(self.states))
        manifest = {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "engine_version": ENGINE_VERSION,
            "seed": self.spec.seed,
            "valid": self.valid,
            "run": {
                "method": self.method.value,
                "trust_source": self.spec.trust.mode,
                "n_robots": len(self.states),
                "n_steps": self.n_steps,
                "steps_recorded": steps_recorded,
                "dt": self.spec.params.dt,
                "divergence": self.divergence,
                "legs": self.legs,
            },
            "scenario": self.spec.to_dict(),
        }
        record = RunRecord(
            manifest=manifest,
            trajectory=self.rows,
            trust_timeline=self.trust_rows,
            metrics=None,
            valid=self.valid,
        )
        if self.valid and steps_recorded > 0:
            self.report = compute_metrics(record, self.spec)
            record.metrics = self.report.to_dict()
        self._record = record
        self.done = True


def run(spec: ScenarioSpec) -> RunRecord:
    """Execute a scenario to completion and return its record."""
    return Simulation(spec).run()
