"""Core domain types and geometric primitives shared by the simulator."""

import math
from dataclasses import dataclass, field

import numpy as np

LEADER = "leader"
FOLLOWER = "follower"

TRUST_LEVEL_MIN = 1
TRUST_LEVEL_MAX = 5

# Below this horizontal speed a velocity no longer defines a direction.
DIRECTION_EPS = 1e-9


class DegenerateDisplacement(ValueError):
    """Displacement too short to define a direction."""


class InvalidParams(ValueError):
    """A parameter set violates its own constraints."""


def vec3(x: float = 0.0, y: float = 0.0, z: float = 0.0) -> np.ndarray:
    return np.array([float(x), float(y), float(z)])


def level_to_gain(level: int) -> float:
    """Map a 1..5 trust level onto the [0, 1] gain used by the controller."""
    if not TRUST_LEVEL_MIN <= level <= TRUST_LEVEL_MAX:
        raise InvalidParams(f"trust level must be in 1..5, got {level}")
    return (level - 1) / 4.0


def bearing_deg(displacement) -> float:
    """Horizontal bearing of a displacement vector, in degrees in (-180, 180].

    Raises DegenerateDisplacement when the horizontal component is shorter
    than 1e-9 m.
    """
    dx = float(displacement[0])
    dy = float(displacement[1])
    if math.hypot(dx, dy) <= DIRECTION_EPS:
        raise DegenerateDisplacement(f"displacement ({dx}, {dy}) has no direction")
    deg = math.degrees(math.atan2(dy, dx))
    return 180.0 if deg <= -180.0 else deg


def wrap_deg(angle: float) -> float:
    """Wrap an angle in degrees onto (-180, 180]."""
    wrapped = (angle + 180.0) % 360.0 - 180.0
    return 180.0 if wrapped == -180.0 else wrapped


def heading_from_vel(vel: np.ndarray, previous: float) -> float:
    """Heading implied by a velocity; keeps the previous heading when hovering."""
    if math.hypot(float(vel[0]), float(vel[1])) <= DIRECTION_EPS:
        return previous
    h = math.atan2(float(vel[1]), float(vel[0]))
    return math.pi if h <= -math.pi else h


@dataclass
class RobotState:
    """Kinematic state of a single robot.

    `faulty` is a diagnostic flag for logs and displays only; control code
    must never branch on it.
    """

    id: int
    pos: np.ndarray
    vel: np.ndarray
    heading: float = 0.0
    role: str = FOLLOWER
    faulty: bool = False

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float)
        self.vel = np.asarray(self.vel, dtype=float)

    @property
    def is_leader(self) -> bool:
        return self.role == LEADER

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.vel))


@dataclass
class SwarmParams:
    """Communication and control constants for one run."""

    comm_radius: float = 15.0        # R, meters
    best_quality_dist: float = 5.0   # rho, meters; full quality inside this range
    quality_weight: float = 1.0      # eta in (0, 1]
    decay_gain: float = 1.0          # scale of the exponential quality falloff
    nav_gain_pos: float = 0.1        # c1, 1/s
    nav_gain_vel: float = 0.4        # c2, dimensionless
    u_max: float = 2.0               # m/s
    dt: float = 0.1                  # s
    altitude_hold: float = 5.0       # m
    abandon_at_zero_trust: bool = True
    # Demo-only short-range repulsion; excluded from all acceptance runs.
    separation_enabled: bool = False
    separation_dist: float = 1.0
    separation_gain: float = 0.5

    def validate(self) -> "SwarmParams":
        if not 0.0 < self.best_quality_dist < self.comm_radius:
            raise InvalidParams(
                f"need 0 < best_quality_dist < comm_radius, got "
                f"{self.best_quality_dist} vs {self.comm_radius}"
            )
        if not 0.0 < self.quality_weight <= 1.0:
            raise InvalidParams(f"quality_weight must be in (0, 1], got {self.quality_weight}")
        if self.decay_gain <= 0.0:
            raise InvalidParams(f"decay_gain must be > 0, got {self.decay_gain}")
        if self.dt <= 0.0:
            raise InvalidParams(f"dt must be > 0, got {self.dt}")
        if self.nav_gain_pos < 0.0 or self.nav_gain_vel < 0.0:
            raise InvalidParams("navigation gains must be >= 0")
        if self.u_max <= 0.0:
            raise InvalidParams(f"u_max must be > 0, got {self.u_max}")
        return self


@dataclass
class TrustMap:
    """Per-robot trust level on the 1..5 scale plus the normalized gain.

    Gains derived from levels sit on the {0, 0.25, 0.5, 0.75, 1.0} grid;
    maps built directly from gains may hold any value in [0, 1].
    """

    level: dict = field(default_factory=dict)
    gain: dict = field(default_factory=dict)

    @classmethod
    def from_levels(cls, levels: dict) -> "TrustMap":
        return cls(
            level=dict(levels),
            gain={rid: level_to_gain(lvl) for rid, lvl in levels.items()},
        )

    @classmethod
    def uniform(cls, robot_ids, level: int = TRUST_LEVEL_MAX) -> "TrustMap":
        return cls.from_levels({rid: level for rid in robot_ids})

    def level_of(self, robot_id: int) -> int:
        return self.level.get(robot_id, TRUST_LEVEL_MAX)

    def gain_of(self, robot_id: int) -> float:
        return self.gain.get(robot_id, 1.0)


@dataclass
class CommGraph:
    """Distance-limited communication graph with per-edge quality.

    Edges are unordered pairs stored as (min_id, max_id); self-quality is
    kept separately so the graph itself stays loop-free.
    """

    edges: set = field(default_factory=set)
    quality: dict = field(default_factory=dict)
    self_quality: dict = field(default_factory=dict)
    adjacency: dict = field(default_factory=dict)

    def quality_of(self, i: int, j: int) -> float:
        key = (i, j) if i < j else (j, i)
        return self.quality.get(key, 0.0)

    def neighbors_of(self, i: int) -> set:
        return self.adjacency.get(i, set())


def neighbors(states: list, comm_radius: float) -> dict:
    """Neighbor sets under strict `distance < comm_radius`.

    The boundary is excluded so the relation agrees with the zero branch of
    the edge-quality kernel at distance >= R.  Symmetric and irreflexive.
    """
    out = {s.id: set() for s in states}
    for a in range(len(states)):
        for b in range(a + 1, len(states)):
            si, sj = states[a], states[b]
            if float(np.linalg.norm(si.pos - sj.pos)) < comm_radius:
                out[si.id].add(sj.id)
                out[sj.id].add(si.id)
    return out
