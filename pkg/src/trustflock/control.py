"""The three control laws and their composition into one synchronous swarm step."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .comms import WeightVector, build_comm_graph, weight_vector
from .faults import apply_degradation
from .model import RobotState, SwarmParams, heading_from_vel, neighbors


class NumericalDivergence(RuntimeError):
    """A robot state went non-finite; the simulation must abort."""


class MismatchedNeighborSet(ValueError):
    """Weights and neighbor velocities were built from different neighbor sets."""


class ControlMethod(str, Enum):
    AVERAGED = "avg"
    TRUST_R = "trust-r"


@dataclass
class VirtualLeader:
    """Reference agent the leader robots track: destination ray at cruise speed."""

    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float)
        self.vel = np.asarray(self.vel, dtype=float)


def averaged_update(u_i: np.ndarray, neighbor_vels: list) -> np.ndarray:
    """Plain consensus: mean of own and neighbor velocities."""
    total = np.asarray(u_i, dtype=float).copy()
    for v in neighbor_vels:
        total = total + v
    return total / (len(neighbor_vels) + 1)


def weighted_update(u_i: np.ndarray, neighbor_vels: dict, weights: WeightVector) -> np.ndarray:
    """Convex combination of own and neighbor velocities under trust weights."""
    if set(neighbor_vels) != set(weights.neighbor_weights):
        raise MismatchedNeighborSet(
            f"velocity keys {sorted(neighbor_vels)} != weight keys "
            f"{sorted(weights.neighbor_weights)}"
        )
    out = weights.self_weight * np.asarray(u_i, dtype=float)
    for j in sorted(neighbor_vels):
        out = out + weights.neighbor_weights[j] * neighbor_vels[j]
    return out


def navigational_feedback(
    x_i: np.ndarray,
    u_i: np.ndarray,
    leader: VirtualLeader,
    delta_x: np.ndarray,
    delta_u: np.ndarray,
    c1: float,
    c2: float,
) -> np.ndarray:
    """Velocity increment pulling a leader robot onto the reference trajectory.

    The accumulated-uncertainty terms (delta_x, delta_u) are held constant
    over a leg and bias the feedback against drift inherited from the
    previous task.
    """
    return -c1 * (np.asarray(x_i, dtype=float) - leader.pos + delta_x) - c2 * (
        np.asarray(u_i, dtype=float) - leader.vel + delta_u
    )


def clamp_speed(v: np.ndarray, u_max: float) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm > u_max:
        return v * (u_max / norm)
    return v


def _separation_term(state: RobotState, nbrs: set, by_id: dict, params: SwarmParams) -> np.ndarray:
    push = np.zeros(3)
    for j in sorted(nbrs):
        delta = state.pos - by_id[j].pos
        d = float(np.linalg.norm(delta))
        if 0.0 < d < params.separation_dist:
            push = push + params.separation_gain * (params.separation_dist - d) * (delta / d)
    push[2] = 0.0
    return push


def step_swarm(
    states: list,
    trust,
    leader: VirtualLeader,
    delta_x: np.ndarray,
    delta_u: np.ndarray,
    method: ControlMethod,
    params: SwarmParams,
    fault_profiles: dict,
    t: float,
) -> tuple:
    """Advance every robot by one synchronous step; returns (states, leader).

    All consensus inputs are the current-step actuated velocities, so the
    result is independent of robot iteration order.  Per robot: consensus
    update, leader feedback for leader roles, clamp to u_max, actuator-stage
    fault degradation, then integration with the altitude pinned.
    """
    nbrs = neighbors(states, params.comm_radius)
    by_id = {s.id: s for s in states}
    vels = {s.id: s.vel for s in states}
    graph = build_comm_graph(states, trust, params) if method is ControlMethod.TRUST_R else None

    actuated = {}
    for s in states:
        ids = nbrs[s.id]
        if method is ControlMethod.TRUST_R:
            f_nb = {j: graph.quality_of(s.id, j) for j in ids}
            w = weight_vector(graph.self_quality[s.id], f_nb)
            u = weighted_update(s.vel, {j: vels[j] for j in ids}, w)
        else:
            u = averaged_update(s.vel, [vels[j] for j in sorted(ids)])
        if s.is_leader:
            u = u + navigational_feedback(
                s.pos, s.vel, leader, delta_x, delta_u, params.nav_gain_pos, params.nav_gain_vel
            )
        if params.separation_enabled:
            u = u + _separation_term(s, ids, by_id, params)
        u = clamp_speed(u, params.u_max)
        profile = fault_profiles.get(s.id)
        if profile is not None:
            u = apply_degradation(u, profile, params.u_max, t, s.heading)
        actuated[s.id] = u

    new_states = []
    for s in states:
        vel = actuated[s.id]
        pos = s.pos + vel * params.dt
        pos[2] = params.altitude_hold
        if not (np.isfinite(pos).all() and np.isfinite(vel).all()):
            raise NumericalDivergence(f"robot {s.id} went non-finite at t={t:.3f}")
        profile = fault_profiles.get(s.id)
        new_states.append(
            RobotState(
                id=s.id,
                pos=pos,
                vel=vel,
                heading=heading_from_vel(vel, s.heading),
                role=s.role,
                faulty=profile is not None and profile.active(t),
            )
        )
    new_leader = VirtualLeader(pos=leader.pos + leader.vel * params.dt, vel=leader.vel)
    return new_states, new_leader
