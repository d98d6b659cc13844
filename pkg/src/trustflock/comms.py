"""Trust-aware communication quality and the normalized update weights."""

import math
from dataclasses import dataclass, field

import numpy as np

from .model import CommGraph, InvalidParams, SwarmParams, TrustMap, neighbors

# Below this total quality a robot has nothing to average against and
# falls back to coasting on its own state.
DEGENERATE_QUALITY = 1e-12


@dataclass
class WeightVector:
    """Convex weights over a robot's own velocity and its neighbors'."""

    self_weight: float
    neighbor_weights: dict = field(default_factory=dict)


def comm_quality(pos_i, pos_j, g_i: float, g_j: float, params: SwarmParams) -> float:
    """Edge quality in [0, eta] between two robots.

    Full quality (g_i + g_j) * eta / 2 inside `best_quality_dist`, exponential
    falloff out to `comm_radius`, zero at and beyond it.  When
    `abandon_at_zero_trust` is set, an endpoint whose gain has hit exactly
    zero severs the edge outright regardless of distance.
    """
    if params.best_quality_dist >= params.comm_radius:
        raise InvalidParams(
            f"best_quality_dist {params.best_quality_dist} must be below "
            f"comm_radius {params.comm_radius}"
        )
    if params.abandon_at_zero_trust and min(g_i, g_j) == 0.0:
        return 0.0
    d = float(np.linalg.norm(np.asarray(pos_i, dtype=float) - np.asarray(pos_j, dtype=float)))
    if d >= params.comm_radius:
        return 0.0
    base = 0.5 * (g_i + g_j) * params.quality_weight
    if d <= params.best_quality_dist:
        return base
    span = params.comm_radius - params.best_quality_dist
    return base * math.exp(-params.decay_gain * (d - params.best_quality_dist) / span)


def self_quality(g_i: float, params: SwarmParams) -> float:
    """A robot's quality toward itself: the edge kernel at distance zero."""
    return g_i * params.quality_weight


def weight_vector(f_self: float, f_neighbors: dict) -> WeightVector:
    """Normalize self and neighbor qualities into convex update weights.

    When every quality is (numerically) zero the robot keeps its own state:
    self weight 1, all neighbor weights 0.
    """
    order = sorted(f_neighbors)
    denom = f_self + sum(f_neighbors[j] for j in order)
    if denom < DEGENERATE_QUALITY:
        return WeightVector(self_weight=1.0, neighbor_weights={j: 0.0 for j in order})
    return WeightVector(
        self_weight=f_self / denom,
        neighbor_weights={j: f_neighbors[j] / denom for j in order},
    )


def build_comm_graph(states: list, trust: TrustMap, params: SwarmParams) -> CommGraph:
    """Evaluate edge and self qualities for the current robot configuration.

    Recomputed every step; the result is independent of evaluation order.
    """
    adjacency = neighbors(states, params.comm_radius)
    by_id = {s.id: s for s in states}
    edges = set()
    quality = {}
    for i in sorted(adjacency):
        for j in sorted(adjacency[i]):
            if j <= i:
                continue
            edges.add((i, j))
            quality[(i, j)] = comm_quality(
                by_id[i].pos, by_id[j].pos, trust.gain_of(i), trust.gain_of(j), params
            )
    selfq = {s.id: self_quality(trust.gain_of(s.id), params) for s in states}
    return CommGraph(edges=edges, quality=quality, self_quality=selfq, adjacency=adjacency)
