"""Trust sources: scripted schedules, a residual heuristic, and live overrides."""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .model import (
    TRUST_LEVEL_MAX,
    TRUST_LEVEL_MIN,
    InvalidParams,
    TrustMap,
    neighbors,
)

MODE_SCRIPTED = "scripted"
MODE_HEURISTIC = "heuristic"
MODE_LIVE = "live"
MODES = (MODE_SCRIPTED, MODE_HEURISTIC, MODE_LIVE)


@dataclass
class TrustEvent:
    """One scripted rating: at `time`, `robot_id` is rated `level`."""

    time: float
    robot_id: int
    level: int


@dataclass
class TrustSourceConfig:
    mode: str = MODE_SCRIPTED
    window: int = 20          # residual averaging window, steps
    # A healthy leader's own navigational correction shows up as ~0.16 m/s of
    # residual under fault load, so the downgrade threshold sits above that.
    tau_down: float = 0.2     # m/s; downgrade while the smoothed residual stays above
    tau_up: float = 0.05      # m/s; upgrade while it stays below (tau_up <= tau_down)
    smoothing: float = 0.3    # exponential smoothing factor in (0, 1]
    eval_interval: int = 10   # steps between level re-evaluations

    def validate(self) -> "TrustSourceConfig":
        if self.mode not in MODES:
            raise InvalidParams(f"trust mode must be one of {MODES}, got {self.mode!r}")
        if self.window < 1:
            raise InvalidParams(f"window must be >= 1, got {self.window}")
        if self.tau_up > self.tau_down:
            raise InvalidParams(
                f"hysteresis requires tau_up <= tau_down, got {self.tau_up} > {self.tau_down}"
            )
        if not 0.0 < self.smoothing <= 1.0:
            raise InvalidParams(f"smoothing must be in (0, 1], got {self.smoothing}")
        if self.eval_interval < 1:
            raise InvalidParams(f"eval_interval must be >= 1, got {self.eval_interval}")
        return self


def trust_at(schedule: list, t: float, robot_ids, default_level: int = TRUST_LEVEL_MAX) -> TrustMap:
    """Resolve a schedule at time t: last event at or before t wins per robot.

    Piecewise constant and right-continuous; robots without events sit at
    `default_level`.
    """
    levels = {rid: default_level for rid in robot_ids}
    for ev in sorted(schedule, key=lambda e: e.time):
        if ev.time <= t and ev.robot_id in levels:
            levels[ev.robot_id] = ev.level
    return TrustMap.from_levels(levels)


class HeuristicEstimator:
    """Automated stand-in for a human rater, driven by velocity residuals.

    Each step the per-robot residual is its velocity's distance from the
    mean of its neighbors' velocities.  Every `eval_interval` steps the
    windowed residual is exponentially smoothed and the level walks one
    step down while above tau_down or one step up while below tau_up.
    Isolated robots keep their current level.
    """

    def __init__(self, cfg: TrustSourceConfig, robot_ids, start_level: int = TRUST_LEVEL_MAX):
        cfg.validate()
        self.cfg = cfg
        self.levels = {rid: start_level for rid in robot_ids}
        self._smoothed = {rid: 0.0 for rid in robot_ids}
        self._window = {rid: deque(maxlen=cfg.window) for rid in robot_ids}

    def observe(self, states: list, comm_radius: float, gains: dict | None = None) -> None:
        """Push one step of residuals.

        The neighbor mean is weighted by the current trust gains so an
        already-distrusted robot cannot poison its neighbors' residuals;
        with uniform gains this is the plain mean.
        """
        nbrs = neighbors(states, comm_radius)
        vels = {s.id: s.vel for s in states}
        for s in states:
            ids = sorted(nbrs[s.id])
            weights = [1.0 if gains is None else gains.get(j, 1.0) for j in ids]
            total = sum(weights)
            if not ids or total <= 0.0:
                continue
            mean = sum((w * vels[j] for w, j in zip(weights, ids)), start=np.zeros(3)) / total
            self._window[s.id].append(float(np.linalg.norm(s.vel - mean)))

    def evaluate(self) -> None:
        residuals = {
            rid: sum(window) / len(window)
            for rid, window in self._window.items()
            if window
        }
        self.apply_residuals(residuals)

    def apply_residuals(self, residuals: dict) -> None:
        """Hysteresis walk from raw windowed residuals (exposed for tests)."""
        alpha = self.cfg.smoothing
        for rid, r in residuals.items():
            smoothed = alpha * r + (1.0 - alpha) * self._smoothed[rid]
            self._smoothed[rid] = smoothed
            if smoothed > self.cfg.tau_down:
                self.levels[rid] = max(TRUST_LEVEL_MIN, self.levels[rid] - 1)
            elif smoothed < self.cfg.tau_up:
                self.levels[rid] = min(TRUST_LEVEL_MAX, self.levels[rid] + 1)

    def trust_map(self) -> TrustMap:
        return TrustMap.from_levels(self.levels)


def merge_trust(scripted: TrustMap, heuristic: TrustMap, live_overrides: dict, mode: str) -> TrustMap:
    """Combine trust sources: live overrides beat the active mode's map.

    Live mode with no overrides falls back to the scripted map (all default
    levels when the schedule is empty).
    """
    base = heuristic if mode == MODE_HEURISTIC else scripted
    levels = dict(base.level)
    levels.update(live_overrides)
    return TrustMap.from_levels(levels)


class TrustProvider:
    """Owns per-run trust state and applies source precedence each tick.

    Live overrides arrive via set_override/clear_override; the simulation
    loop is the sole caller, so overrides take effect exactly at tick
    boundaries and persist until explicitly cleared.
    """

    def __init__(self, cfg: TrustSourceConfig, schedule: list, robot_ids):
        self.cfg = cfg.validate()
        self.schedule = sorted(schedule, key=lambda e: e.time)
        self.robot_ids = list(robot_ids)
        self.estimator = (
            HeuristicEstimator(cfg, self.robot_ids) if cfg.mode == MODE_HEURISTIC else None
        )
        self.overrides = {}

    def set_override(self, robot_id: int, level: int) -> None:
        if not TRUST_LEVEL_MIN <= level <= TRUST_LEVEL_MAX:
            raise InvalidParams(f"trust level must be in 1..5, got {level}")
        self.overrides[robot_id] = level

    def clear_override(self, robot_id: int) -> None:
        self.overrides.pop(robot_id, None)

    def update(self, t: float, step_idx: int, states: list, comm_radius: float) -> TrustMap:
        scripted = trust_at(self.schedule, t, self.robot_ids)
        if self.estimator is not None:
            self.estimator.observe(states, comm_radius, self.estimator.trust_map().gain)
            if step_idx > 0 and step_idx % self.cfg.eval_interval == 0:
                self.estimator.evaluate()
            heuristic = self.estimator.trust_map()
        else:
            heuristic = scripted
        return merge_trust(scripted, heuristic, self.overrides, self.cfg.mode)
