"""Motor-degradation actuator model applied to designated robots on schedule."""

import math
from dataclasses import dataclass

import numpy as np

from .model import DIRECTION_EPS, InvalidParams

SIDE_LEFT = "left"
SIDE_RIGHT = "right"


@dataclass
class FaultProfile:
    """A persistent motor fault: lateral velocity offset plus a speed cap."""

    robot_id: int
    onset_time: float = 0.0
    speed_cap_fraction: float = 0.4   # kappa, fraction of u_max
    lateral_offset: float = 0.3       # m/s, perpendicular to commanded velocity
    offset_side: str = SIDE_LEFT

    def validate(self) -> "FaultProfile":
        if self.onset_time < 0.0:
            raise InvalidParams(f"onset_time must be >= 0, got {self.onset_time}")
        if not 0.0 < self.speed_cap_fraction <= 1.0:
            raise InvalidParams(
                f"speed_cap_fraction must be in (0, 1], got {self.speed_cap_fraction}"
            )
        if self.lateral_offset < 0.0:
            raise InvalidParams(f"lateral_offset must be >= 0, got {self.lateral_offset}")
        if self.offset_side not in (SIDE_LEFT, SIDE_RIGHT):
            raise InvalidParams(f"offset_side must be left or right, got {self.offset_side!r}")
        return self

    def active(self, t: float) -> bool:
        return t >= self.onset_time


def apply_degradation(
    v_cmd: np.ndarray,
    profile: FaultProfile,
    u_max: float,
    t: float,
    heading: float = 0.0,
) -> np.ndarray:
    """Corrupt a commanded velocity at the actuator stage.

    Before onset the command passes through untouched.  After onset a fixed
    horizontal offset is added perpendicular to the commanded direction
    (left = +90 degrees counterclockwise) and the result is rescaled onto
    the degraded speed cap kappa * u_max whenever it exceeds it.  A near-zero
    horizontal command borrows the robot's stored heading for the offset
    direction.
    """
    if not profile.active(t):
        return v_cmd
    v = np.asarray(v_cmd, dtype=float)
    hx, hy = float(v[0]), float(v[1])
    hnorm = math.hypot(hx, hy)
    if hnorm < DIRECTION_EPS:
        ux, uy = math.cos(heading), math.sin(heading)
    else:
        ux, uy = hx / hnorm, hy / hnorm
    if profile.offset_side == SIDE_LEFT:
        nx, ny = -uy, ux
    else:
        nx, ny = uy, -ux
    out = v + profile.lateral_offset * np.array([nx, ny, 0.0])
    cap = profile.speed_cap_fraction * u_max
    norm = float(np.linalg.norm(out))
    if norm > cap:
        out = out * (cap / norm)
    return out
