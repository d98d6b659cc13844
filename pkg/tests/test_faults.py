import math

import numpy as np
import pytest

from trustflock.faults import FaultProfile, apply_degradation
from trustflock.model import InvalidParams, vec3


def profile(**kw):
    defaults = dict(robot_id=3, onset_time=10.0, speed_cap_fraction=0.4,
                    lateral_offset=0.3, offset_side="left")
    defaults.update(kw)
    return FaultProfile(**defaults)


class TestApplyDegradation:
    def test_identity_before_onset(self):
        v = vec3(1.2, -0.4, 0.1)
        out = apply_degradation(v, profile(), u_max=2.0, t=9.99)
        assert out is v  # untouched, bit-exact

    def test_offset_and_rescale(self):
        # (1, 0, 0) + 0.3 left -> (1, 0.3, 0), norm 1.04403 over cap 0.8
        out = apply_degradation(vec3(1, 0, 0), profile(onset_time=0.0), u_max=2.0, t=5.0)
        norm = math.sqrt(1.0 + 0.09)
        expected = np.array([0.8 / norm, 0.8 * 0.3 / norm, 0.0])
        assert np.allclose(out, expected, atol=1e-12)
        assert np.allclose(out, [0.76626, 0.22988, 0.0], atol=1e-5)

    def test_no_clamp_below_cap(self):
        out = apply_degradation(
            vec3(0.2, 0, 0),
            profile(onset_time=0.0, speed_cap_fraction=0.7, lateral_offset=0.1),
            u_max=2.0, t=1.0,
        )
        assert np.allclose(out, [0.2, 0.1, 0.0], atol=1e-12)
        assert np.linalg.norm(out) < 1.4

    def test_right_side_flips_sign(self):
        left = apply_degradation(vec3(1, 0, 0), profile(onset_time=0.0), 2.0, 1.0)
        right = apply_degradation(
            vec3(1, 0, 0), profile(onset_time=0.0, offset_side="right"), 2.0, 1.0
        )
        assert left[1] > 0.0
        assert right[1] < 0.0
        assert left[1] == pytest.approx(-right[1], abs=1e-15)

    def test_hover_uses_stored_heading(self):
        out = apply_degradation(
            vec3(0, 0, 0), profile(onset_time=0.0), 2.0, 1.0, heading=0.0
        )
        # left of heading 0 is +y
        assert out[0] == pytest.approx(0.0, abs=1e-12)
        assert out[1] == pytest.approx(0.3, abs=1e-12)

    def test_vertical_component_survives_offset(self):
        out = apply_degradation(
            vec3(0.3, 0, 0.2),
            profile(onset_time=0.0, speed_cap_fraction=0.7),
            2.0, 1.0,
        )
        assert out[2] == pytest.approx(0.2, abs=1e-12)

    def test_cap_always_holds_after_onset(self):
        rng = np.random.default_rng(11)
        for _ in range(2000):
            v = vec3(*rng.uniform(-2, 2, size=3))
            kappa = float(rng.uniform(0.1, 1.0))
            out = apply_degradation(
                v, profile(onset_time=0.0, speed_cap_fraction=kappa), 2.0, 1.0
            )
            assert np.linalg.norm(out) <= kappa * 2.0 + 1e-12

    def test_consistent_turn_direction(self):
        # The actuated velocity always sits on the offset side of the command.
        rng = np.random.default_rng(3)
        for side, sign in (("left", 1.0), ("right", -1.0)):
            for _ in range(500):
                v = vec3(*rng.uniform(-1.5, 1.5, size=2), 0.0)
                if math.hypot(v[0], v[1]) < 1e-6:
                    continue
                out = apply_degradation(
                    v, profile(onset_time=0.0, offset_side=side, speed_cap_fraction=0.9),
                    2.0, 1.0,
                )
                cross = v[0] * out[1] - v[1] * out[0]
                assert sign * cross > 0.0


class TestFaultProfile:
    def test_validation(self):
        with pytest.raises(InvalidParams):
            profile(onset_time=-1.0).validate()
        with pytest.raises(InvalidParams):
            profile(speed_cap_fraction=0.0).validate()
        with pytest.raises(InvalidParams):
            profile(speed_cap_fraction=1.2).validate()
        with pytest.raises(InvalidParams):
            profile(offset_side="up").validate()
        profile().validate()

    def test_active_window(self):
        p = profile(onset_time=4.0)
        assert not p.active(3.999)
        assert p.active(4.0)
        assert p.active(100.0)
