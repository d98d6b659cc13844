import numpy as np
import pytest

from trustflock.model import InvalidParams, RobotState, TrustMap, vec3
from trustflock.trust import (
    HeuristicEstimator,
    TrustEvent,
    TrustProvider,
    TrustSourceConfig,
    merge_trust,
    trust_at,
)

IDS = [0, 1, 2]


class TestTrustAt:
    def test_empty_schedule_defaults_to_full_trust(self):
        tm = trust_at([], 10.0, IDS)
        assert all(tm.level_of(i) == 5 for i in IDS)
        assert all(tm.gain_of(i) == 1.0 for i in IDS)

    def test_event_not_yet_active(self):
        tm = trust_at([TrustEvent(20.0, 2, 1)], 19.9, IDS)
        assert tm.level_of(2) == 5

    def test_last_event_wins(self):
        schedule = [TrustEvent(20.0, 2, 2), TrustEvent(40.0, 2, 1)]
        tm = trust_at(schedule, 30.0, IDS)
        assert tm.level_of(2) == 2
        assert tm.gain_of(2) == 0.25

    def test_right_continuous(self):
        schedule = [TrustEvent(20.0, 2, 2)]
        assert trust_at(schedule, 20.0, IDS).level_of(2) == 2

    def test_piecewise_constant(self):
        schedule = [TrustEvent(5.0, 0, 3), TrustEvent(9.0, 0, 1)]
        levels = [trust_at(schedule, t, IDS).level_of(0) for t in np.arange(0, 12, 0.5)]
        assert levels == sorted(levels, reverse=True)
        assert set(levels) == {5, 3, 1}


class TestHeuristicEstimator:
    def cfg(self, **kw):
        base = dict(mode="heuristic", window=5, tau_down=0.15, tau_up=0.05,
                    smoothing=1.0, eval_interval=1)
        base.update(kw)
        return TrustSourceConfig(**base)

    def test_hysteresis_band_never_moves_levels(self):
        est = HeuristicEstimator(self.cfg(), IDS)
        for r in (0.08, 0.12, 0.06, 0.14, 0.1) * 20:
            est.apply_residuals({i: r for i in IDS})
        assert all(est.levels[i] == 5 for i in IDS)

    def test_persistent_deviation_walks_to_floor(self):
        est = HeuristicEstimator(self.cfg(), IDS)
        for _ in range(4):
            est.apply_residuals({0: 0.3})
        assert est.levels[0] == 1
        assert est.levels[1] == 5

    def test_recovery_after_repair(self):
        est = HeuristicEstimator(self.cfg(), IDS)
        for _ in range(4):
            est.apply_residuals({0: 0.3})
        assert est.levels[0] == 1
        for _ in range(4):
            est.apply_residuals({0: 0.0})
        assert est.levels[0] == 5

    def test_perfect_consensus_stays_at_ceiling(self):
        states = [RobotState(id=i, pos=vec3(i, 0, 5), vel=vec3(1, 0, 0)) for i in IDS]
        est = HeuristicEstimator(self.cfg(), IDS)
        for _ in range(30):
            est.observe(states, comm_radius=15.0)
            est.evaluate()
        assert all(est.levels[i] == 5 for i in IDS)

    def test_isolated_robot_keeps_level(self):
        est = HeuristicEstimator(self.cfg(), IDS)
        for _ in range(3):
            est.apply_residuals({0: 0.5})
        level = est.levels[0]
        isolated = [RobotState(id=0, pos=vec3(0, 0, 5), vel=vec3(9, 9, 0))]
        for _ in range(10):
            est.observe(isolated, comm_radius=15.0)
            est.evaluate()
        assert est.levels[0] == level

    def test_lateral_deviation_detected_on_synthetic_trace(self):
        # one robot holds a 0.3 m/s sideways component against the flock
        states = [
            RobotState(id=i, pos=vec3(2 * i, 0, 5),
                       vel=vec3(1, 0.3 if i == 0 else 0.0, 0))
            for i in IDS
        ]
        est = HeuristicEstimator(self.cfg(smoothing=0.3, window=10, eval_interval=10), IDS)
        levels_seen = []
        for step in range(200):
            est.observe(states, comm_radius=15.0)
            if step and step % 10 == 0:
                est.evaluate()
                levels_seen.append(est.levels[0])
        assert est.levels[0] == 1
        assert levels_seen == sorted(levels_seen, reverse=True)
        assert est.levels[1] == 5 and est.levels[2] == 5

    def test_hysteresis_config_enforced(self):
        with pytest.raises(InvalidParams):
            TrustSourceConfig(tau_up=0.2, tau_down=0.1).validate()


class TestMergeTrust:
    def test_scripted_mode_passthrough(self):
        scripted = TrustMap.from_levels({0: 2, 1: 5})
        heur = TrustMap.from_levels({0: 4, 1: 4})
        out = merge_trust(scripted, heur, {}, "scripted")
        assert out.level == scripted.level

    def test_heuristic_mode_uses_estimates(self):
        scripted = TrustMap.from_levels({0: 2, 1: 5})
        heur = TrustMap.from_levels({0: 4, 1: 4})
        out = merge_trust(scripted, heur, {}, "heuristic")
        assert out.level == heur.level

    def test_override_wins_everywhere(self):
        scripted = TrustMap.from_levels({0: 5, 1: 5})
        heur = TrustMap.from_levels({0: 5, 1: 5})
        for mode in ("scripted", "heuristic", "live"):
            out = merge_trust(scripted, heur, {1: 1}, mode)
            assert out.level_of(1) == 1
            assert out.gain_of(1) == 0.0


class TestTrustProvider:
    def states(self):
        return [RobotState(id=i, pos=vec3(i, 0, 5), vel=vec3(1, 0, 0)) for i in IDS]

    def test_override_persists_until_cleared(self):
        provider = TrustProvider(TrustSourceConfig(), [], IDS)
        provider.set_override(2, 1)
        assert provider.update(0.0, 0, self.states(), 15.0).level_of(2) == 1
        assert provider.update(5.0, 50, self.states(), 15.0).level_of(2) == 1
        provider.clear_override(2)
        assert provider.update(5.1, 51, self.states(), 15.0).level_of(2) == 5

    def test_override_level_validated(self):
        provider = TrustProvider(TrustSourceConfig(), [], IDS)
        with pytest.raises(InvalidParams):
            provider.set_override(0, 9)

    def test_scripted_schedule_applies(self):
        provider = TrustProvider(TrustSourceConfig(), [TrustEvent(1.0, 0, 2)], IDS)
        assert provider.update(0.5, 5, self.states(), 15.0).level_of(0) == 5
        assert provider.update(1.0, 10, self.states(), 15.0).level_of(0) == 2
