"""Acceptance suite: one test per shipped criterion, at fixed tolerances.

Each test prints a single PASS/FAIL line so a plain `pytest -s
tests/test_acceptance.py` reads as a checklist.
"""

import json
import math
import time

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from trustflock.cli import main as cli_main
from trustflock.comms import comm_quality, weight_vector
from trustflock.control import ControlMethod, VirtualLeader, step_swarm
from trustflock.model import RobotState, SwarmParams, TrustMap, vec3
from trustflock.scenario import Simulation, builtin_scenario, compute_metrics, run
from trustflock.service import SimSession, build_app
from trustflock.telemetry import RUN_FILES, read_run, write_run


def report(criterion: str, ok: bool, detail: str = "") -> None:
    print(f"{'PASS' if ok else 'FAIL'} {criterion}" + (f" -- {detail}" if detail else ""))
    assert ok, f"{criterion}: {detail}"


def fault_free(name, method="avg"):
    spec = builtin_scenario(name)
    spec.fault_profiles = []
    spec.trust_schedule = []
    spec.method = method
    return spec


def faulty(name, method, kappa):
    spec = builtin_scenario(name)
    spec.method = method
    for profile in spec.fault_profiles:
        profile.speed_cap_fraction = kappa
    return spec


@pytest.fixture(scope="module")
def condition_metrics():
    """All eight scenario x severity x method runs, shared across criteria."""
    out = {}
    for name in ("1", "2"):
        for kappa in (0.4, 0.7):
            for method in ("avg", "trust-r"):
                record = run(faulty(name, method, kappa))
                out[(name, kappa, method)] = record.metrics
    return out


def test_p1_consensus_sanity():
    rng = np.random.default_rng(42)
    params = SwarmParams()
    states = [
        RobotState(id=i, pos=vec3(5.0 * i, 0, params.altitude_hold),
                   vel=vec3(*rng.uniform(-1, 1, 2), 0.0))
        for i in range(6)
    ]
    leader = VirtualLeader(pos=vec3(0, 0, params.altitude_hold), vel=vec3())
    trust = TrustMap.uniform(range(6))
    started = time.monotonic()
    diameter = None
    steps = 0
    for k in range(2000):
        vels = [s.vel for s in states]
        d = max(float(np.linalg.norm(vels[i] - vels[j]))
                for i in range(6) for j in range(i + 1, 6))
        monotone = diameter is None or d <= diameter + 1e-12
        assert monotone, f"diameter grew at step {k}: {d} > {diameter}"
        diameter = d
        if d < 1e-6:
            break
        states, leader = step_swarm(states, trust, leader, vec3(), vec3(),
                                    ControlMethod.AVERAGED, params, {}, k * params.dt)
        steps = k + 1
    elapsed = time.monotonic() - started
    ok = diameter < 1e-6 and steps <= 2000 and elapsed < 1.0
    report("P1 consensus sanity", ok,
           f"diff {diameter:.2e} after {steps} steps in {elapsed:.2f}s")


def test_p2_uniform_trust_equivalence():
    started = time.monotonic()
    sim_avg = Simulation(fault_free("1", "avg"))
    sim_tr = Simulation(fault_free("1", "trust-r"))
    gap = 0.0
    while not sim_avg.done:
        for a, b in zip(sim_avg.states, sim_tr.states):
            gap = max(gap, float(np.max(np.abs(a.pos - b.pos))),
                      float(np.max(np.abs(a.vel - b.vel))))
        sim_avg.tick()
        sim_tr.tick()
    elapsed = time.monotonic() - started
    ok = gap <= 1e-9 and elapsed < 5.0
    report("P2 uniform-trust equivalence", ok, f"max gap {gap:.2e} in {elapsed:.2f}s")


def test_p3_edge_quality_kernel():
    params = SwarmParams(abandon_at_zero_trust=False)
    rho, radius = params.best_quality_dist, params.comm_radius
    eta, gamma = params.quality_weight, params.decay_gain

    def oracle(d, g_i, g_j):
        if d >= radius:
            return 0.0
        base = 0.5 * (g_i + g_j) * eta
        if d <= rho:
            return base
        return base * math.exp(-gamma * (d - rho) / (radius - rho))

    rng = np.random.default_rng(1234)
    worst = 0.0
    for _ in range(10_000):
        d = float(rng.uniform(0.0, 2.0 * radius))
        g_i, g_j = (float(g) for g in rng.uniform(0.0, 1.0, 2))
        pi, pj = vec3(0, 0, 0), vec3(d, 0, 0)
        got = comm_quality(pi, pj, g_i, g_j, params)
        worst = max(worst, abs(got - oracle(d, g_i, g_j)))
        assert got == comm_quality(pj, pi, g_j, g_i, params)
        assert 0.0 <= got <= eta
    jump = abs(
        comm_quality(vec3(), vec3(rho, 0, 0), 1.0, 1.0, params)
        - comm_quality(vec3(), vec3(rho + 1e-13, 0, 0), 1.0, 1.0, params)
    )
    ok = worst <= 1e-12 and jump <= 1e-12
    report("P3 edge-quality kernel", ok, f"max |err| {worst:.2e}, rho jump {jump:.2e}")


def test_p4_weight_normalization():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(10_000):
        n = int(rng.integers(0, 8))
        f_self = float(rng.uniform(0, 1))
        f_nb = {j: float(rng.uniform(0, 1)) for j in range(n)}
        w = weight_vector(f_self, f_nb)
        total = w.self_weight + sum(w.neighbor_weights.values())
        if not (w.self_weight == 1.0 and not any(w.neighbor_weights.values())):
            worst = max(worst, abs(total - 1.0))
    uniform = weight_vector(0.7, {j: 0.7 for j in range(4)})
    uniform_ok = abs(uniform.self_weight - 0.2) <= 1e-12 and all(
        abs(v - 0.2) <= 1e-12 for v in uniform.neighbor_weights.values()
    )
    degenerate = weight_vector(0.0, {0: 0.0, 1: 0.0})
    ok = worst <= 1e-12 and uniform_ok and degenerate.self_weight == 1.0
    report("P4 weight normalization", ok, f"max |sum-1| {worst:.2e}")


def test_p5_fault_free_tracking():
    worst_err, worst_dist = 0.0, 0.0
    slowest = 0.0
    for name in ("1", "2"):
        for method in ("avg", "trust-r"):
            started = time.monotonic()
            record = run(fault_free(name, method))
            slowest = max(slowest, time.monotonic() - started)
            metrics = record.metrics
            for leg in metrics["legs"]:
                worst_err = max(worst_err, abs(leg["heading_error_deg"]))
            # scenario 2's first target is abandoned mid-leg by design;
            # reached targets must be hit to within a meter
            dists = [leg["final_distance_m"] for leg in metrics["legs"]]
            checked = dists if name == "1" else dists[-1:]
            worst_dist = max(worst_dist, max(checked))
    ok = worst_err <= 2.0 and worst_dist <= 1.0 and slowest < 10.0
    report("P5 fault-free tracking", ok,
           f"worst |heading err| {worst_err:.2f} deg, worst distance {worst_dist:.2f} m, "
           f"slowest run {slowest:.2f}s")


def test_p6_repair_ordering(condition_metrics):
    details = []
    ok = True
    for name in ("1", "2"):
        for kappa in (0.4, 0.7):
            avg = condition_metrics[(name, kappa, "avg")]
            tr = condition_metrics[(name, kappa, "trust-r")]
            he_avg = avg["heading_error_deg"]
            he_tr = tr["heading_error_deg"]
            fd_avg = avg["final_distance_m"]
            fd_tr = tr["final_distance_m"]
            cond = (
                fd_tr <= 0.5 * fd_avg
                and abs(he_tr) <= 10.0
                and abs(he_avg) >= 15.0
                and he_avg < 0.0  # shipped faults pull right, matching the sign pattern
            )
            ok = ok and cond
            details.append(
                f"s{name}/k{kappa}: avg {he_avg:+.1f}deg/{fd_avg:.1f}m "
                f"tr {he_tr:+.1f}deg/{fd_tr:.1f}m"
            )
    report("P6 repair ordering", ok, "; ".join(details))


def test_p7_severity_monotonicity(condition_metrics):
    details = []
    ok = True
    for name in ("1", "2"):
        hard = condition_metrics[(name, 0.4, "avg")]["final_distance_m"]
        mild = condition_metrics[(name, 0.7, "avg")]["final_distance_m"]
        ok = ok and hard >= mild
        details.append(f"s{name}: k0.4 {hard:.2f} m >= k0.7 {mild:.2f} m")
    report("P7 severity monotonicity", ok, "; ".join(details))


def test_p8_heuristic_trust():
    spec = builtin_scenario("1")
    spec.method = "trust-r"
    spec.trust.mode = "heuristic"
    spec.trust_schedule = []
    transition_t = spec.transition.time
    sim = Simulation(spec)
    faulty_before_transition = 5
    min_healthy = 5
    while not sim.done:
        for rid in range(6):
            level = sim.trust.level_of(rid)
            if rid == 3:
                if sim.t < transition_t:
                    faulty_before_transition = level
            else:
                min_healthy = min(min_healthy, level)
        sim.tick()
    ok = faulty_before_transition <= 2 and min_healthy >= 4
    report("P8 heuristic trust", ok,
           f"faulty at transition: level {faulty_before_transition}, "
           f"min healthy level {min_healthy}")


def test_p9_determinism_and_persistence(tmp_path):
    spec_a = builtin_scenario("1")
    spec_b = builtin_scenario("1")
    rec_a = run(spec_a)
    rec_b = run(spec_b)
    write_run(rec_a, tmp_path / "a")
    write_run(rec_b, tmp_path / "b")
    bytes_equal = all(
        (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        for name in RUN_FILES
    )
    round_trip = read_run(tmp_path / "a") == rec_a
    ok = bytes_equal and round_trip
    report("P9 determinism & persistence", ok,
           f"byte-identical files: {bytes_equal}, round-trip exact: {round_trip}")


def test_p10_batch_table():
    started = time.monotonic()
    result = CliRunner().invoke(cli_main, ["batch", "--seed", "7"])
    elapsed = time.monotonic() - started
    rows = [line for line in result.output.splitlines() if line.startswith("scenario")]
    ok = result.exit_code == 0 and len(rows) == 8 and elapsed < 120.0
    report("P10 batch table", ok, f"{len(rows)} rows in {elapsed:.1f}s")


def test_s1_live_loop_integration():
    # Control: same seed and fault, live source but nobody supervising.
    control_spec = builtin_scenario("1")
    control_spec.method = "trust-r"
    control_spec.trust.mode = "live"
    control_spec.trust_schedule = []
    control_final = run(control_spec).metrics["final_distance_m"]

    live_spec = builtin_scenario("1")
    live_spec.method = "trust-r"
    live_spec.trust.mode = "live"
    live_spec.trust_schedule = []
    sim = Simulation(live_spec)
    session = SimSession(sim, pace=8.0, snapshot_every=5)
    app = build_app(session)
    session.start()
    received_at = []
    override_confirmed = False
    rated = False
    try:
        with TestClient(app).websocket_connect("/ws") as ws:
            deadline = time.monotonic() + 60.0
            while time.monotonic() < deadline:
                msg = json.loads(ws.receive_text())
                if msg.get("type") != "snapshot":
                    continue
                received_at.append(time.monotonic())
                if not rated:
                    ws.send_text('{"v":1,"type":"set_trust","robot_id":3,"level":1}')
                    rated = True
                robot3 = [r for r in msg["robots"] if r["id"] == 3][0]
                if robot3["trust_gain"] == 0.0 and not override_confirmed:
                    edges_zero = all(
                        e["quality"] == 0.0 for e in msg["edges"] if 3 in (e["i"], e["j"])
                    )
                    override_confirmed = edges_zero
                if msg.get("done"):
                    break
    finally:
        session.stop()
        session.join(10.0)

    spans = [b - a for a, b in zip(received_at, received_at[1:])]
    rate_ok = bool(spans) and (len(received_at) / max(sum(spans), 1e-9)) >= 2.0
    live_final = session.record.metrics["final_distance_m"]
    ok = rate_ok and override_confirmed and live_final < control_final
    report("S1 live loop integration", ok,
           f"snapshot rate ok: {rate_ok}, override seen: {override_confirmed}, "
           f"final {live_final:.2f} m vs control {control_final:.2f} m")
