import math

import numpy as np
import pytest

from dtasep import rng
from dtasep.disorder import sample_rates
from dtasep.engine import (ClockSchedule, SimulationRun, choose_window,
                           coupled_run, front_count, run, tagged_position,
                           write_event_log)
from dtasep.errors import WindowAuditError
from dtasep.measures import IIDGapSpec, jam_initial, sample_iid_gaps
from dtasep.state import ParticleConfig, gaps_to_particles


def pcfg(first, positions):
    return ParticleConfig(first_label=first, positions=np.array(positions))


# ------------------------------------------------------------ clock streams

def test_attempt_times_regenerate(bench_law):
    field = sample_rates(bench_law, 0, 5, seed=1)
    sched = ClockSchedule.from_field(44, field)
    a = sched.attempt_times(3, 20.0)
    b = sched.attempt_times(3, 20.0)
    assert np.array_equal(a, b)
    assert np.all(np.diff(a) > 0)
    # truncating the horizon gives a prefix of the same stream
    c = sched.attempt_times(3, 10.0)
    assert np.array_equal(c, a[:len(c)])


def test_fastening_raises_base_rates(bench_law):
    field = sample_rates(bench_law, 0, 50, seed=2)
    sched = ClockSchedule.from_field(1, field, fastening=0.9)
    assert sched.base_rates.min() >= 0.9


# -------------------------------------------------------------- basic runs

def test_free_particle_is_poisson():
    totals = []
    for i in range(200):
        sched = ClockSchedule.constant(seed=rng.derive(3, i), rate=1.0,
                                       first_label=0, last_label=0)
        sim = SimulationRun(pcfg(0, [0]), sched)
        run(sim, 100.0)
        totals.append(sim.positions[0])
    mean = np.mean(totals)
    assert abs(mean - 100.0) <= 3 * 10.0 / math.sqrt(200)
    assert abs(np.var(totals, ddof=1) - 100.0) < 40.0


def test_blocked_particle_never_moves():
    # right neighbor essentially never rings, so the left particle stays put
    sched = ClockSchedule(seed=9, base_rates=np.array([1.0, 1e-12]), first_label=0)
    sim = SimulationRun(pcfg(0, [0, 1]), sched)
    run(sim, 50.0)
    assert sim.positions == [0, 1]
    assert sim.attempt_count > 20
    assert sim.executed_count == 0


def test_replay_oracle(bench_law):
    # independent replay: gather all attempt times, sort, apply the rules
    field = sample_rates(bench_law, 0, 4, seed=7)
    sched = ClockSchedule.from_field(17, field)
    start = [0, 2, 3, 7, 10]
    sim = SimulationRun(pcfg(0, list(start)), sched, record_events=True)
    run(sim, 5.0)

    rings = []
    for lab in range(5):
        for t in sched.attempt_times(lab, 5.0):
            rings.append((t, lab))
    rings.sort()
    pos = list(start)
    log = []
    for t, lab in rings:
        ok = lab == 4 or pos[lab + 1] - pos[lab] >= 2
        if ok:
            pos[lab] += 1
        log.append((lab, t, ok))
    assert sim.positions == pos
    assert sim.event_log == log


def test_determinism_and_snapshots(bench_law):
    field = sample_rates(bench_law, -9, 0, seed=5)
    runs = []
    for _ in range(2):
        sched = ClockSchedule.from_field(23, field)
        sim = SimulationRun(jam_initial(10), sched)
        run(sim, 8.0, snapshot_times=(0.0, 4.0))
        runs.append(sim)
    assert runs[0].positions == runs[1].positions
    assert np.array_equal(runs[0].snapshots[4.0], runs[1].snapshots[4.0])
    assert runs[0].attempt_count == runs[1].attempt_count
    # snapshots are monotone along the trajectory
    assert np.all(runs[0].snapshots[4.0] >= runs[0].snapshots[0.0])
    assert np.all(np.asarray(runs[0].positions) >= runs[0].snapshots[4.0])


def test_incremental_advance_matches_single_shot(bench_law):
    field = sample_rates(bench_law, 0, 9, seed=6)
    gaps = sample_iid_gaps(IIDGapSpec(u=2.0, seed=1), 0, 8)
    cfg = gaps_to_particles(gaps)
    one = SimulationRun(cfg, ClockSchedule.from_field(31, field))
    run(one, 10.0)
    two = SimulationRun(cfg, ClockSchedule.from_field(31, field))
    for t in (1.0, 3.5, 7.25, 10.0):
        run(two, t)
    assert one.positions == two.positions


def test_event_accounting(bench_law):
    field = sample_rates(bench_law, 0, 9, seed=8)
    sim = SimulationRun(gaps_to_particles(
        sample_iid_gaps(IIDGapSpec(u=1.0, seed=2), 0, 8)),
        ClockSchedule.from_field(3, field), record_events=True,
        check_order=True)
    run(sim, 20.0)
    executed = sum(1 for _, _, ok in sim.event_log if ok)
    blocked = sum(1 for _, _, ok in sim.event_log if not ok)
    assert executed == sim.executed_count
    assert executed + blocked == sim.attempt_count
    # per-label conservation: displacement = attempts minus blocked attempts
    disp = np.asarray(sim.positions) - gaps_to_particles(
        sample_iid_gaps(IIDGapSpec(u=1.0, seed=2), 0, 8)).positions
    for lab in range(10):
        attempts = sum(1 for l, _, _ in sim.event_log if l == lab)
        jumps = sum(1 for l, _, ok in sim.event_log if l == lab and ok)
        blocked_lab = attempts - jumps
        assert disp[lab] == jumps == attempts - blocked_lab


def test_exclusion_order_preserved(bench_law):
    field = sample_rates(bench_law, 0, 19, seed=9)
    sim = SimulationRun(gaps_to_particles(
        sample_iid_gaps(IIDGapSpec(u=1.0, seed=3), 0, 18)),
        ClockSchedule.from_field(5, field), check_order=True)
    run(sim, 30.0)
    assert np.all(np.diff(sim.positions) >= 1)


# ---------------------------------------------------------------- couplings

def test_identical_twins_share_trajectory(bench_law):
    field = sample_rates(bench_law, -9, 0, seed=10)
    sched = ClockSchedule.from_field(6, field)
    a = SimulationRun(jam_initial(10), sched)
    b = SimulationRun(jam_initial(10), sched)
    coupled_run([a, b], 6.0)
    assert a.positions == b.positions


def test_basic_coupling_preserves_gap_order(bench_law):
    # sitewise-ordered gap starts stay ordered under shared clocks
    from dtasep.state import GapConfig
    field = sample_rates(bench_law, 0, 11, seed=11)
    sched = ClockSchedule.from_field(7, field)
    lean_gaps = sample_iid_gaps(IIDGapSpec(u=1.0, seed=4), 0, 10).gaps
    extra = sample_iid_gaps(IIDGapSpec(u=1.0, seed=5), 0, 10).gaps
    lean = SimulationRun(gaps_to_particles(GapConfig(0, lean_gaps, (0, 0))), sched)
    rich = SimulationRun(gaps_to_particles(GapConfig(0, lean_gaps + extra, (0, 0))), sched)

    def check(_t):
        assert np.all(lean.gaps() <= rich.gaps())

    coupled_run([lean, rich], 12.0, ring_callback=check)
    check(12.0)


def test_fastened_coupling_dominates(bench_law):
    # thinning realizes the slow process on the fast process's ring tape
    field = sample_rates(bench_law, 0, 11, seed=12)
    floor = 0.85
    sched = ClockSchedule.from_field(8, field, fastening=floor)
    cfg = gaps_to_particles(sample_iid_gaps(IIDGapSpec(u=1.0, seed=6), 0, 10))
    fast = SimulationRun(cfg, sched)
    slow = SimulationRun(cfg, sched, rates=field.rates)

    def check(_t):
        assert all(f >= s for f, s in zip(fast.positions, slow.positions))

    coupled_run([fast, slow], 12.0, ring_callback=check)
    check(12.0)
    assert fast.attempt_count >= slow.attempt_count


def test_coupled_validation(bench_law):
    field = sample_rates(bench_law, 0, 5, seed=13)
    s1 = ClockSchedule.from_field(1, field)
    s2 = ClockSchedule.from_field(1, field)
    a = SimulationRun(pcfg(0, [0, 2]), s1)
    b = SimulationRun(pcfg(0, [0, 2]), s2)
    with pytest.raises(ValueError, match="share"):
        coupled_run([a, b], 1.0)
    c = SimulationRun(pcfg(0, [0, 2]), s1)
    run(c, 1.0)
    with pytest.raises(ValueError, match="same time"):
        coupled_run([a, c], 2.0)


# ---------------------------------------------------- positions and fronts

def test_tagged_position_lookup(bench_law):
    field = sample_rates(bench_law, -4, 0, seed=14)
    sim = SimulationRun(jam_initial(5), ClockSchedule.from_field(9, field))
    run(sim, 5.0, snapshot_times=(0.0, 2.0))
    assert tagged_position(sim, 0, 0.0) == 0
    assert tagged_position(sim, 0, 5.0) == sim.positions[-1]
    assert tagged_position(sim, 0, 2.0) >= 0
    with pytest.raises(ValueError, match="snapshotted"):
        tagged_position(sim, 0, 3.3)


def test_front_count_edge_cases(bench_law):
    field = sample_rates(bench_law, -49, 0, seed=15)
    sim = SimulationRun(jam_initial(50), ClockSchedule.from_field(10, field))
    # at t = 0 the lead sits exactly at the edge: strict inequality gives 0
    assert front_count(sim, 0.0, bench_law.c) == 0
    run(sim, 20.0)
    x = front_count(sim, 20.0, bench_law.c)
    pos = np.asarray(sim.positions)
    assert x == int(np.sum(pos > bench_law.c * 20.0))


def test_front_count_window_audit(bench_law):
    field = sample_rates(bench_law, -1, 0, seed=16)
    sim = SimulationRun(jam_initial(2), ClockSchedule.from_field(11, field))
    run(sim, 200.0)  # both particles race far beyond c*t of a tiny window
    with pytest.raises(WindowAuditError):
        front_count(sim, 200.0, 0.01)


def test_front_count_matches_replay(bench_law):
    field = sample_rates(bench_law, -2, 0, seed=17)
    sched = ClockSchedule.from_field(12, field)
    sim = SimulationRun(jam_initial(3), sched)
    run(sim, 4.0)
    rings = []
    for lab in (-2, -1, 0):
        for t in sched.attempt_times(lab, 4.0):
            rings.append((t, lab))
    rings.sort()
    pos = {-2: -2, -1: -1, 0: 0}
    for t, lab in rings:
        if lab == 0 or pos[lab + 1] - pos[lab] >= 2:
            pos[lab] += 1
    hand = sum(1 for lab in pos if pos[lab] > bench_law.c * 4.0)
    assert front_count(sim, 4.0, bench_law.c) == hand


# --------------------------------------------------------------- windows

def test_choose_window_examples():
    assert choose_window(100.0, 2.0, "tagged") == (0, 200)
    lo, hi = choose_window(100.0, 2.0, "jam", speed=0.5, margin=0)
    assert hi == 0 and lo == -150  # n = ceil(1.5*100) + 1 = 151 particles
    with pytest.raises(ValueError):
        choose_window(10.0, 1.0, "tagged")
    with pytest.raises(ValueError):
        choose_window(10.0, 2.0, "jam")


def test_window_doubling_leaves_tagged_position_unchanged(bench_law):
    mismatches = 0
    for i in range(100):
        key = rng.derive(616, i)
        t = 5.0
        results = []
        for k_factor in (2.0, 4.0):
            lo, hi = choose_window(t, k_factor, "tagged")
            field = sample_rates(bench_law, lo, hi, seed=key)
            gaps = sample_iid_gaps(IIDGapSpec(u=2.0, seed=rng.derive(key, 1)),
                                   lo, hi - 1)
            sim = SimulationRun(gaps_to_particles(gaps),
                                ClockSchedule.from_field(rng.derive(key, 2), field))
            run(sim, t)
            results.append(sim.positions[0])
        mismatches += results[0] != results[1]
    assert mismatches == 0


def test_schedule_must_cover_run(bench_law):
    field = sample_rates(bench_law, 0, 3, seed=18)
    sched = ClockSchedule.from_field(1, field)
    with pytest.raises(ValueError, match="cover"):
        SimulationRun(pcfg(0, [0, 1, 2, 3, 4]), sched)


# -------------------------------------------------------- jam calibration

def test_jam_lead_is_free_poisson():
    # constant unit rates: the lead particle of a jam is a plain Poisson
    # process while trailing particles lag behind the same horizon
    leads, thirds = [], []
    t = 30.0
    for i in range(300):
        sched = ClockSchedule.constant(seed=rng.derive(77, i), rate=1.0,
                                       first_label=-9, last_label=0)
        sim = SimulationRun(jam_initial(10), sched)
        run(sim, t)
        leads.append(sim.positions[-1])
        thirds.append(sim.positions[-3])
    assert abs(np.mean(leads) - t) <= 3 * math.sqrt(t / 300)
    assert np.mean(thirds) < t - 2.0  # exclusion drag behind the lead


def test_event_log_export(tmp_path, bench_law):
    field = sample_rates(bench_law, 0, 2, seed=19)
    sim = SimulationRun(pcfg(0, [0, 1, 5]),
                        ClockSchedule.from_field(2, field), record_events=True)
    run(sim, 3.0)
    path = tmp_path / "events.csv"
    write_event_log(sim, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "label,time,executed"
    assert len(lines) == 1 + len(sim.event_log)


def test_observers_fire_at_scheduled_times(bench_law):
    field = sample_rates(bench_law, 0, 4, seed=20)
    sim = SimulationRun(pcfg(0, [0, 2, 4, 6, 8]),
                        ClockSchedule.from_field(13, field))
    run(sim, 10.0, observers=[(2.5, lambda r: r.position(0)),
                              (7.5, lambda r: r.executed_count)])
    assert [t for t, _ in sim.observations] == [2.5, 7.5]
    assert sim.observations[0][1] <= sim.position(0)
    assert sim.observations[1][1] <= sim.executed_count
