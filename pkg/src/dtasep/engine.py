"""Exact continuous-time dynamics via per-particle Poisson attempt streams.

Each clock label carries an attempt stream with Exp(base_rate) spacings drawn
from counter-based uniforms, so the stream at a label depends only on
(seed, label) and can be regenerated or shared at will. Every ring is
processed whether or not the jump is blocked; couplings share rings, not
jumps. A process whose own rate at a label sits below the base rate sees
only a thinned subset of that label's rings, decided by a second
counter-based stream, which realizes rate-dominated couplings on one ring
tape.

Runs hold finite label windows. The maximal stored label is treated as
unblocked: for a jam that particle is genuinely free, and for a tagged-mode
window this makes the tracked positions stochastically larger by at most
what the window audit bounds.

Simultaneous ring times have probability zero; if float rounding ever
produces one, the lower label rings first (heap order on (time, label)).
"""

from __future__ import annotations

import csv
import heapq
import math
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import rng
from .disorder import DisorderField
from .errors import WindowAuditError
from .state import ParticleConfig

_RATE_SLACK = 1e-12


class ClockSchedule:
    """Per-label Poisson attempt streams, shareable across coupled runs.

    base_rates[i] is the attempt rate of clock label first_label + i.
    Spacings and thinning marks are pure functions of (seed, label, k).
    """

    def __init__(self, seed: int, base_rates: np.ndarray, first_label: int):
        rates = np.asarray(base_rates, dtype=float)
        if rates.ndim != 1 or len(rates) == 0:
            raise ValueError("base_rates must be a nonempty 1-d array")
        if np.any(rates <= 0.0):
            raise ValueError("attempt rates must be positive")
        self.seed = seed
        self.first_label = int(first_label)
        self.base_rates = rates
        self.base_rates.setflags(write=False)
        self._spacing_root = rng.derive(seed, rng.STREAM_CLOCK)
        self._thin_root = rng.derive(seed, rng.STREAM_THIN)

    @classmethod
    def from_field(cls, seed: int, field: DisorderField,
                   fastening: Optional[float] = None) -> "ClockSchedule":
        rates = np.asarray(field.rates, dtype=float)
        if fastening is not None:
            rates = np.maximum(rates, fastening)
        return cls(seed, rates, field.first_label)

    @classmethod
    def constant(cls, seed: int, rate: float, first_label: int,
                 last_label: int) -> "ClockSchedule":
        n = last_label - first_label + 1
        return cls(seed, np.full(n, float(rate)), first_label)

    @property
    def last_label(self) -> int:
        return self.first_label + len(self.base_rates) - 1

    def covers(self, first: int, last: int) -> bool:
        return self.first_label <= first and last <= self.last_label

    def base_rate(self, label: int) -> float:
        return float(self.base_rates[label - self.first_label])

    def spacing_key(self, label: int) -> int:
        return rng.derive(self._spacing_root, label)

    def thinning_key(self, label: int) -> int:
        return rng.derive(self._thin_root, label)

    def attempt_times(self, label: int, until: float) -> np.ndarray:
        """All attempt times of one label in (0, until]; test/audit helper."""
        key = self.spacing_key(label)
        rate = self.base_rate(label)
        out = []
        t, k = 0.0, 0
        while True:
            t -= math.log(rng.uniform(key, k)) / rate
            if t > until:
                return np.array(out)
            out.append(t)
            k += 1


class SimulationRun:
    """One exclusion process over a finite label window.

    positions[i] is the site of particle first_label + i. The run's own
    rates may sit at or below the schedule's base rates (thinning); its
    clock_offset shifts which clock stream each particle reads: particle
    label j takes attempts from clock label j + clock_offset.
    """

    def __init__(self, config: ParticleConfig, schedule: ClockSchedule,
                 rates: Optional[np.ndarray] = None, clock_offset: int = 0,
                 watch_labels: Iterable[int] = (), record_events: bool = False,
                 check_order: bool = False):
        self.schedule = schedule
        self.first_label = config.first_label
        self.last_label = config.last_label
        self.clock_offset = int(clock_offset)
        if not schedule.covers(self.first_label + self.clock_offset,
                               self.last_label + self.clock_offset):
            raise ValueError(
                "schedule window [%d, %d] does not cover run labels [%d, %d] "
                "at clock offset %d"
                % (schedule.first_label, schedule.last_label,
                   self.first_label, self.last_label, self.clock_offset))
        n = len(config)
        base = [schedule.base_rate(self.first_label + i + self.clock_offset)
                for i in range(n)]
        if rates is None:
            own = list(base)
        else:
            own = [float(r) for r in np.asarray(rates, dtype=float)]
            if len(own) != n:
                raise ValueError("rates length must match the label window")
            for i, (r, b) in enumerate(zip(own, base)):
                if r > b + _RATE_SLACK:
                    raise ValueError(
                        f"own rate {r} at label {self.first_label + i} exceeds "
                        f"base attempt rate {b}")
        self.rates = own
        self._base = base
        self.positions = [int(p) for p in config.positions]
        self.now = 0.0
        self.attempt_count = 0   # rings seen by this run (after thinning)
        self.executed_count = 0  # rings that moved a particle
        self.snapshots: dict[float, np.ndarray] = {}
        self.observations: list[tuple[float, object]] = []
        self.jump_times: dict[int, list[float]] = {int(l): [] for l in watch_labels}
        self.event_log: Optional[list[tuple[int, float, bool]]] = [] if record_events else None
        self.check_order = check_order
        self._driver: Optional["_Driver"] = None

    def __len__(self) -> int:
        return len(self.positions)

    def particle_config(self) -> ParticleConfig:
        return ParticleConfig(first_label=self.first_label,
                              positions=np.array(self.positions, dtype=np.int64))

    def position(self, label: int) -> int:
        return self.positions[label - self.first_label]

    def gaps(self) -> np.ndarray:
        return np.diff(np.asarray(self.positions, dtype=np.int64)) - 1

    def clock_window(self) -> tuple[int, int]:
        return (self.first_label + self.clock_offset,
                self.last_label + self.clock_offset)

    # -- ring handling -----------------------------------------------------

    def _on_ring(self, t: float, clock_label: int, k: int,
                 thin_u: Optional[float]) -> None:
        plabel = clock_label - self.clock_offset
        if plabel < self.first_label or plabel > self.last_label:
            return
        idx = plabel - self.first_label
        rate = self.rates[idx]
        base = self._base[idx]
        if rate < base:
            u = (rng.uniform(self.schedule.thinning_key(clock_label), k)
                 if thin_u is None else thin_u)
            if u * base > rate:
                return  # ring belongs to the faster twin only
        self.attempt_count += 1
        pos = self.positions
        executed = idx == len(pos) - 1 or pos[idx + 1] - pos[idx] >= 2
        if executed:
            pos[idx] += 1
            self.executed_count += 1
            if self.check_order and idx + 1 < len(pos):
                assert pos[idx] < pos[idx + 1], "exclusion ordering violated"
            if plabel in self.jump_times:
                self.jump_times[plabel].append(t)
        if self.event_log is not None:
            self.event_log.append((plabel, t, executed))


class _Driver:
    """Merged attempt-time cursor over a clock-label window."""

    def __init__(self, schedule: ClockSchedule, first: int, last: int,
                 start: float = 0.0):
        if not schedule.covers(first, last):
            raise ValueError("driver window outside schedule coverage")
        self.schedule = schedule
        self.first = first
        n = last - first + 1
        self.keys = [schedule.spacing_key(first + i) for i in range(n)]
        self.rates = [schedule.base_rate(first + i) for i in range(n)]
        self.counters = [0] * n
        heap: list[tuple[float, int]] = []
        for i in range(n):
            t, k = 0.0, 0
            key, rate = self.keys[i], self.rates[i]
            while True:
                t -= math.log(rng.uniform(key, k)) / rate
                if t > start:
                    break
                k += 1
            self.counters[i] = k
            heap.append((t, first + i))
        heapq.heapify(heap)
        self.heap = heap

    def drive(self, runs: Sequence[SimulationRun], until: float,
              ring_callback: Optional[Callable[[float], None]] = None) -> None:
        heap = self.heap
        first = self.first
        counters = self.counters
        keys = self.keys
        rates = self.rates
        pop, push = heapq.heappop, heapq.heappush
        single = runs[0] if len(runs) == 1 else None
        while heap and heap[0][0] <= until:
            t, clab = pop(heap)
            ci = clab - first
            k = counters[ci]
            if single is not None:
                single._on_ring(t, clab, k, None)
            else:
                thin_u: Optional[float] = None
                need_thin = False
                for r in runs:
                    pl = clab - r.clock_offset
                    if (r.first_label <= pl <= r.last_label
                            and r.rates[pl - r.first_label] < r._base[pl - r.first_label]):
                        need_thin = True
                        break
                if need_thin:
                    thin_u = rng.uniform(self.schedule.thinning_key(clab), k)
                for r in runs:
                    r._on_ring(t, clab, k, thin_u)
            if ring_callback is not None:
                ring_callback(t)
            counters[ci] = k + 1
            t2 = t - math.log(rng.uniform(keys[ci], k + 1)) / rates[ci]
            push(heap, (t2, clab))
        for r in runs:
            r.now = until


def _ensure_driver(run: SimulationRun) -> _Driver:
    drv = getattr(run, "_driver", None)
    if drv is None:
        lo, hi = run.clock_window()
        drv = _Driver(run.schedule, lo, hi, start=run.now)
        run._driver = drv
    return drv


def run(sim: SimulationRun, until: float,
        snapshot_times: Iterable[float] = (),
        observers: Iterable[tuple[float, Callable[["SimulationRun"], object]]] = (),
        ) -> SimulationRun:
    """Advance one run to `until`, storing position snapshots on the way.

    Attempt times in (now, until] are processed in increasing order across
    labels; each ring moves its particle iff the site ahead is vacant (the
    maximal stored label is always free). Observers are (time, fn) hooks:
    each fires once when the run reaches its time, and (time, fn(run)) is
    appended to run.observations.
    """
    if until < sim.now:
        raise ValueError(f"cannot run backwards: now={sim.now}, until={until}")
    drv = _ensure_driver(sim)
    snaps = {float(t) for t in snapshot_times if sim.now <= t <= until}
    hooks: dict[float, list] = {}
    for t, fn in observers:
        if sim.now <= t <= until:
            hooks.setdefault(float(t), []).append(fn)
    for t in sorted(snaps | set(hooks)):
        drv.drive([sim], t)
        if t in snaps:
            sim.snapshots[t] = np.array(sim.positions, dtype=np.int64)
        for fn in hooks.get(t, ()):
            sim.observations.append((t, fn(sim)))
    drv.drive([sim], until)
    return sim


def coupled_run(runs: Sequence[SimulationRun], until: float,
                ring_callback: Optional[Callable[[float], None]] = None) -> list[ParticleConfig]:
    """Advance several runs through one shared ring sequence.

    All runs must reference the same ClockSchedule and sit at the same
    current time; each applies its own thinning and blocking tests per ring.
    `ring_callback(t)` fires after every ring, e.g. for event-level
    invariant checks.
    """
    if not runs:
        raise ValueError("no runs to couple")
    sched = runs[0].schedule
    now = runs[0].now
    for r in runs:
        if r.schedule is not sched:
            raise ValueError("coupled runs must share one ClockSchedule")
        if r.now != now:
            raise ValueError("coupled runs must sit at the same time")
    if until < now:
        raise ValueError(f"cannot run backwards: now={now}, until={until}")
    lo = min(r.clock_window()[0] for r in runs)
    hi = max(r.clock_window()[1] for r in runs)
    drv = _Driver(sched, lo, hi, start=now)
    drv.drive(list(runs), until, ring_callback=ring_callback)
    for r in runs:
        r._driver = None  # any cached single-run cursor is now stale
    return [r.particle_config() for r in runs]


def tagged_position(sim: SimulationRun, label: int, time: float) -> int:
    """Position of one label at a simulated time (current or snapshotted)."""
    if time == sim.now:
        return sim.position(label)
    snap = sim.snapshots.get(float(time))
    if snap is None:
        raise ValueError(f"time {time} was neither simulated to nor snapshotted")
    return int(snap[label - sim.first_label])


def front_count(sim: SimulationRun, time: float, speed: float) -> int:
    """Particles strictly beyond speed*time in a jam-release run.

    Raises WindowAuditError when even the lowest stored particle is beyond,
    since particles outside the window could then be uncounted.
    """
    if time == sim.now:
        positions = np.asarray(sim.positions, dtype=np.int64)
    else:
        positions = sim.snapshots.get(float(time))
        if positions is None:
            raise ValueError(f"time {time} was neither simulated to nor snapshotted")
    edge = speed * time
    count = int(np.count_nonzero(positions > edge))
    if count >= len(positions):
        raise WindowAuditError(
            f"all {len(positions)} stored particles are beyond {edge}; "
            "the jam window was sized too small")
    return count


def choose_window(t: float, K: float, mode: str, speed: Optional[float] = None,
                  margin: Optional[int] = None) -> tuple[int, int]:
    """Label window that captures the tracked statistic up to time t.

    tagged: labels [0, ceil(K*t)]; nothing behind the tagged particle can
    block it, and the audit bounds the window truncation ahead.
    jam: labels [-n+1, 0] with n = ceil((speed+1)*t) + 1 + margin; at most
    one particle per site can end up past the front.
    """
    if K <= 1.0:
        raise ValueError("window factor K must exceed 1")
    if mode == "tagged":
        return (0, int(math.ceil(K * t)))
    if mode == "jam":
        if speed is None:
            raise ValueError("jam mode needs the reference speed")
        extra = int(math.ceil(4.0 * math.sqrt(max(t, 1.0)))) + 10 if margin is None else int(margin)
        n = int(math.ceil((speed + 1.0) * t)) + 1 + extra
        return (-n + 1, 0)
    raise ValueError(f"unknown window mode {mode!r}")


def write_event_log(sim: SimulationRun, path) -> None:
    """Replay-format export: one row per seen attempt (label, time, executed)."""
    if sim.event_log is None:
        raise ValueError("run was not constructed with record_events=True")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "time", "executed"])
        for label, t, executed in sim.event_log:
            w.writerow([label, repr(t), int(executed)])
