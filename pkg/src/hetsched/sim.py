"""Event-driven simulation of per-machine BCP / ALW queues.

Between events every machine runs its head job with closed-form dynamics,
so the loop only ever jumps from one arrival or completion to the next.
Several independent *sides* (for example an online schedule and an
adversary) can be stepped in lockstep over the same arrival sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from .model import WEIGHTED, Instance, Job, MachineState, Metrics, TraceEvent
from .power import NonTerminatingSegment

# machines whose completion falls within this relative slack of the step
# length complete in the same step
_SAME_INSTANT = 1e-12


def end_mass(state: MachineState, threshold: float) -> float:
    """Fractional weight at which the head job counts as finished.

    Zero whenever the drain time is finite; the threshold only applies to a
    lone job on a processor whose power grows linearly at zero speed.
    """
    if state.mode != WEIGHTED or not state.jobs:
        return 0.0
    if len(state.jobs) > 1 or state.power.drains_in_finite_time:
        return 0.0
    return threshold * state.jobs[0].weight


def time_to_completion(state: MachineState, speedup: float, threshold: float = 0.0) -> float:
    if not state.jobs:
        return math.inf
    pf = state.power
    if state.mode == WEIGHTED:
        a = float(state.masses[0])
        W = float(state.masses[1:].sum())
        end = end_mass(state, threshold)
        if a <= end:
            return 0.0
        return float(state.keys[0]) / speedup * K.int_inv_q(pf.code, pf.params, W, end, a)
    v = speedup * float(K.speed(pf.code, pf.params, float(len(state.jobs))))
    return float(state.keys[0]) / v


def step(state: MachineState, dt: float, speedup: float, threshold: float = 0.0,
         complete: bool = False):
    """Advance ``state`` in place.

    With ``complete=True`` the head job is run to completion (``dt`` is
    ignored); otherwise the machine runs for ``dt`` and the head job is kept
    even if it reached its completion mass.  Returns ``(elapsed, accrued
    Metrics, completed Job or None)``.
    """
    acc = Metrics(mode=state.mode)
    if not state.jobs:
        return (0.0 if complete else dt), acc, None
    pf = state.power
    horizon = math.inf if complete else dt
    if state.mode == WEIGHTED:
        a = float(state.masses[0])
        W = float(state.masses[1:].sum())
        end = end_mass(state, threshold)
        new, elapsed, flow, _ = K.advance_weighted(
            float(state.keys[0]), W, a, end, pf.code, pf.params, speedup, horizon)
        new, elapsed, flow = float(new), float(elapsed), float(flow)
        if math.isinf(elapsed):
            raise NonTerminatingSegment(
                "head job never finishes; run with a positive completion_threshold")
        acc.add(flow, state.total_weight_unfinished * elapsed, flow)
        if complete:
            return elapsed, acc, state.pop_head()
        state.masses[0] = new
        return elapsed, acc, None
    n = len(state.jobs)
    v = speedup * float(K.speed(pf.code, pf.params, float(n)))
    r0 = float(state.keys[0])
    elapsed = r0 / v if complete else dt
    r1 = 0.0 if complete else max(r0 - v * dt, 0.0)
    frac = sum(float(k) / j.size for j, k in zip(state.jobs[1:], state.keys[1:]))
    frac += 0.5 * (r0 + r1) / state.jobs[0].size
    acc.add(frac * elapsed, n * elapsed, n * elapsed)
    if complete:
        return elapsed, acc, state.pop_head()
    state.keys[0] = r1
    return elapsed, acc, None


def drift(states, dt: float, speedup: float, threshold: float = 0.0):
    """Copies of ``states`` advanced by ``dt`` assuming no event occurs."""
    out = []
    for st in states:
        st = st.copy()
        if dt > 0:
            step(st, dt, speedup, threshold)
        out.append(st)
    return out


# --------------------------------------------------------------------------
# traces


@dataclass
class Trace:
    """Events of one simulated side plus state snapshots.

    ``snapshots`` holds a ``sample`` event after every arrival (tagged with
    the arriving job id) and after every group of simultaneous completions;
    the first snapshot is the empty system at time 0.  Between consecutive
    snapshots no event happens, so the state at any time is recovered by
    drifting the latest snapshot.
    """

    mode: str
    speedup: float
    threshold: float
    events: list[TraceEvent] = field(default_factory=list)
    snapshots: list[TraceEvent] = field(default_factory=list)
    assignment: dict[int, int] = field(default_factory=dict)
    completion_times: dict[int, float] = field(default_factory=dict)

    @property
    def end_time(self):
        return self.snapshots[-1].time if self.snapshots else 0.0

    def _last_index_at_or_before(self, t):
        times = self._times()
        return int(np.searchsorted(times, t, side="right")) - 1

    def _times(self):
        cache = getattr(self, "_time_cache", None)
        if cache is None or len(cache) != len(self.snapshots):
            cache = np.array([s.time for s in self.snapshots])
            self._time_cache = cache
        return cache

    def states_at(self, t):
        """States right after every event with time <= t."""
        i = self._last_index_at_or_before(t)
        snap = self.snapshots[max(i, 0)]
        return drift(snap.states, t - snap.time, self.speedup, self.threshold)

    def states_before(self, index):
        """States just before snapshot ``index``'s event(s), at its time."""
        prev = self.snapshots[index - 1]
        return drift(prev.states, self.snapshots[index].time - prev.time,
                     self.speedup, self.threshold)

    def arrival_index(self, job_id):
        idx = getattr(self, "_arrival_cache", None)
        if idx is None:
            idx = {s.job: i for i, s in enumerate(self.snapshots) if s.job is not None}
            self._arrival_cache = idx
        return idx[job_id]


Chooser = Callable[[list, Job], int]


class Side:
    """One schedule being simulated: machine states, policy and accounting."""

    def __init__(self, instance: Instance, speedup: float, threshold: float, chooser: Chooser,
                 record: bool = True):
        self.states = [MachineState(pf, instance.mode) for pf in instance.machines]
        self.mode = instance.mode
        self.speedup = float(speedup)
        self.threshold = float(threshold)
        self.chooser = chooser
        self.metrics = Metrics(mode=instance.mode)
        self.machine_metrics = [Metrics(mode=instance.mode) for _ in instance.machines]
        self.record = record
        self.trace = Trace(instance.mode, self.speedup, self.threshold)
        self._snapshot(0.0)

    def _snapshot(self, t, job=None):
        if self.record:
            states = tuple(s.copy() for s in self.states)
            self.trace.snapshots.append(TraceEvent(t, "sample", job, None, states))

    def completion_times(self):
        return [time_to_completion(s, self.speedup, self.threshold) for s in self.states]

    def advance(self, dt, ttc, t_end):
        done = []
        for i, st in enumerate(self.states):
            if not st.jobs:
                continue
            complete = ttc[i] <= dt * (1.0 + _SAME_INSTANT)
            _, acc, job = step(st, dt, self.speedup, self.threshold, complete)
            if complete:
                # the machine idles for the sliver between its completion and t_end
                done.append((i, job))
            self.metrics += acc
            self.machine_metrics[i] += acc
        for i, job in done:
            self.trace.completion_times[job.id] = t_end
            if self.record:
                self.trace.events.append(TraceEvent(t_end, "completion", job.id, i))
        if done:
            self._snapshot(t_end)
        return done

    def arrive(self, t, job):
        i = self.chooser(self.states, job)
        self.states[i].insert(job)
        self.trace.assignment[job.id] = i
        if self.record:
            self.trace.events.append(TraceEvent(t, "arrival", job.id, i))
        self._snapshot(t, job.id)
        return i


def run(instance: Instance, sides: list[Side], on_arrival=None):
    """Drive ``sides`` over the instance's arrivals until every queue drains.

    Completions at an instant are handled before arrivals at that instant;
    simultaneous arrivals are handled in job-id order.  ``on_arrival(t, job)``
    is called before the job is inserted on any side.
    """
    jobs = instance.jobs
    k = 0
    t = 0.0
    while True:
        next_arr = jobs[k].release if k < len(jobs) else math.inf
        ttc = [side.completion_times() for side in sides]
        tc = min((min(x) for x in ttc), default=math.inf)
        gap = next_arr - t
        if math.isinf(gap) and math.isinf(tc):
            if any(st.jobs for side in sides for st in side.states):
                raise NonTerminatingSegment("queues never drain")
            break
        dt = min(tc, gap)
        t_new = min(t + dt, next_arr)
        if dt > 0 or tc <= 0:
            for side, times in zip(sides, ttc):
                side.advance(dt, times, t_new)
        t = t_new
        while k < len(jobs) and jobs[k].release <= t:
            job = jobs[k]
            if on_arrival is not None:
                on_arrival(t, job)
            for side in sides:
                side.arrive(t, job)
            k += 1
    return sides
