"""Online algorithm for unweighted flow plus energy.

Each processor runs ALW: Shortest Remaining Processing Time with power equal
to the number of unfinished jobs.  Assignment is greedy on the shadow
potential ``int_q sum_{j <= n(q)} j/Q(j) dq``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels as K
from . import sim
from .model import UNWEIGHTED, Instance, Job, MachineState, Metrics


@dataclass(frozen=True)
class UnweightedSchedulerConfig:
    speedup: float = 1.0

    def __post_init__(self):
        if not self.speedup >= 1.0:
            raise ValueError("speedup must be >= 1")


def shadow_potential_unweighted(state: MachineState) -> float:
    pf = state.power
    return float(K.shadow_unweighted(state.keys, pf.code, pf.params))


def future_cost_unweighted(state: MachineState) -> float:
    return 2.0 * shadow_potential_unweighted(state)


def assignment_delta_unweighted(state: MachineState, job: Job) -> float:
    if job.weight != 1.0:
        raise ValueError("unweighted assignment needs unit-weight jobs")
    pf = state.power
    return float(K.delta_unweighted(state.keys, job.size, pf.code, pf.params))


def choose_unweighted(states, job: Job) -> int:
    best, best_i = math.inf, 0
    for i, st in enumerate(states):
        d = assignment_delta_unweighted(st, job)
        if d < best:
            best, best_i = d, i
    return best_i


def assign_unweighted(machines: list[MachineState], job: Job) -> int:
    i = choose_unweighted(machines, job)
    machines[i].insert(job)
    return i


def simulate_unweighted(instance: Instance, config: UnweightedSchedulerConfig | None = None,
                        record: bool = True):
    """Simulate the online algorithm; returns ``(trace, metrics)``."""
    if instance.mode != UNWEIGHTED:
        raise ValueError("simulate_unweighted needs an unweighted instance")
    config = config or UnweightedSchedulerConfig()
    side = sim.Side(instance, config.speedup, 0.0, choose_unweighted, record)
    sim.run(instance, [side])
    side.trace.machine_metrics = side.machine_metrics
    return side.trace, side.metrics


def drain_unweighted(state: MachineState, config: UnweightedSchedulerConfig | None = None) -> Metrics:
    config = config or UnweightedSchedulerConfig()
    state = state.copy()
    total = Metrics(mode=UNWEIGHTED)
    while not state.empty:
        _, acc, _ = sim.step(state, 0.0, config.speedup, complete=True)
        total += acc
    return total
