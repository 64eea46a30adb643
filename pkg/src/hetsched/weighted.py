"""Online algorithm for fractional weighted flow plus energy.

Each processor runs BCP: Highest Density First with power equal to the
fractional weight of its queue.  Arriving jobs go to the processor whose
shadow potential grows least.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels as K
from . import sim
from .model import WEIGHTED, Instance, Job, MachineState, Metrics
from .power import NonTerminatingSegment


@dataclass(frozen=True)
class WeightedSchedulerConfig:
    speedup: float = 1.0
    completion_threshold: float = 1e-9

    def __post_init__(self):
        if not self.speedup >= 1.0:
            raise ValueError("speedup must be >= 1")
        if not 0.0 < self.completion_threshold < 1e-3:
            raise ValueError("completion_threshold must lie in (0, 1e-3)")


def shadow_potential_weighted(state: MachineState) -> float:
    pf = state.power
    return float(K.shadow_weighted(state.keys, state.masses, pf.code, pf.params))


def future_cost_weighted(state: MachineState) -> float:
    """Fractional flow plus energy BCP still incurs if nothing else arrives."""
    return 2.0 * shadow_potential_weighted(state)


def assignment_delta_weighted(state: MachineState, job: Job) -> float:
    pf = state.power
    return float(K.delta_weighted(state.keys, state.masses, job.inverse_density,
                                  job.weight, pf.code, pf.params))


def choose_weighted(states, job: Job) -> int:
    best, best_i = math.inf, 0
    for i, st in enumerate(states):
        d = assignment_delta_weighted(st, job)
        if d < best:
            best, best_i = d, i
    return best_i


def assign_weighted(machines: list[MachineState], job: Job) -> int:
    """Insert ``job`` on the machine with the smallest shadow-potential increase."""
    i = choose_weighted(machines, job)
    machines[i].insert(job)
    return i


@dataclass
class AdvanceResult:
    state: MachineState
    metrics: Metrics
    completed: Job | None
    elapsed: float


def advance_weighted(state: MachineState, config: WeightedSchedulerConfig,
                     horizon: float) -> AdvanceResult:
    """Run the densest job for ``horizon`` or until it completes, whichever is first."""
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    state = state.copy()
    if state.empty:
        return AdvanceResult(state, Metrics(), None, horizon)
    ttc = sim.time_to_completion(state, config.speedup, config.completion_threshold)
    if math.isinf(ttc) and math.isinf(horizon):
        raise NonTerminatingSegment("head job never finishes; use a positive completion_threshold")
    complete = ttc <= horizon
    elapsed, acc, job = sim.step(state, horizon, config.speedup, config.completion_threshold,
                                 complete=complete)
    return AdvanceResult(state, acc, job, elapsed)


def simulate_weighted(instance: Instance, config: WeightedSchedulerConfig | None = None,
                      record: bool = True):
    """Simulate the online algorithm; returns ``(trace, metrics)``."""
    if instance.mode != WEIGHTED:
        raise ValueError("simulate_weighted needs a weighted instance")
    config = config or WeightedSchedulerConfig()
    side = sim.Side(instance, config.speedup, config.completion_threshold, choose_weighted, record)
    sim.run(instance, [side])
    side.trace.machine_metrics = side.machine_metrics
    return side.trace, side.metrics


def drain_weighted(state: MachineState, config: WeightedSchedulerConfig | None = None) -> Metrics:
    """Cost of running ``state`` to empty with no further arrivals."""
    config = config or WeightedSchedulerConfig()
    state = state.copy()
    total = Metrics()
    while not state.empty:
        _, acc, _ = sim.step(state, 0.0, config.speedup, config.completion_threshold, complete=True)
        total += acc
    return total
