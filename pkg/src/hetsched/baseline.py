"""Fixed-assignment schedules, the exhaustive offline proxy and simple baselines.

A fixed assignment routes each job to a preset machine, which then runs
BCP (weighted) or ALW (unweighted) at speed 1.  Since machines never
interact, a map's cost is the sum of per-machine costs over the job
subsets it induces; the exhaustive proxy exploits this by costing every
(machine, subset) pair once and then scoring all maps with array lookups.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import sim
from .model import WEIGHTED, Instance, Metrics

DEFAULT_ENUMERATION_CAP = 3 ** 8
DEFAULT_THRESHOLD = 1e-9


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class AssignmentMap:
    """Job id to machine index."""

    mapping: dict

    def __getitem__(self, job_id):
        return self.mapping[job_id]

    def __len__(self):
        return len(self.mapping)

    def as_list(self, instance: Instance):
        return [self.mapping[j.id] for j in instance.jobs]

    def validate(self, instance: Instance):
        ids = {j.id for j in instance.jobs}
        if set(self.mapping) != ids:
            raise ValueError("assignment map must cover exactly the instance's jobs")
        for jid, i in self.mapping.items():
            if not 0 <= i < instance.m:
                raise ValueError(f"job {jid} mapped to invalid machine {i}")
        return self

    @classmethod
    def from_list(cls, instance: Instance, machines):
        return cls({j.id: int(i) for j, i in zip(instance.jobs, machines)})


def _threshold(instance, threshold):
    return threshold if instance.mode == WEIGHTED else 0.0


def fixed_side(instance: Instance, amap: AssignmentMap, speedup=1.0,
               threshold=DEFAULT_THRESHOLD, record=True) -> sim.Side:
    mapping = amap.mapping
    return sim.Side(instance, speedup, _threshold(instance, threshold),
                    lambda states, job: mapping[job.id], record)


def trace_fixed_assignment(instance: Instance, amap: AssignmentMap,
                           threshold=DEFAULT_THRESHOLD, record=True):
    """Simulate a fixed map at speed 1; returns ``(trace, metrics)``."""
    amap.validate(instance)
    side = fixed_side(instance, amap, 1.0, threshold, record)
    sim.run(instance, [side])
    side.trace.machine_metrics = side.machine_metrics
    return side.trace, side.metrics


def simulate_fixed_assignment(instance: Instance, amap: AssignmentMap, mode=None,
                              threshold=DEFAULT_THRESHOLD) -> Metrics:
    if mode is not None and mode != instance.mode:
        raise ValueError(f"instance mode is {instance.mode!r}, not {mode!r}")
    return trace_fixed_assignment(instance, amap, threshold, record=False)[1]


def _subset_costs(instance: Instance, threshold):
    """Objective of every (machine, job subset) pair, indexed by bitmask."""
    n = instance.n
    costs = np.empty((instance.m, 1 << n))
    for i, pf in enumerate(instance.machines):
        for mask in range(1 << n):
            jobs = [j for b, j in enumerate(instance.jobs) if mask >> b & 1]
            sub = Instance((pf,), tuple(jobs), instance.mode)
            side = sim.Side(sub, 1.0, _threshold(instance, threshold), lambda s, j: 0, False)
            sim.run(sub, [side])
            costs[i, mask] = side.metrics.objective
    return costs


def exhaustive_offline_proxy(instance: Instance, mode=None, cap=DEFAULT_ENUMERATION_CAP,
                             threshold=DEFAULT_THRESHOLD):
    """Cheapest fixed assignment over all ``m**n`` maps.

    Returns ``(AssignmentMap, Metrics)``.  Ties go to the map that comes
    first in lexicographic order of machine indices by arrival position.
    """
    if mode is not None and mode != instance.mode:
        raise ValueError(f"instance mode is {instance.mode!r}, not {mode!r}")
    m, n = instance.m, instance.n
    if m ** n > cap:
        raise EnumerationTooLarge(
            f"{m}^{n} assignment maps exceed the cap of {cap}; "
            "use round_robin_assignment or greedy_total_weight_assignment instead")
    costs = _subset_costs(instance, threshold)
    maps = np.array(list(itertools.product(range(m), repeat=n)), dtype=np.int64).reshape(m ** n, n)
    bits = np.int64(1) << np.arange(n, dtype=np.int64)
    total = np.zeros(len(maps))
    for i in range(m):
        masks = ((maps == i) * bits).sum(axis=1)
        total += costs[i, masks]
    best = AssignmentMap.from_list(instance, maps[int(np.argmin(total))])
    return best, simulate_fixed_assignment(instance, best, threshold=threshold)


def brute_force_proxy(instance: Instance, order=None, threshold=DEFAULT_THRESHOLD):
    """Full re-simulation of every map, in the given enumeration order.

    Slow reference used to cross-check :func:`exhaustive_offline_proxy`.
    """
    maps = list(itertools.product(range(instance.m), repeat=instance.n))
    if order is not None:
        maps = [maps[k] for k in order]
    best, best_cost = None, np.inf
    for mp in maps:
        amap = AssignmentMap.from_list(instance, mp)
        cost = simulate_fixed_assignment(instance, amap, threshold=threshold).objective
        if cost < best_cost:
            best, best_cost = amap, cost
    return best, best_cost


def round_robin_assignment(instance: Instance) -> AssignmentMap:
    return AssignmentMap({j.id: k % instance.m for k, j in enumerate(instance.jobs)})


def greedy_total_weight_assignment(instance: Instance) -> AssignmentMap:
    """Each job goes to the machine with the least weight assigned so far."""
    load = [0.0] * instance.m
    out = {}
    for j in instance.jobs:
        i = min(range(instance.m), key=lambda k: (load[k], k))
        out[j.id] = i
        load[i] += j.weight
    return AssignmentMap(out)


def random_assignment(instance: Instance, rng) -> AssignmentMap:
    return AssignmentMap({j.id: int(rng.integers(instance.m)) for j in instance.jobs})
