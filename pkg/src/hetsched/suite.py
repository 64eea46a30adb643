"""Random verification suite: every check on many small coupled instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import (VERIFY_THRESHOLD, CheckReport, CompetitiveParams, check_arrival_condition,
                       check_boundary_completion, check_running_condition, couple, online_trace)
from .baseline import exhaustive_offline_proxy, random_assignment
from .model import MODES, Instance
from .workload import WorkloadSpec, generate_instance

EPSILONS = (0.25, 0.5, 1.0)


def suite_instance(seed: int, mode: str, epsilon: float | None = None):
    """Small random instance and its epsilon, derived only from ``(seed, mode)``."""
    rng = np.random.default_rng([seed, MODES.index(mode)])
    spec = WorkloadSpec(machines=int(rng.integers(1, 4)), jobs=int(rng.integers(1, 9)),
                        mode=mode, power_family="mixed")
    instance = generate_instance(int(rng.integers(2 ** 32)), spec)
    eps = float(rng.choice(EPSILONS)) if epsilon is None else float(epsilon)
    return instance, CompetitiveParams(eps), rng


@dataclass
class InstanceResult:
    seed: int | None
    mode: str
    epsilon: float
    machines: int
    jobs: int
    arrival: CheckReport
    running: CheckReport
    boundary: CheckReport
    online_objective: float
    proxy_objective: float | None
    ratio: float | None
    ratio_bound: float

    @property
    def ratio_ok(self):
        return bool(self.ratio is None or self.ratio <= self.ratio_bound)

    @property
    def ok(self):
        return self.arrival.ok and self.running.ok and self.boundary.ok and self.ratio_ok


def verify_instance(instance: Instance, params: CompetitiveParams, rng=None, random_adversaries=20,
                    seed=None, keep_items=False) -> InstanceResult:
    """Run every check against the proxy map plus ``random_adversaries`` random maps."""
    rng = rng if rng is not None else np.random.default_rng(0)
    trace, metrics = online_trace(instance, params)
    proxy_map, proxy = exhaustive_offline_proxy(instance, threshold=VERIFY_THRESHOLD)
    maps = [proxy_map] + [random_assignment(instance, rng) for _ in range(random_adversaries)]
    arrival, running, boundary = CheckReport("arrival"), CheckReport("running"), CheckReport("boundary")
    for k, amap in enumerate(maps):
        coupled = couple(instance, params, amap, trace)
        keep = keep_items and k == 0
        arrival.merge(check_arrival_condition(coupled, keep_items=keep))
        running.merge(check_running_condition(coupled, keep_items=keep))
        boundary.merge(check_boundary_completion(coupled))
        if not keep:
            boundary.items.clear()
    ratio = None
    if proxy.objective > 0:
        ratio = float(metrics.objective / proxy.objective)
    elif metrics.objective == 0:
        ratio = 0.0
    return InstanceResult(seed, instance.mode, params.epsilon, instance.m, instance.n, arrival,
                          running, boundary, metrics.objective, proxy.objective, ratio,
                          params.ratio_bound(instance.mode))


@dataclass
class SuiteSummary:
    mode: str
    results: list = field(default_factory=list)

    def _merged(self, name):
        rep = CheckReport(name)
        for r in self.results:
            rep.merge(getattr(r, name))
        rep.items.clear()
        return rep

    @property
    def arrival(self):
        return self._merged("arrival")

    @property
    def running(self):
        return self._merged("running")

    @property
    def boundary(self):
        return self._merged("boundary")

    @property
    def min_running_samples(self):
        return min((r.running.total / 21 for r in self.results), default=0)

    @property
    def ratio_failures(self):
        return [r.seed for r in self.results if not r.ratio_ok]

    @property
    def max_ratio(self):
        return max((r.ratio for r in self.results if r.ratio is not None), default=0.0)

    @property
    def max_ratio_fraction(self):
        """Largest observed ratio as a fraction of its bound."""
        return max((r.ratio / r.ratio_bound for r in self.results if r.ratio is not None),
                   default=0.0)

    @property
    def ok(self):
        return all(r.ok for r in self.results)

    def to_dict(self):
        return {
            "mode": self.mode,
            "instances": len(self.results),
            "arrival": self.arrival.to_dict(),
            "running": self.running.to_dict(),
            "boundary": self.boundary.to_dict(),
            "ratio": {"max": self.max_ratio, "max_fraction_of_bound": self.max_ratio_fraction,
                      "failures": self.ratio_failures},
            "failed_seeds": [r.seed for r in self.results if not r.ok],
            "ok": self.ok,
        }


def run_suite(seed: int, count: int, mode: str, epsilon: float | None = None,
              random_adversaries=20) -> SuiteSummary:
    summary = SuiteSummary(mode)
    for s in range(seed, seed + count):
        instance, params, rng = suite_instance(s, mode, epsilon)
        summary.results.append(verify_instance(instance, params, rng, random_adversaries, seed=s))
    return summary


def finite_or_none(x):
    return x if x is not None and math.isfinite(x) else None
