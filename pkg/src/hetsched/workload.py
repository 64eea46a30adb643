"""Seeded random instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import UNWEIGHTED, WEIGHTED, Instance, Job
from .power import PowerFunction

POWER_FAMILIES = ("poly", "mixed")


@dataclass(frozen=True)
class WorkloadSpec:
    machines: int = 2
    jobs: int = 4
    mode: str = WEIGHTED
    power_family: str = "poly"
    alphas: tuple = (2.0, 3.0)
    size_range: tuple = (0.1, 10.0)
    weight_range: tuple = (0.1, 10.0)
    release_span: float | None = None  # defaults to jobs / 2

    def __post_init__(self):
        if self.machines < 1:
            raise ValueError("machines must be >= 1")
        if self.jobs < 0:
            raise ValueError("jobs must be >= 0")
        if self.mode not in (WEIGHTED, UNWEIGHTED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.power_family not in POWER_FAMILIES:
            raise ValueError(f"power family must be one of {POWER_FAMILIES}")
        for lo, hi in (self.size_range, self.weight_range):
            if not 0 < lo <= hi:
                raise ValueError("log-uniform ranges need 0 < low <= high")
        if not all(a > 1 for a in self.alphas):
            raise ValueError("polynomial exponents must exceed 1")
        if self.release_span is not None and self.release_span < 0:
            raise ValueError("release_span must be non-negative")


def _log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def random_power(rng, spec: WorkloadSpec) -> PowerFunction:
    if spec.power_family == "poly":
        return PowerFunction.polynomial(float(rng.choice(spec.alphas)))
    kind = rng.integers(3)
    if kind == 0:
        return PowerFunction.polynomial(float(rng.uniform(1.25, 3.5)))
    if kind == 1:
        # convex polynomial c1 s + c2 s^2 (+ c3 s^3)
        c = [float(rng.uniform(0, 1)), float(rng.uniform(0.2, 2))]
        if rng.random() < 0.5:
            c.append(float(rng.uniform(0, 1)))
        return PowerFunction.affine(c)
    # piecewise linear through points of a convex curve
    alpha = float(rng.uniform(1.5, 3.0))
    speeds = np.cumsum(rng.uniform(0.3, 1.5, size=int(rng.integers(2, 6))))
    return PowerFunction.table([(float(s), float(s ** alpha)) for s in speeds])


def generate_instance(seed: int, spec: WorkloadSpec | None = None) -> Instance:
    """Deterministic instance for a given seed and spec."""
    spec = spec or WorkloadSpec()
    rng = np.random.default_rng(seed)
    machines = tuple(random_power(rng, spec) for _ in range(spec.machines))
    span = spec.jobs / 2 if spec.release_span is None else spec.release_span
    jobs = []
    for k in range(spec.jobs):
        release = float(rng.uniform(0, span))
        size = _log_uniform(rng, *spec.size_range)
        weight = _log_uniform(rng, *spec.weight_range) if spec.mode == WEIGHTED else 1.0
        jobs.append(Job(k, release, size, weight))
    return Instance(machines, tuple(jobs), spec.mode)
