"""Jobs, instances, residual profiles, per-machine state and cost accounting."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .power import PowerFunction

WEIGHTED = "weighted"
UNWEIGHTED = "unweighted"
MODES = (WEIGHTED, UNWEIGHTED)


@dataclass(frozen=True)
class Job:
    id: int
    release: float
    size: float
    weight: float = 1.0

    def __post_init__(self):
        if not self.size > 0:
            raise ValueError(f"job {self.id}: size must be positive")
        if not self.weight > 0:
            raise ValueError(f"job {self.id}: weight must be positive")
        if not self.release >= 0:
            raise ValueError(f"job {self.id}: release must be non-negative")

    @property
    def density(self):
        return self.weight / self.size

    @property
    def inverse_density(self):
        return self.size / self.weight


@dataclass(frozen=True)
class Instance:
    machines: tuple[PowerFunction, ...]
    jobs: tuple[Job, ...]
    mode: str = WEIGHTED

    def __post_init__(self):
        if not self.machines:
            raise ValueError("an instance needs at least one machine")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "machines", tuple(self.machines))
        jobs = tuple(sorted(self.jobs, key=lambda j: (j.release, j.id)))
        if len({j.id for j in jobs}) != len(jobs):
            raise ValueError("job ids must be unique")
        if self.mode == UNWEIGHTED and any(j.weight != 1.0 for j in jobs):
            raise ValueError("unweighted instances need unit weights")
        object.__setattr__(self, "jobs", jobs)

    @property
    def m(self):
        return len(self.machines)

    @property
    def n(self):
        return len(self.jobs)


# --------------------------------------------------------------------------
# residual profiles


@dataclass(frozen=True)
class ResidualProfile:
    """Step function q -> total mass of entries with key >= q.

    Weighted mode: key = inverse density, mass = fractional weight.
    Unweighted mode: key = remaining size, mass = 1.
    """

    keys: tuple[float, ...] = ()
    masses: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.keys) != len(self.masses):
            raise ValueError("keys and masses differ in length")
        if any(m <= 0 for m in self.masses):
            raise ValueError("profile masses must be positive")
        order = sorted(range(len(self.keys)), key=lambda i: self.keys[i])
        object.__setattr__(self, "keys", tuple(float(self.keys[i]) for i in order))
        object.__setattr__(self, "masses", tuple(float(self.masses[i]) for i in order))

    def value_above(self, q):
        return profile_value_above(self, q)

    @property
    def total(self):
        return float(sum(self.masses))


def profile_value_above(profile: ResidualProfile, q: float) -> float:
    i = bisect.bisect_left(profile.keys, q)
    return float(sum(profile.masses[i:]))


def profile_merge_breakpoints(p1: ResidualProfile, p2: ResidualProfile) -> list[float]:
    return sorted({0.0, *p1.keys, *p2.keys})


# --------------------------------------------------------------------------
# machine state


class MachineState:
    """Queue of one processor.

    Jobs are kept ordered by ``(key, id)`` so that position 0 is always the
    job being run: highest density in weighted mode (key = inverse density,
    static), shortest remaining work in unweighted mode (key = remaining
    size, shrinking).  ``masses`` holds fractional weights in weighted mode
    and ones in unweighted mode.
    """

    __slots__ = ("power", "mode", "jobs", "keys", "masses")

    def __init__(self, power: PowerFunction, mode: str = WEIGHTED, jobs=(), keys=None, masses=None):
        self.power = power
        self.mode = mode
        self.jobs = list(jobs)
        self.keys = np.asarray(keys if keys is not None else [], dtype=float)
        self.masses = np.asarray(masses if masses is not None else [], dtype=float)

    def copy(self):
        return MachineState(self.power, self.mode, self.jobs, self.keys.copy(), self.masses.copy())

    def __len__(self):
        return len(self.jobs)

    def __repr__(self):
        body = ", ".join(f"{j.id}:{k:.4g}/{m:.4g}" for j, k, m in zip(self.jobs, self.keys, self.masses))
        return f"MachineState({self.power.kind}, [{body}])"

    @property
    def empty(self):
        return not self.jobs

    def insert(self, job: Job):
        """Add a newly arrived job at full remaining work."""
        if self.mode == WEIGHTED:
            key, mass = job.inverse_density, job.weight
        else:
            key, mass = job.size, 1.0
        pos = 0
        while pos < len(self.jobs) and (self.keys[pos], self.jobs[pos].id) < (key, job.id):
            pos += 1
        self.jobs.insert(pos, job)
        self.keys = np.insert(self.keys, pos, key)
        self.masses = np.insert(self.masses, pos, mass)
        return pos

    def pop_head(self):
        job = self.jobs.pop(0)
        self.keys = self.keys[1:].copy()
        self.masses = self.masses[1:].copy()
        return job

    @property
    def running(self):
        return self.jobs[0] if self.jobs else None

    @property
    def total_mass(self):
        return float(self.masses.sum())

    def fractional_weights(self):
        """w_j p_j(t) / p_j for every queued job, in queue order."""
        if self.mode == WEIGHTED:
            return self.masses.copy()
        return np.array([k / j.size * j.weight for j, k in zip(self.jobs, self.keys)])

    def remaining_work(self):
        if self.mode == WEIGHTED:
            return self.masses * self.keys
        return self.keys.copy()

    @property
    def total_fractional_weight(self):
        return float(self.fractional_weights().sum())

    @property
    def total_weight_unfinished(self):
        return float(sum(j.weight for j in self.jobs))

    @property
    def count(self):
        return len(self.jobs)

    def power_level(self):
        """Unaugmented power drawn by the per-machine policy right now."""
        if self.mode == WEIGHTED:
            return self.total_mass
        return float(len(self.jobs))

    def profile(self) -> ResidualProfile:
        return ResidualProfile(tuple(self.keys), tuple(self.masses))


# --------------------------------------------------------------------------
# trace and metrics


@dataclass(frozen=True)
class TraceEvent:
    time: float
    kind: str  # "arrival" | "completion" | "sample"
    job: int | None = None
    machine: int | None = None
    states: tuple[MachineState, ...] | None = field(default=None, compare=False, repr=False)


@dataclass
class Metrics:
    fractional_weighted_flow: float = 0.0
    integer_weighted_flow: float = 0.0
    energy: float = 0.0
    mode: str = WEIGHTED

    @property
    def flow(self):
        """The flow term of the objective for this mode."""
        if self.mode == WEIGHTED:
            return self.fractional_weighted_flow
        return self.integer_weighted_flow

    @property
    def objective(self):
        return self.flow + self.energy

    def add(self, fractional=0.0, integer=0.0, energy=0.0):
        self.fractional_weighted_flow += fractional
        self.integer_weighted_flow += integer
        self.energy += energy
        return self

    def __iadd__(self, other: Metrics):
        return self.add(other.fractional_weighted_flow, other.integer_weighted_flow, other.energy)

    def to_dict(self):
        return {
            "fractional_weighted_flow": self.fractional_weighted_flow,
            "integer_weighted_flow": self.integer_weighted_flow,
            "energy": self.energy,
            "objective": self.objective,
        }


def accrue_metrics(metrics: Metrics, dt: float, total_fractional_weight: float,
                   total_weight_unfinished: float, total_power: float) -> Metrics:
    """Accrue constant rates over a step of length ``dt``."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    return metrics.add(total_fractional_weight * dt, total_weight_unfinished * dt, total_power * dt)
