"""Potential functions and numeric checks of local competitiveness.

An online schedule (greedy assignment, speedup ``1+eps``) is coupled with an
adversary that uses a fixed assignment and the same per-machine policy at
speed 1.  The potential measures how far the online residual profile sits
above the adversary's; the checks below evaluate the boundary, completion,
arrival and running conditions on that pair, plus the integral inequality
used in the arrival argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from . import sim
from .baseline import AssignmentMap, trace_fixed_assignment
from .model import WEIGHTED, Instance
from .power import PowerFunction, integral_x_over_q
from .unweighted import UnweightedSchedulerConfig, assignment_delta_unweighted, simulate_unweighted
from .weighted import WeightedSchedulerConfig, assignment_delta_weighted, simulate_weighted

# dropped residual of a lone job on a machine whose drain time diverges; small
# enough that its share of the potential stays below the completion tolerance
VERIFY_THRESHOLD = 1e-13
COMPLETION_TOL = 1e-9
ARRIVAL_REL_TOL = 1e-7


@dataclass(frozen=True)
class CompetitiveParams:
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError("epsilon must be positive")

    @property
    def speedup(self):
        return 1.0 + self.epsilon

    @property
    def c_weighted(self):
        return 1.0 + 1.0 / self.epsilon

    @property
    def d_weighted(self):
        return 4.0 / self.epsilon

    @property
    def c_unweighted(self):
        return 4.0

    @property
    def d_unweighted(self):
        return 4.0 / self.epsilon

    def c(self, mode):
        return self.c_weighted if mode == WEIGHTED else self.c_unweighted

    def d(self, mode):
        return self.d_weighted if mode == WEIGHTED else self.d_unweighted

    def ratio_bound(self, mode):
        return 2.0 * (self.c(mode) + self.d(mode))


# --------------------------------------------------------------------------
# potentials


def _check_pair(online, adversary):
    if len(online) != len(adversary):
        raise ValueError("online and adversary have different machine counts")
    for a, o in zip(online, adversary):
        if a.power != o.power:
            raise ValueError("online and adversary machines have different power functions")


def potential_weighted(online, adversary, epsilon) -> float:
    _check_pair(online, adversary)
    total = 0.0
    for a, o in zip(online, adversary):
        pf = a.power
        total += float(K.potential_weighted_raw(a.keys, a.masses, o.keys, o.masses, pf.code, pf.params))
    return 2.0 / epsilon * total


def potential_unweighted(online, adversary, epsilon) -> float:
    _check_pair(online, adversary)
    total = 0.0
    for a, o in zip(online, adversary):
        pf = a.power
        total += float(K.potential_unweighted_raw(a.keys, o.keys, pf.code, pf.params))
    return 4.0 / epsilon * total


def potential(mode, online, adversary, epsilon) -> float:
    if mode == WEIGHTED:
        return potential_weighted(online, adversary, epsilon)
    return potential_unweighted(online, adversary, epsilon)


# --------------------------------------------------------------------------
# coupled traces


@dataclass
class CoupledTrace:
    instance: Instance
    params: CompetitiveParams
    online: sim.Trace
    adversary: sim.Trace
    adversary_map: AssignmentMap
    sample_times: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def mode(self):
        return self.instance.mode

    @property
    def span(self):
        return max(self.online.end_time, self.adversary.end_time)

    def event_times(self):
        times = {s.time for s in self.online.snapshots} | {s.time for s in self.adversary.snapshots}
        return np.array(sorted(times))

    def potential(self, online, adversary):
        return potential(self.mode, online, adversary, self.params.epsilon)


def online_trace(instance: Instance, params: CompetitiveParams, threshold=VERIFY_THRESHOLD):
    """Online schedule at speedup ``1+eps``; returns ``(trace, metrics)``."""
    if instance.mode == WEIGHTED:
        cfg = WeightedSchedulerConfig(params.speedup, threshold)
        return simulate_weighted(instance, cfg)
    return simulate_unweighted(instance, UnweightedSchedulerConfig(params.speedup))


def couple(instance: Instance, params: CompetitiveParams, amap: AssignmentMap,
           online: sim.Trace | None = None, threshold=VERIFY_THRESHOLD) -> CoupledTrace:
    """Pair the online trace with the fixed-assignment adversary ``amap``."""
    if online is None:
        online = online_trace(instance, params, threshold)[0]
    adversary = trace_fixed_assignment(instance, amap, threshold)[0]
    return CoupledTrace(instance, params, online, adversary, amap)


def _stage_states(trace: sim.Trace, t, stage):
    """States at time ``t``: stage 0 before any event at t, 1 after the completions."""
    times = trace._times()
    i = int(np.searchsorted(times, t, side="left")) - 1
    if stage == 1:
        k = i + 1
        while k < len(times) and times[k] == t and trace.snapshots[k].job is None:
            i = k
            k += 1
    snap = trace.snapshots[max(i, 0)]
    return sim.drift(snap.states, t - snap.time, trace.speedup, trace.threshold)


# --------------------------------------------------------------------------
# checks


@dataclass
class CheckReport:
    name: str
    total: int = 0
    passed: int = 0
    worst_margin: float = math.inf  # min over items of (bound - lhs); negative on failure
    skipped: int = 0
    items: list = field(default_factory=list)

    @property
    def ok(self):
        return self.passed == self.total

    def record(self, margin, ok, item=None):
        margin, ok = float(margin), bool(ok)
        self.total += 1
        self.passed += bool(ok)
        self.worst_margin = min(self.worst_margin, margin)
        if item is not None:
            self.items.append(item)

    def merge(self, other: CheckReport):
        self.total += other.total
        self.passed += other.passed
        self.skipped += other.skipped
        self.worst_margin = min(self.worst_margin, other.worst_margin)
        self.items.extend(other.items)
        return self

    def to_dict(self):
        return {"name": self.name, "total": self.total, "passed": self.passed,
                "skipped": self.skipped,
                "worst_margin": None if math.isinf(self.worst_margin) else self.worst_margin}


def check_arrival_condition(coupled: CoupledTrace, params: CompetitiveParams | None = None,
                            keep_items=False) -> CheckReport:
    """Potential jump at each arrival against ``d`` times the adversary's delta."""
    params = params or coupled.params
    d = params.d(coupled.mode)
    delta = assignment_delta_weighted if coupled.mode == WEIGHTED else assignment_delta_unweighted
    on, adv = coupled.online, coupled.adversary
    rep = CheckReport("arrival")
    for job in coupled.instance.jobs:
        ia, io = on.arrival_index(job.id), adv.arrival_index(job.id)
        before_a, before_o = on.states_before(ia), adv.states_before(io)
        after_a, after_o = on.snapshots[ia].states, adv.snapshots[io].states
        dphi = coupled.potential(after_a, after_o) - coupled.potential(before_a, before_o)
        k = adv.assignment[job.id]
        bound = d * delta(before_o[k], job)
        ok = dphi <= bound + ARRIVAL_REL_TOL * max(1.0, bound)
        item = {"job": job.id, "time": job.release, "dphi": float(dphi), "bound": float(bound),
                "pass": bool(ok)}
        rep.record(bound - dphi, ok, item if keep_items else None)
    return rep


def check_boundary_completion(coupled: CoupledTrace, tol=COMPLETION_TOL) -> CheckReport:
    """Zero potential at the start, non-negative at the end, no jump up at completions."""
    rep = CheckReport("boundary")
    empty_a = coupled.online.snapshots[0].states
    empty_o = coupled.adversary.snapshots[0].states
    phi0 = coupled.potential(empty_a, empty_o)
    rep.record(-abs(phi0), phi0 == 0.0, {"at": "start", "phi": phi0})
    T = coupled.span
    phi_end = coupled.potential(coupled.online.states_at(T), coupled.adversary.states_at(T))
    rep.record(phi_end, phi_end >= 0.0, {"at": "end", "phi": phi_end})
    times = sorted({e.time for tr in (coupled.online, coupled.adversary)
                    for e in tr.events if e.kind == "completion"})
    for t in times:
        pre = coupled.potential(_stage_states(coupled.online, t, 0),
                                _stage_states(coupled.adversary, t, 0))
        post = coupled.potential(_stage_states(coupled.online, t, 1),
                                 _stage_states(coupled.adversary, t, 1))
        rep.record(pre - post, post <= pre + tol, {"at": t, "before": pre, "after": post})
    return rep


def sample_grid(coupled: CoupledTrace, minimum=100):
    """At least ``minimum`` sample times in (0, span), each at least 2h from any event."""
    T = coupled.span
    if T <= 0:
        return np.empty(0), 0.0, 0
    h = 1e-6 * T
    events = coupled.event_times()
    count = max(minimum, 2 * len(events)) + len(events)
    while True:
        grid = (np.arange(count) + 0.5) / count * T
        pos = np.searchsorted(events, grid)
        lo = np.abs(grid - events[np.clip(pos - 1, 0, len(events) - 1)])
        hi = np.abs(events[np.clip(pos, 0, len(events) - 1)] - grid)
        keep = np.minimum(lo, hi) > 2 * h
        if keep.sum() >= minimum:
            return grid[keep], h, int((~keep).sum())
        count *= 2


def _segment_index(trace: sim.Trace, t):
    return np.searchsorted(trace._times(), t, side="right") - 1


def _phi_samples(coupled: CoupledTrace, samples, h):
    """Raw per-sample potential at t-h, t, t+h, with online and adversary loads at t."""
    on, adv = coupled.online, coupled.adversary
    weighted = coupled.mode == WEIGHTED
    n = len(samples)
    phi = np.zeros((n, 3))
    load_a = np.zeros(n)
    load_o = np.zeros(n)
    ia = _segment_index(on, samples)
    io = _segment_index(adv, samples)
    start = 0
    while start < n:
        stop = start
        while stop < n and ia[stop] == ia[start] and io[stop] == io[start]:
            stop += 1
        sa, so = on.snapshots[ia[start]], adv.snapshots[io[start]]
        ts = samples[start:stop]
        offs = (ts[:, None] + np.array([-h, 0.0, h])[None, :]).ravel()
        off_a = offs - sa.time
        off_o = offs - so.time
        for a, o in zip(sa.states, so.states):
            pf = a.power
            if weighted:
                p, wa, wo = K.potential_weighted_offsets(
                    a.keys, a.masses, o.keys, o.masses, pf.code, pf.params,
                    on.speedup, adv.speedup, sim.end_mass(a, on.threshold),
                    sim.end_mass(o, adv.threshold), off_a, off_o)
                load_a[start:stop] += wa[1::3]
                load_o[start:stop] += wo[1::3]
            else:
                p = K.potential_unweighted_offsets(a.keys, o.keys, pf.code, pf.params,
                                                   on.speedup, adv.speedup, off_a, off_o)
                load_a[start:stop] += len(a.jobs)
                load_o[start:stop] += len(o.jobs)
            phi[start:stop] += p.reshape(-1, 3)
        start = stop
    return phi, load_a, load_o


def check_running_condition(coupled: CoupledTrace, params: CompetitiveParams | None = None,
                            samples=None, minimum_samples=100, keep_items=False) -> CheckReport:
    """Finite-difference check of ``G_A + dPhi/dt <= c G_OPT`` at sample times.

    Weighted: ``G_A = 2 w_a`` and ``G_OPT = 2 w_o`` with ``c = 1 + 1/eps``.
    Unweighted: ``4 n_a + dPhi/dt <= 4 n_o``.
    """
    params = params or coupled.params
    rep = CheckReport("running")
    if samples is None:
        samples, h, skipped = sample_grid(coupled, minimum_samples)
    else:
        samples = np.sort(np.asarray(samples, dtype=float))
        h = 1e-6 * coupled.span
        events = coupled.event_times()
        near = np.array([np.min(np.abs(events - t)) <= 2 * h for t in samples], dtype=bool)
        skipped = int(near.sum())
        samples = samples[~near]
    rep.skipped = skipped
    coupled.sample_times = samples
    if len(samples) == 0:
        return rep
    eps = params.epsilon
    weighted = coupled.mode == WEIGHTED
    scale = (2.0 if weighted else 4.0) / eps
    raw, load_a, load_o = _phi_samples(coupled, samples, h)
    phi = scale * raw
    dphi = (phi[:, 2] - phi[:, 0]) / (2 * h)
    curvature = np.abs(phi[:, 2] - 2 * phi[:, 1] + phi[:, 0]) / h ** 2
    if weighted:
        lhs = 2 * load_a + dphi
        rhs = params.c_weighted * 2 * load_o
    else:
        lhs = 4 * load_a + dphi
        rhs = 4 * load_o
    tol = 1e-4 * np.maximum(1.0, rhs) + 10 * h * curvature
    ok = lhs <= rhs + tol
    for k in range(len(samples)):
        item = None
        if keep_items:
            item = {"time": float(samples[k]), "lhs": float(lhs[k]), "rhs": float(rhs[k]),
                    "tol": float(tol[k]), "pass": bool(ok[k])}
        rep.record(float(rhs[k] - lhs[k]), bool(ok[k]), item)
    return rep


def integral_bound_check(pf: PowerFunction, w_a, w_o, w_j, tol=1e-9):
    """Both sides of the integral inequality behind the arrival condition.

    ``lhs = I(w_a, w_a+w_j) - I((w_a-w_o-w_j)_+, (w_a-w_o)_+)`` and
    ``rhs = 2 I(w_o, w_o+w_j)`` with ``I(a, b) = int_a^b x/Q(x) dx``.
    """
    if min(w_a, w_o, w_j) < 0:
        raise ValueError("weights must be non-negative")
    lhs = (integral_x_over_q(pf, w_a, w_a + w_j)
           - integral_x_over_q(pf, max(w_a - w_o - w_j, 0.0), max(w_a - w_o, 0.0)))
    rhs = 2.0 * integral_x_over_q(pf, w_o, w_o + w_j)
    return float(lhs), float(rhs), bool(lhs <= rhs + tol)


def integral_bound_fuzz(pfs, rng, samples=10_000, high=10.0, tol=1e-9) -> CheckReport:
    """``integral_bound_check`` at uniform triples in ``[0, high]^3`` for every power function."""
    rep = CheckReport("integral_bound")
    for pf in pfs:
        for w_a, w_o, w_j in rng.uniform(0, high, size=(samples, 3)):
            lhs, rhs, _ = integral_bound_check(pf, w_a, w_o, w_j)
            rep.record(rhs - lhs, lhs <= rhs + tol)
    return rep


def check_g_properties(pf: PowerFunction, rng, samples=10_000, high=10.0, tol=1e-9):
    """Sampled monotonicity and subadditivity of ``g(x) = x/Q(x)``.

    Returns ``(monotone, subadditive)`` reports.  A quarter of the samples
    are drawn close to zero, where the slope of ``Q`` is steepest.
    """
    xs = rng.uniform(0, high, size=(samples, 2))
    xs[: samples // 4] *= 1e-3
    g = lambda x: float(K.x_over_q(pf.code, pf.params, float(x)))
    mono, sub = CheckReport("monotone"), CheckReport("subadditive")
    for x, y in xs:
        lo, hi = min(x, y), max(x, y)
        gap = g(hi) - g(lo)
        mono.record(gap, gap >= -tol)
        slack = g(x) + g(y) - g(x + y)
        sub.record(slack, slack >= -tol)
    return mono, sub
