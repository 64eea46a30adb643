"""Reference implementations that share no code with the package.

Power evaluation is direct, the inverse uses brentq, integrals use
scipy.quad and schedules are integrated with solve_ivp.  Slow but simple.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq


def power(desc, s):
    kind = desc["kind"]
    if kind == "poly":
        return s ** desc["alpha"]
    if kind == "affine":
        return sum(c * s ** (k + 1) for k, c in enumerate(desc["coefficients"]))
    pts = [(0.0, 0.0)] + [tuple(p) for p in desc["points"]]
    for (s0, p0), (s1, p1) in zip(pts, pts[1:]):
        if s <= s1:
            return p0 + (p1 - p0) * (s - s0) / (s1 - s0)
    (s0, p0), (s1, p1) = pts[-2], pts[-1]
    return p1 + (p1 - p0) / (s1 - s0) * (s - s1)


def speed(desc, y):
    if y <= 0:
        return 0.0
    if desc["kind"] == "poly":
        return y ** (1.0 / desc["alpha"])
    hi = 1.0
    while power(desc, hi) < y:
        hi *= 2
    return brentq(lambda s: power(desc, s) - y, 0.0, hi, xtol=1e-15, rtol=1e-15)


def g(desc, x):
    """x / Q(x), continued at 0 by its limit."""
    if x <= 0:
        h = 1e-12
        return h / speed(desc, h) if desc["kind"] != "poly" else 0.0
    return x / speed(desc, x)


def I(desc, a, b):
    if b <= a:
        return 0.0
    return quad(lambda x: g(desc, x), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def inv_q_integral(desc, W, a, b):
    if b <= a:
        return 0.0
    return quad(lambda w: 1.0 / speed(desc, W + w), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def weighted_value_above(queue, q):
    """queue: list of (inverse density, fractional weight)."""
    return sum(m for d, m in queue if d >= q)


def shadow_weighted(desc, queue):
    keys = sorted({0.0} | {d for d, _ in queue})
    total = 0.0
    for lo, hi in zip(keys, keys[1:]):
        total += (hi - lo) * I(desc, 0.0, weighted_value_above(queue, hi))
    return total


def delta_weighted(desc, queue, d, w):
    keys = sorted({0.0, d} | {k for k, _ in queue if k < d})
    total = 0.0
    for lo, hi in zip(keys, keys[1:]):
        base = weighted_value_above(queue, hi)
        total += (hi - lo) * I(desc, base, base + w)
    return total


# --------------------------------------------------------------------------
# weighted schedule by ODE integration


def _run_machine(desc, queue, speedup, t0, t1, threshold):
    """Advance one BCP queue from t0 towards t1; returns (queue, t_end, flow, completed?).

    queue entries are lists [inverse density, fractional mass, weight, id] in HDF order.
    """
    d, a = queue[0][0], queue[0][1]
    W = sum(e[1] for e in queue[1:])
    end = threshold * queue[0][2] if (len(queue) == 1 and desc["kind"] != "poly"
                                      and _slope0(desc) > 0) else 0.0

    def rhs(t, y):
        w = max(y[0], 0.0)
        return [-(speedup / d) * speed(desc, W + w), W + w]

    # stop a hair above the end mass: near zero the exact solution of
    # w' = -c sqrt(w) reaches 0 in finite time but a numerical one may not
    stop = end + 1e-12 * queue[0][2]

    def finished(t, y):
        return y[0] - stop
    finished.terminal = True
    finished.direction = -1
    sol = solve_ivp(rhs, (t0, t1), [a, 0.0], events=finished, rtol=1e-11, atol=1e-15,
                    method="DOP853")
    if sol.status == 1:
        return queue[1:], float(sol.t_events[0][0]), float(sol.y_events[0][0][1]), True
    queue = [list(e) for e in queue]
    queue[0][1] = float(sol.y[0, -1])
    return queue, t1, float(sol.y[1, -1]), False


def _slope0(desc):
    if desc["kind"] == "affine":
        return desc["coefficients"][0]
    if desc["kind"] == "table":
        s, p = desc["points"][0]
        return p / s
    return 0.0


def simulate_weighted(machines, jobs, speedup=1.0, threshold=1e-9, assignment=None):
    """Greedy (or fixed) assignment with BCP per machine; returns (objective, assignment).

    ``machines`` are dicts as in the instance file; ``jobs`` are tuples
    (id, release, size, weight).  Objective is fractional flow plus energy,
    which coincide, so it is twice the accrued fractional flow.
    """
    jobs = sorted(jobs, key=lambda j: (j[1], j[0]))
    queues = [[] for _ in machines]
    chosen = {}
    t = 0.0
    flow = 0.0
    k = 0
    while k < len(jobs) or any(queues):
        nxt = jobs[k][1] if k < len(jobs) else math.inf
        # run every busy machine until the earliest completion or next arrival
        horizon = nxt
        while any(queues):
            probes = {i: _run_machine(machines[i], q, speedup, t, min(horizon, t + 1e6), threshold)
                      for i, q in enumerate(queues) if q}
            done_at = [pr[1] for pr in probes.values() if pr[3]]
            earliest = min(done_at) if done_at else horizon
            if math.isinf(earliest):
                break
            for i, pr in probes.items():
                if not (pr[3] and pr[1] == earliest):
                    pr = _run_machine(machines[i], queues[i], speedup, t, earliest, threshold)
                queues[i] = pr[0]
                flow += pr[2]
            t = earliest
            if t >= horizon:
                break
        if not any(queues):
            t = max(t, nxt) if k < len(jobs) else t
        while k < len(jobs) and jobs[k][1] <= t:
            jid, r, p, w = jobs[k]
            d = p / w
            if assignment is None:
                deltas = [delta_weighted(machines[i], [(e[0], e[1]) for e in queues[i]], d, w)
                          for i in range(len(machines))]
                i = int(np.argmin(deltas))
            else:
                i = assignment[jid]
            chosen[jid] = i
            q = queues[i] + [[d, w, w, jid]]
            q.sort(key=lambda e: (e[0], e[3]))
            queues[i] = q
            k += 1
    return 2.0 * flow, chosen


# --------------------------------------------------------------------------
# unweighted schedule, plain event loop


def simulate_unweighted(machines, jobs, speedup=1.0, assignment=None):
    """ALW per machine with greedy assignment; returns (flow, energy, assignment)."""

    def G(desc, n):
        return sum(j / speed(desc, j) for j in range(1, n + 1))

    def delta(desc, rems, p):
        rems = sorted(rems)
        cuts = sorted({0.0, p} | {r for r in rems if r < p})
        total = 0.0
        for lo, hi in zip(cuts, cuts[1:]):
            n = sum(1 for r in rems if r >= hi)
            total += (hi - lo) * (G(desc, n + 1) - G(desc, n))
        return total

    jobs = sorted(jobs, key=lambda j: (j[1], j[0]))
    queues = [[] for _ in machines]  # lists of [remaining, id]
    chosen = {}
    t = flow = energy = 0.0
    k = 0
    while k < len(jobs) or any(queues):
        nxt = jobs[k][1] if k < len(jobs) else math.inf
        rates = [speedup * speed(machines[i], len(q)) for i, q in enumerate(queues)]
        finish = [t + min(q)[0] / rates[i] if q else math.inf for i, q in enumerate(queues)]
        t1 = min([nxt] + finish)
        for i, q in enumerate(queues):
            if not q:
                continue
            flow += len(q) * (t1 - t)
            energy += len(q) * (t1 - t)
            q.sort()
            q[0][0] -= rates[i] * (t1 - t)
            if finish[i] <= t1 * (1 + 1e-13):
                q.pop(0)
        t = t1
        while k < len(jobs) and jobs[k][1] <= t:
            jid, r, p, _ = jobs[k]
            if assignment is None:
                ds = [delta(machines[i], [e[0] for e in queues[i]], p) for i in range(len(machines))]
                i = int(np.argmin(ds))
            else:
                i = assignment[jid]
            chosen[jid] = i
            queues[i].append([p, jid])
            k += 1
    return flow, energy, chosen
