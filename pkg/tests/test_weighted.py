import math

import numpy as np
import pytest

import oracles as O
from hetsched import sim
from hetsched.model import WEIGHTED, Instance, Job, MachineState
from hetsched.power import NonTerminatingSegment, PowerFunction
from hetsched.weighted import (WeightedSchedulerConfig, advance_weighted, assign_weighted,
                               assignment_delta_weighted, drain_weighted, future_cost_weighted,
                               shadow_potential_weighted, simulate_weighted)
from hetsched.workload import WorkloadSpec, generate_instance

P2 = PowerFunction.polynomial(2.0)
P3 = PowerFunction.polynomial(3.0)
I02 = 2 ** 2.5 / 3  # int_0^2 sqrt(x) dx


def state(pf, *jobs):
    st = MachineState(pf, WEIGHTED)
    for k, (w, p) in enumerate(jobs):
        st.insert(Job(k, 0.0, p, w))
    return st


def test_config_validation():
    with pytest.raises(ValueError):
        WeightedSchedulerConfig(speedup=0.9)
    with pytest.raises(ValueError):
        WeightedSchedulerConfig(completion_threshold=0.0)
    with pytest.raises(ValueError):
        WeightedSchedulerConfig(completion_threshold=1e-3)


def test_shadow_potential_examples():
    assert shadow_potential_weighted(state(P2)) == 0.0
    assert shadow_potential_weighted(state(P2, (1, 1))) == pytest.approx(2 / 3, rel=1e-14)
    assert shadow_potential_weighted(state(P2, (1, 1), (1, 2))) == pytest.approx(I02 + 2 / 3, rel=1e-14)


def test_shadow_potential_matches_quadrature_oracle(pf):
    rng = np.random.default_rng(3)
    for _ in range(5):
        jobs = [(float(rng.uniform(0.1, 3)), float(rng.uniform(0.1, 3))) for _ in range(4)]
        st = state(pf, *jobs)
        queue = [(p / w, w) for w, p in jobs]
        assert shadow_potential_weighted(st) == pytest.approx(O.shadow_weighted(pf.to_dict(), queue), rel=1e-9)


def test_assignment_delta_examples():
    assert assignment_delta_weighted(state(P2), Job(9, 0, 1.0, 1.0)) == pytest.approx(2 / 3)
    assert assignment_delta_weighted(state(P2), Job(9, 0, 1.0, 1e-300)) == pytest.approx(0.0, abs=1e-100)
    assert assignment_delta_weighted(state(P2, (1, 1)), Job(9, 0, 1.0, 1.0)) == pytest.approx(I02 - 2 / 3)


def test_assignment_delta_is_shadow_increase(pf):
    st = state(pf, (1.0, 2.0), (0.5, 0.3), (2.0, 1.0))
    job = Job(9, 0.0, 1.3, 0.7)
    after = st.copy()
    after.insert(job)
    inc = shadow_potential_weighted(after) - shadow_potential_weighted(st)
    assert assignment_delta_weighted(st, job) == pytest.approx(inc, rel=1e-10)


def test_assign_examples():
    job = Job(9, 0, 1.0, 1.0)
    ms = [state(P2), state(P2)]
    assert assign_weighted(ms, job) == 0 and len(ms[0]) == 1
    assert assign_weighted([state(P2, (1, 1)), state(P2)], job) == 1
    # 3/5 on the cubic machine beats 2/3 on the quadratic one
    assert assign_weighted([state(P2), state(P3)], job) == 1


def test_advance_single_job_closed_form():
    cfg = WeightedSchedulerConfig()
    res = advance_weighted(state(P2, (1, 1)), cfg, math.inf)
    assert res.completed.id == 0
    assert res.elapsed == pytest.approx(2.0, rel=1e-12)
    assert res.metrics.fractional_weighted_flow == pytest.approx(2 / 3, rel=1e-12)
    assert res.metrics.energy == pytest.approx(2 / 3, rel=1e-12)
    fast = advance_weighted(state(P2, (1, 1)), WeightedSchedulerConfig(1.5), math.inf)
    assert fast.elapsed == pytest.approx(4 / 3, rel=1e-12)
    assert fast.metrics.fractional_weighted_flow == pytest.approx(4 / 9, rel=1e-12)
    assert fast.metrics.energy == pytest.approx(4 / 9, rel=1e-12)


def test_advance_partial_then_rest():
    cfg = WeightedSchedulerConfig()
    first = advance_weighted(state(P2, (1, 1)), cfg, 1.0)
    assert first.completed is None and first.elapsed == 1.0
    # w' = -sqrt(w): sqrt(w(t)) = 1 - t/2
    assert first.state.masses[0] == pytest.approx(0.25, rel=1e-12)
    rest = advance_weighted(first.state, cfg, math.inf)
    assert first.elapsed + rest.elapsed == pytest.approx(2.0, rel=1e-12)
    total = first.metrics.fractional_weighted_flow + rest.metrics.fractional_weighted_flow
    assert total == pytest.approx(2 / 3, rel=1e-12)


def test_advance_empty_machine():
    res = advance_weighted(state(P2), WeightedSchedulerConfig(), 3.0)
    assert res.completed is None and res.metrics.objective == 0.0
    with pytest.raises(ValueError):
        advance_weighted(state(P2), WeightedSchedulerConfig(), -1.0)


def test_threshold_only_for_divergent_drain():
    table = PowerFunction.table([(1, 1), (2, 4)])
    res = advance_weighted(state(table, (1, 1)), WeightedSchedulerConfig(), math.inf)
    assert res.completed is not None and math.isfinite(res.elapsed)
    # without a positive floor the lone job never finishes
    st = state(table, (1, 1))
    with pytest.raises(NonTerminatingSegment):
        sim.step(st, 0.0, 1.0, 0.0, complete=True)
    # a polynomial machine ignores the threshold
    assert sim.end_mass(state(P2, (1, 1)), 1e-4) == 0.0


def test_simulate_examples():
    tr, m = simulate_weighted(Instance((P2,), (Job(0, 0.0, 1.0, 1.0),)))
    assert m.objective == pytest.approx(4 / 3, rel=1e-12)
    assert tr.completion_times[0] == pytest.approx(2.0, rel=1e-12)
    _, m = simulate_weighted(Instance((P2,), ()))
    assert m.objective == 0.0
    tr, m = simulate_weighted(Instance((P2, P2), (Job(0, 0, 1, 1), Job(1, 0, 1, 1))))
    assert tr.assignment == {0: 0, 1: 1}
    assert m.objective == pytest.approx(8 / 3, rel=1e-12)


def test_simulate_rejects_unweighted():
    with pytest.raises(ValueError):
        simulate_weighted(Instance((P2,), (Job(0, 0, 1),), "unweighted"))


@pytest.mark.parametrize("seed", range(6))
def test_simulation_matches_ode_oracle(seed):
    inst = generate_instance(seed, WorkloadSpec(machines=2, jobs=5, power_family="mixed"))
    machines = [pf.to_dict() for pf in inst.machines]
    jobs = [(j.id, j.release, j.size, j.weight) for j in inst.jobs]
    tr, m = simulate_weighted(inst, WeightedSchedulerConfig(1.5))
    want, chosen = O.simulate_weighted(machines, jobs, 1.5)
    assert chosen == tr.assignment
    assert m.objective == pytest.approx(want, rel=1e-5)


def _reachable_states(count, seed):
    """States seen mid-trace in random instances."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        spec = WorkloadSpec(machines=1, jobs=int(rng.integers(1, 7)), power_family="mixed")
        inst = generate_instance(int(rng.integers(2 ** 31)), spec)
        tr, _ = simulate_weighted(inst)
        t = float(rng.uniform(0, tr.end_time))
        st = tr.states_at(t)[0]
        if st.jobs:
            out.append(st)
    return out


def test_future_cost_identity():
    # a tiny threshold keeps the dropped residual of divergent drains negligible
    cfg = WeightedSchedulerConfig(completion_threshold=1e-13)
    for st in _reachable_states(40, 11):
        assert drain_weighted(st, cfg).objective == pytest.approx(future_cost_weighted(st), rel=1e-6)


def test_energy_equals_fractional_flow_per_machine():
    for seed in range(10):
        inst = generate_instance(seed, WorkloadSpec(machines=3, jobs=6, power_family="mixed"))
        tr, m = simulate_weighted(inst)
        for mm in tr.machine_metrics:
            assert mm.energy == pytest.approx(mm.fractional_weighted_flow, rel=1e-8)
        assert m.integer_weighted_flow >= m.fractional_weighted_flow


def test_trace_invariants():
    inst = generate_instance(4, WorkloadSpec(machines=2, jobs=8, power_family="mixed"))
    tr, _ = simulate_weighted(inst)
    times = [e.time for e in tr.events]
    assert times == sorted(times)
    for k, e in enumerate(tr.events):
        if e.kind != "arrival":
            continue
        snap = tr.snapshots[tr.arrival_index(e.job)]
        before = tr.states_before(tr.arrival_index(e.job))
        job = next(j for j in inst.jobs if j.id == e.job)
        deltas = [assignment_delta_weighted(s, job) for s in before]
        assert deltas[e.machine] <= min(deltas)
        for s in snap.states:
            if s.jobs:
                assert s.keys[0] == min(s.keys)
                assert s.total_fractional_weight == pytest.approx(float(s.masses.sum()), rel=1e-9)
                assert np.all(s.masses <= np.array([j.weight for j in s.jobs]) * (1 + 1e-12))


def test_monotone_in_speedup_for_fixed_assignment():
    from hetsched.baseline import simulate_fixed_assignment  # noqa: F401
    for seed in range(15):
        inst = generate_instance(seed, WorkloadSpec(machines=2, jobs=6, power_family="mixed"))
        tr, _ = simulate_weighted(inst)
        costs = []
        for sp in (1.0, 1.25, 1.5, 2.0, 3.0):
            side = sim.Side(inst, sp, 1e-9, lambda s, j, a=tr.assignment: a[j.id], False)
            sim.run(inst, [side])
            costs.append(side.metrics.objective)
        assert all(b <= a * (1 + 1e-12) for a, b in zip(costs, costs[1:]))


def test_greedy_speedup_can_change_assignment():
    """Deltas ignore speedup, but the queues they see at a later arrival do not."""
    changed = 0
    for seed in range(30):
        inst = generate_instance(seed, WorkloadSpec(machines=2, jobs=6))
        a = simulate_weighted(inst, WeightedSchedulerConfig(1.0))[0].assignment
        b = simulate_weighted(inst, WeightedSchedulerConfig(2.0))[0].assignment
        changed += a != b
    assert changed > 0
