import numpy as np
import pytest

import oracles as O
from hetsched.baseline import (AssignmentMap, EnumerationTooLarge, brute_force_proxy,
                               exhaustive_offline_proxy, greedy_total_weight_assignment,
                               random_assignment, round_robin_assignment,
                               simulate_fixed_assignment)
from hetsched.model import UNWEIGHTED, WEIGHTED, Instance, Job
from hetsched.power import PowerFunction
from hetsched.unweighted import simulate_unweighted
from hetsched.weighted import simulate_weighted
from hetsched.workload import WorkloadSpec, generate_instance

P2 = PowerFunction.polynomial(2.0)
TWO_UNIT = (Job(0, 0, 1, 1), Job(1, 0, 1, 1))


def test_single_machine_matches_online():
    for mode, simulate in ((WEIGHTED, simulate_weighted), (UNWEIGHTED, simulate_unweighted)):
        inst = generate_instance(2, WorkloadSpec(machines=1, jobs=5, mode=mode, power_family="mixed"))
        amap = AssignmentMap({j.id: 0 for j in inst.jobs})
        assert simulate_fixed_assignment(inst, amap).objective == pytest.approx(
            simulate(inst)[1].objective, rel=1e-14)


def test_split_and_stacked_maps():
    inst = Instance((P2, P2), TWO_UNIT)
    assert simulate_fixed_assignment(inst, AssignmentMap({0: 0, 1: 1})).objective == pytest.approx(8 / 3)
    # both present at t=0 on one machine: twice the shadow potential I(0, 2)
    stacked = simulate_fixed_assignment(inst, AssignmentMap({0: 0, 1: 0})).objective
    assert stacked == pytest.approx(2 * 2 ** 2.5 / 3, rel=1e-12)
    want, _ = O.simulate_weighted([P2.to_dict()] * 2, [(0, 0, 1, 1), (1, 0, 1, 1)],
                                  assignment={0: 0, 1: 0})
    assert stacked == pytest.approx(want, rel=1e-6)


def test_proxy_examples():
    inst = Instance((P2,), TWO_UNIT)
    amap, m = exhaustive_offline_proxy(inst)
    assert amap.mapping == {0: 0, 1: 0}
    amap, m = exhaustive_offline_proxy(Instance((P2, P2), TWO_UNIT))
    assert amap.mapping[0] != amap.mapping[1]
    assert m.objective == pytest.approx(8 / 3)


@pytest.mark.parametrize("mode", [WEIGHTED, UNWEIGHTED])
def test_proxy_matches_shuffled_brute_force(mode):
    for seed in range(4):
        inst = generate_instance(seed, WorkloadSpec(machines=2, jobs=4, mode=mode, power_family="mixed"))
        _, m = exhaustive_offline_proxy(inst)
        order = np.random.default_rng(seed).permutation(2 ** 4)
        _, cost = brute_force_proxy(inst, order)
        assert m.objective == pytest.approx(cost, rel=1e-12)


def test_proxy_dominates_other_policies():
    for seed in range(6):
        inst = generate_instance(seed, WorkloadSpec(machines=3, jobs=5, power_family="mixed"))
        _, proxy = exhaustive_offline_proxy(inst)
        rng = np.random.default_rng(seed)
        maps = [round_robin_assignment(inst), greedy_total_weight_assignment(inst),
                AssignmentMap(simulate_weighted(inst)[0].assignment)]
        maps += [random_assignment(inst, rng) for _ in range(5)]
        for amap in maps:
            assert proxy.objective <= simulate_fixed_assignment(inst, amap).objective * (1 + 1e-12)


def test_cap():
    inst = generate_instance(0, WorkloadSpec(machines=3, jobs=9))
    with pytest.raises(EnumerationTooLarge, match="round_robin"):
        exhaustive_offline_proxy(inst)
    exhaustive_offline_proxy(generate_instance(0, WorkloadSpec(machines=3, jobs=8)))


def test_heuristic_maps():
    inst = Instance((P2, P2), (Job(0, 0, 1, 3), Job(1, 1, 1, 1), Job(2, 2, 1, 1)))
    assert round_robin_assignment(inst).as_list(inst) == [0, 1, 0]
    assert greedy_total_weight_assignment(inst).as_list(inst) == [0, 1, 1]
    empty = Instance((P2,), ())
    assert len(round_robin_assignment(empty)) == 0
    assert len(greedy_total_weight_assignment(empty)) == 0


def test_map_validation():
    inst = Instance((P2,), TWO_UNIT)
    with pytest.raises(ValueError):
        simulate_fixed_assignment(inst, AssignmentMap({0: 0}))
    with pytest.raises(ValueError):
        simulate_fixed_assignment(inst, AssignmentMap({0: 0, 1: 1}))
    with pytest.raises(ValueError):
        simulate_fixed_assignment(inst, AssignmentMap({0: 0, 1: 0}), mode=UNWEIGHTED)
