"""Compiled kernels vs the plain-numpy fallback.

Each path runs in its own interpreter because the switch is read at import
time.  Compilation happens during a warm-up pass and is not timed.

    python benchmarks/bench_kernels.py [--repeat 3] [--suite 5] [--json]
"""

import argparse
import json
import os
import subprocess
import sys
import time

CHILD = "--child"


def workloads(suite_count):
    import numpy as np

    from hetsched import _kernels as K
    from hetsched.model import UNWEIGHTED, WEIGHTED
    from hetsched.power import PowerFunction
    from hetsched.suite import suite_instance, verify_instance
    from hetsched.unweighted import simulate_unweighted
    from hetsched.weighted import shadow_potential_weighted, simulate_weighted
    from hetsched.workload import WorkloadSpec, generate_instance

    rng = np.random.default_rng(0)
    table = PowerFunction.table([(0.5, 0.2), (1.0, 1.0), (2.0, 5.0), (4.0, 30.0)])
    xs = rng.uniform(0, 10, 20_000)
    big_w = generate_instance(1, WorkloadSpec(machines=4, jobs=200, power_family="mixed"))
    big_u = generate_instance(1, WorkloadSpec(machines=4, jobs=200, mode=UNWEIGHTED,
                                              power_family="mixed"))
    trace, _ = simulate_weighted(big_w)
    states = [s for snap in trace.snapshots[::10] for s in snap.states if s.jobs]

    def x_over_q_table():
        for x in xs:
            K.x_over_q(table.code, table.params, float(x))

    def integrals_table():
        for x in xs[:5000]:
            K.int_x_over_q(table.code, table.params, 0.0, float(x))

    def shadows():
        for st in states:
            shadow_potential_weighted(st)

    def suite():
        for seed in range(suite_count):
            for mode in (WEIGHTED, UNWEIGHTED):
                inst, params, r = suite_instance(seed, mode)
                verify_instance(inst, params, r)

    return {
        "x_over_q table x20000": x_over_q_table,
        "int_x_over_q table x5000": integrals_table,
        f"shadow_potential x{len(states)}": shadows,
        "simulate weighted 4x200": lambda: simulate_weighted(big_w),
        "simulate unweighted 4x200": lambda: simulate_unweighted(big_u),
        f"verify_instance x{2 * suite_count}": suite,
    }


def child(repeat, suite_count):
    import hetsched

    out = {"numba": hetsched.NUMBA_ENABLED, "times": {}}
    for name, fn in workloads(suite_count).items():
        fn()
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out["times"][name] = best
    print(json.dumps(out))


def spawn(disable, repeat, suite_count):
    env = dict(os.environ)
    env.pop("HETSCHED_DISABLE_NUMBA", None)
    if disable:
        env["HETSCHED_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, __file__, CHILD, str(repeat), str(suite_count)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--suite", type=int, default=5, help="suite seeds per mode")
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    fast = spawn(False, args.repeat, args.suite)
    slow = spawn(True, args.repeat, args.suite)
    if not fast["numba"]:
        print("numba unavailable: both columns use the fallback", file=sys.stderr)
    rows = [(name, fast["times"][name], slow["times"][name]) for name in fast["times"]]
    if args.json:
        print(json.dumps([{"workload": n, "numba_s": f, "fallback_s": s, "speedup": s / f}
                          for n, f, s in rows], indent=2))
        return
    print(f"{'workload':32s} {'numba [s]':>10s} {'fallback [s]':>13s} {'speedup':>8s}")
    for name, f, s in rows:
        print(f"{name:32s} {f:10.4f} {s:13.4f} {s / f:7.1f}x")


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == CHILD:
        child(int(sys.argv[2]), int(sys.argv[3]))
    else:
        main()
