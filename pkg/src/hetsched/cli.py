"""Command line: generate instances, run schedules, verify, compare policies.

Exit status is 0 on success, 1 when a verification check fails and 2 for
usage or input errors.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from . import io as hio
from .analysis import (VERIFY_THRESHOLD, CompetitiveParams, check_g_properties, couple,
                       integral_bound_fuzz, online_trace, potential)
from .baseline import (EnumerationTooLarge, exhaustive_offline_proxy,
                       greedy_total_weight_assignment, round_robin_assignment,
                       simulate_fixed_assignment)
from .model import MODES, UNWEIGHTED, WEIGHTED
from .suite import run_suite, verify_instance
from .unweighted import UnweightedSchedulerConfig, simulate_unweighted
from .weighted import WeightedSchedulerConfig, simulate_weighted
from .workload import POWER_FAMILIES, WorkloadSpec, generate_instance

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2
NOT_COMPUTED = "not computed"
TRAJECTORY_POINTS = 200


class UsageError(Exception):
    pass


def _positive(name, cast=float, minimum=0.0, strict=True):
    def parse(text):
        try:
            v = cast(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        bad = (v <= minimum) if strict else (v < minimum)
        if bad or (isinstance(v, float) and not math.isfinite(v)):
            op = ">" if strict else ">="
            raise argparse.ArgumentTypeError(f"{name} must be {op} {minimum:g}")
        return v
    return parse


def build_parser():
    p = argparse.ArgumentParser(prog="hetsched", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("instance", nargs="?", help="instance JSON file")
        sp.add_argument("--mode", choices=MODES, help="objective (defaults to the instance's own)")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--timing", action="store_true", help="include wall-clock seconds")

    g = sub.add_parser("gen", help="write a random instance")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--machines", type=_positive("--machines", int), default=2)
    g.add_argument("--jobs", type=_positive("--jobs", int, strict=False), default=4)
    g.add_argument("--mode", choices=MODES, default=WEIGHTED)
    g.add_argument("--power-family", choices=POWER_FAMILIES, default="poly")
    g.add_argument("--alphas", type=float, nargs="+", default=[2.0, 3.0])
    g.add_argument("--size-range", type=float, nargs=2, default=[0.1, 10.0])
    g.add_argument("--weight-range", type=float, nargs=2, default=[0.1, 10.0])
    g.add_argument("--release-span", type=float)
    g.add_argument("--out")

    r = sub.add_parser("run", help="simulate the online algorithm on an instance")
    common(r)
    r.add_argument("--speedup", type=_positive("--speedup", minimum=1.0, strict=False))
    r.add_argument("--epsilon", type=_positive("--epsilon"),
                   help="sets speedup to 1+epsilon and adds the potential to CSV output")

    v = sub.add_parser("verify", help="check the competitiveness conditions")
    common(v)
    v.add_argument("--random", nargs=2, type=int, metavar=("SEED", "COUNT"),
                   help="verify COUNT random suite instances starting at SEED")
    v.add_argument("--epsilon", type=_positive("--epsilon"),
                   help="defaults to 0.5 for a file and to a per-instance draw for --random")
    v.add_argument("--seed", type=int, default=0, help="seed for adversaries and fuzzing")
    v.add_argument("--adversaries", type=_positive("--adversaries", int, strict=False), default=20)
    v.add_argument("--fuzz", type=_positive("--fuzz", int, strict=False), default=1000,
                   help="samples per power function for the integral checks")

    c = sub.add_parser("compare", help="online algorithm against offline baselines")
    common(c)
    c.add_argument("--speedup", type=_positive("--speedup", minimum=1.0, strict=False))
    c.add_argument("--epsilon", type=_positive("--epsilon"))
    return p


# --------------------------------------------------------------------------
# helpers


def _load(args):
    if not args.instance:
        raise UsageError("an instance file is required")
    try:
        inst = hio.load_instance(args.instance)
    except OSError as exc:
        raise UsageError(f"cannot read {args.instance}: {exc.strerror}") from None
    except hio.InstanceFormatError as exc:
        raise UsageError(str(exc)) from None
    if args.mode and args.mode != inst.mode:
        raise UsageError(f"--mode {args.mode} does not match the instance mode {inst.mode}")
    return inst


def _speedup(args):
    if args.epsilon is not None and args.speedup is not None:
        if not math.isclose(args.speedup, 1.0 + args.epsilon):
            raise UsageError("--speedup and --epsilon disagree")
    if args.epsilon is not None:
        return 1.0 + args.epsilon
    return 1.0 if args.speedup is None else args.speedup


def _online(inst, speedup):
    if inst.mode == WEIGHTED:
        return simulate_weighted(inst, WeightedSchedulerConfig(speedup))
    return simulate_unweighted(inst, UnweightedSchedulerConfig(speedup))


def _proxy(inst):
    try:
        return exhaustive_offline_proxy(inst)
    except EnumerationTooLarge:
        return None, None


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _ratio(a, b):
    if b is None:
        return NOT_COMPUTED
    if b.objective > 0:
        return a.objective / b.objective
    return 0.0 if a.objective == 0 else NOT_COMPUTED


def _check_summary(rep):
    return rep.to_dict()


def trajectory_rows(inst, trace, adversary=None, epsilon=None, points=TRAJECTORY_POINTS):
    """Per-machine fractional weight, speed and power over time, plus the potential."""
    from . import _kernels as K

    T = trace.end_time
    times = sorted({s.time for s in trace.snapshots}
                   | {float(t) for t in np.linspace(0.0, T, points)})
    rows = []
    for t in times:
        states = trace.states_at(t)
        row = [t]
        loads = [st.total_fractional_weight for st in states]
        powers = [st.power_level() for st in states]
        speeds = [trace.speedup * float(K.speed(st.power.code, st.power.params, p)) if p > 0 else 0.0
                  for st, p in zip(states, powers)]
        row += loads + speeds + powers
        if adversary is not None:
            row.append(potential(inst.mode, states, adversary.states_at(t), epsilon))
        rows.append(row)
    m = inst.m
    header = (["time"] + [f"weight_{i}" for i in range(m)] + [f"speed_{i}" for i in range(m)]
              + [f"power_{i}" for i in range(m)] + (["phi"] if adversary is not None else []))
    return header, rows


# --------------------------------------------------------------------------
# subcommands


def cmd_gen(args):
    try:
        spec = WorkloadSpec(args.machines, args.jobs, args.mode, args.power_family,
                            tuple(args.alphas), tuple(args.size_range), tuple(args.weight_range),
                            args.release_span)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(args, hio.dumps_instance(generate_instance(args.seed, spec)))
    return EXIT_OK


def cmd_run(args):
    inst = _load(args)
    speedup = _speedup(args)
    t0 = time.perf_counter()
    trace, metrics = _online(inst, speedup)
    if args.format == "csv":
        adversary = None
        if args.epsilon is not None:
            amap, _ = _proxy(inst)
            if amap is not None:
                adversary = couple(inst, CompetitiveParams(args.epsilon), amap,
                                   online_trace(inst, CompetitiveParams(args.epsilon))[0]).adversary
        header, rows = trajectory_rows(inst, trace, adversary, args.epsilon)
        _emit(args, hio.rows_to_csv(header, rows))
        return EXIT_OK
    _, proxy = _proxy(inst)
    report = {
        "command": "run",
        "instance_digest": hio.instance_digest(inst),
        "mode": inst.mode,
        "speedup": speedup,
        "machines": inst.m,
        "jobs": inst.n,
        "metrics": {"online": metrics.to_dict()},
        "per_machine": [m.to_dict() for m in trace.machine_metrics],
        "completion_times": {str(k): v for k, v in sorted(trace.completion_times.items())},
        "assignment": {str(k): v for k, v in sorted(trace.assignment.items())},
        "proxy_objective": proxy.objective if proxy is not None else NOT_COMPUTED,
        "ratio_to_proxy": _ratio(metrics, proxy),
    }
    if args.timing:
        report["wall_clock_seconds"] = time.perf_counter() - t0
    _emit(args, hio.dumps(report))
    return EXIT_OK


def _fuzz_reports(pfs, rng, samples):
    reports = [integral_bound_fuzz(pfs, rng, samples)]
    mono, sub = None, None
    for pf in pfs:
        a, b = check_g_properties(pf, rng, samples)
        mono = a if mono is None else mono.merge(a)
        sub = b if sub is None else sub.merge(b)
    return reports + [mono, sub]


def cmd_verify(args):
    if args.random is None and not args.instance:
        raise UsageError("verify needs an instance file or --random SEED COUNT")
    if args.random is not None and args.instance:
        raise UsageError("give either an instance file or --random, not both")
    t0 = time.perf_counter()
    rng = np.random.default_rng(args.seed)
    if args.random is not None:
        seed, count = args.random
        if count < 0:
            raise UsageError("COUNT must be non-negative")
        modes = [args.mode] if args.mode else [WEIGHTED]
        report = {"command": "verify", "random": {"seed": seed, "count": count}, "suites": []}
        ok = True
        rows = []
        for mode in modes:
            summary = run_suite(seed, count, mode, args.epsilon, args.adversaries)
            ok &= summary.ok
            report["suites"].append(summary.to_dict())
            for r in summary.results:
                rows.append([mode, r.seed, r.epsilon, r.machines, r.jobs, r.arrival.passed,
                             r.arrival.total, r.running.passed, r.running.total,
                             r.boundary.passed, r.boundary.total, r.ratio, r.ratio_bound, r.ok])
        header = ["mode", "seed", "epsilon", "machines", "jobs", "arrival_passed", "arrival_total",
                  "running_passed", "running_total", "boundary_passed", "boundary_total",
                  "ratio", "ratio_bound", "ok"]
    else:
        inst = _load(args)
        params = CompetitiveParams(0.5 if args.epsilon is None else args.epsilon)
        try:
            res = verify_instance(inst, params, rng, args.adversaries, keep_items=True)
        except EnumerationTooLarge as exc:
            raise UsageError(str(exc)) from None
        fuzz = _fuzz_reports(inst.machines, rng, args.fuzz)
        ok = res.ok and all(r.ok for r in fuzz)
        report = {
            "command": "verify",
            "instance_digest": hio.instance_digest(inst),
            "mode": inst.mode,
            "epsilon": params.epsilon,
            "arrival": _check_summary(res.arrival),
            "arrivals_vs_proxy": res.arrival.items,
            "running": _check_summary(res.running),
            "boundary": _check_summary(res.boundary),
            "integral_checks": [_check_summary(r) for r in fuzz],
            "online_objective": res.online_objective,
            "proxy_objective": res.proxy_objective,
            "ratio": res.ratio,
            "ratio_bound": res.ratio_bound,
            "ok": ok,
        }
        header = ["job", "time", "dphi", "bound", "pass"]
        rows = [[a["job"], a["time"], a["dphi"], a["bound"], a["pass"]] for a in res.arrival.items]
    if args.timing:
        report["wall_clock_seconds"] = time.perf_counter() - t0
    if args.format == "csv":
        _emit(args, hio.rows_to_csv(header, rows))
    else:
        _emit(args, hio.dumps(report))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_compare(args):
    inst = _load(args)
    speedup = _speedup(args)
    t0 = time.perf_counter()
    _, online = _online(inst, speedup)
    _, online_unit = _online(inst, 1.0)
    policies = {"online": online, "online_speed1": online_unit}
    for name, fn in (("round_robin", round_robin_assignment),
                     ("greedy_weight", greedy_total_weight_assignment)):
        policies[name] = simulate_fixed_assignment(inst, fn(inst))
    amap, proxy = _proxy(inst)
    if proxy is not None:
        policies["proxy"] = proxy
    if args.format == "csv":
        rows = [[name, m.fractional_weighted_flow, m.integer_weighted_flow, m.energy, m.objective,
                 _ratio(m, proxy)] for name, m in policies.items()]
        _emit(args, hio.rows_to_csv(["policy", "fractional_weighted_flow", "integer_weighted_flow",
                                     "energy", "objective", "ratio_to_proxy"], rows))
        return EXIT_OK
    report = {
        "command": "compare",
        "instance_digest": hio.instance_digest(inst),
        "mode": inst.mode,
        "speedup": speedup,
        "metrics": {name: m.to_dict() for name, m in policies.items()},
        "ratios_to_proxy": {name: _ratio(m, proxy) for name, m in policies.items()},
        "proxy_assignment": (NOT_COMPUTED if amap is None
                             else {str(k): v for k, v in sorted(amap.mapping.items())}),
    }
    if args.timing:
        report["wall_clock_seconds"] = time.perf_counter() - t0
    _emit(args, hio.dumps(report))
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "verify": cmd_verify, "compare": cmd_compare}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hetsched {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
