"""Command-line benchmark harness.

    miniqmc-bench disttable --n 768 --variant ref
    miniqmc-bench jastrow --preset nio-64 --variant opt --steps 1
    miniqmc-bench bspline --preset graphite --verify
    miniqmc-bench miniqmc --preset tiny --steps 10 --verify --out report.json

Exit codes: 0 success, 2 usage error, 3 verification failure, 4 runtime failure.
"""

import argparse
import logging
import sys
import time

import numpy as np

from . import bench
from .errors import QMCError
from .presets import PRESETS, build_system, preset
from .report import build_report, memory_report, stats_dict, write_csv, write_json

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_RUNTIME = 0, 2, 3, 4

log = logging.getLogger("miniqmc")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--n", type=int, help="electron count (kernel benchmarks) or orbital count (bspline)")
    common.add_argument("--steps", type=int, help="sweeps / MC generations")
    common.add_argument("--walkers", type=int, default=None, help="target population")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--tau", type=float, default=0.01)
    common.add_argument("--variant", choices=("ref", "opt"), default="opt")
    common.add_argument("--precision", choices=("double", "mixed"), default=None)
    common.add_argument("--policy", choices=("forward_update", "on_the_fly"), default="on_the_fly")
    common.add_argument("--seed", type=int, default=2017)
    common.add_argument("--verify", action="store_true", help="check against the brute-force oracle")
    common.add_argument("--report-memory", action="store_true")
    common.add_argument("--no-timers", action="store_true")
    common.add_argument("--out", metavar="FILE", help="write the JSON report here")
    common.add_argument("--csv", metavar="FILE", help="per-step energies (miniqmc only)")
    common.add_argument("-q", "--quiet", action="store_true")

    ap = argparse.ArgumentParser(prog="miniqmc-bench", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("disttable", parents=[common], help="distance-table kernel loop")
    sub.add_parser("jastrow", parents=[common], help="one/two-body Jastrow kernel loop")
    sub.add_parser("bspline", parents=[common], help="tricubic B-spline SPO evaluation")
    mq = sub.add_parser("miniqmc", parents=[common], help="full VMC/DMC driver")
    mq.add_argument("--driver", choices=("vmc", "dmc"), default="dmc")
    return ap


def _precision(args):
    # the reference build keeps everything in double; the optimized one runs mixed
    if args.precision:
        return args.precision
    return "double" if args.variant == "ref" else "mixed"


def _kernel(args, precision):
    timers_on = not args.no_timers
    from .drivers.timers import KernelTimers
    timers = KernelTimers(timers_on)
    steps = args.steps if args.steps is not None else 2
    if args.command == "bspline":
        res = bench.bspline_bench(args.preset or "graphite", args.n, samples=256 * steps,
                                  precision=precision, seed=args.seed, timers=timers,
                                  verify=args.verify)
    else:
        n = args.n or (preset(args.preset).n_electrons if args.preset else 256)
        fn = bench.disttable_bench if args.command == "disttable" else bench.jastrow_bench
        kw = {"verify": args.verify} if args.command == "jastrow" else {}
        res = fn(n, steps, args.variant, precision, args.policy, args.seed, args.preset,
                 timers=timers, **kw)
    if args.verify and args.command == "disttable":
        res.verified = _verify_disttable(args, precision, steps)
    meta = {"variant": args.variant, "precision": precision, "threads": 1, "seed": args.seed,
            "preset": args.preset, "n": res.n, "steps": steps, "policy": args.policy}
    meta.update(res.meta)
    checks = {"kernel": res.checksum}
    if res.verified is not None:
        checks["ok"] = bool(res.verified)
    kernel = {"name": res.kernel, "moves": res.n_moves, "seconds": res.seconds,
              "throughput": res.throughput}
    memory = {}
    if args.report_memory and args.preset:
        memory = memory_report(args.preset, args.variant, precision, 1, 1)
    report = build_report(args.command, meta, timers if timers_on else None, res.seconds,
                          stats={"throughput": res.throughput}, memory=memory,
                          checksums=checks, kernel=kernel)
    return report, res.verified is not False


def _verify_disttable(args, precision, steps):
    # policy equivalence: the other layout must land on the same distances
    other = "ref" if args.variant == "opt" else "opt"
    n = args.n or (preset(args.preset).n_electrons if args.preset else 256)
    a = bench.disttable_bench(n, steps, args.variant, precision, args.policy, args.seed, args.preset)
    b = bench.disttable_bench(n, steps, other, precision, args.policy, args.seed, args.preset)
    return abs(a.checksum - b.checksum) <= 1e-12 * abs(a.checksum)


def _miniqmc(args, precision):
    from .drivers.dmc import RunParams, run
    from .engine import Engine
    name = args.preset or "tiny"
    p = preset(name)
    walkers = args.walkers or max(args.threads, 4)
    steps = args.steps
    if steps is None:
        steps = 0 if args.report_memory else 10
    meta = {"variant": args.variant, "precision": precision, "threads": args.threads,
            "seed": args.seed, "preset": name, "n_electrons": p.n_electrons,
            "n_ions": p.n_ions, "steps": steps, "target_walkers": walkers, "tau": args.tau,
            "driver": args.driver, "policy": args.policy}
    if steps == 0:
        # accounting only: no tables or orbitals are allocated
        memory = memory_report(name, args.variant, precision, args.threads, walkers)
        return build_report("miniqmc", meta, memory=memory), True
    params = RunParams(tau=args.tau, n_steps=steps, target_pop=walkers, n_threads=args.threads,
                       precision=precision, variant=args.variant, seed=args.seed,
                       driver=args.driver, policy=args.policy, timers=not args.no_timers)
    system = build_system(p)
    engines = [Engine(system, args.variant, precision, args.policy) for _ in range(args.threads)]
    t0 = time.perf_counter()
    result = run(params, system, engines=engines)
    wall = time.perf_counter() - t0
    meta["t_cpu"] = result.busy_seconds
    meta["partial"] = result.partial
    checks = {"logpsi": result.logpsi_checksum,
              "e_total": float(sum(w.e_local for w in result.walkers))}
    ok = not result.partial
    if args.verify:
        ok = _verify_walkers(result, system) and ok
        checks["ok"] = ok
    memory = memory_report(name, args.variant, precision, args.threads, walkers,
                           engines=engines, walkers=result.walkers) if args.report_memory else {}
    report = build_report("miniqmc", meta, result.timers if params.timers else None,
                          result.busy_seconds or wall, stats_dict(result.stats), memory, checks)
    if args.csv:
        write_csv(result.stats, args.csv)
    return report, ok


def _verify_walkers(result, system, max_walkers=4):
    """Stored log|Psi| of each walker against a from-scratch brute-force evaluation."""
    from .oracle import brute_logpsi
    tol = 1e-8 if result.params.precision == "double" else 5e-4
    ok = True
    for w in result.walkers[:max_walkers]:
        ref, sign = brute_logpsi(w.R, system.ions, system.wf_config)
        err = abs(w.buffer[0] - ref) / max(1.0, abs(ref))
        if err > tol or w.buffer[1] != sign:
            log.error("walker %d: log|psi| %.12g vs oracle %.12g", w.walker_id, w.buffer[0], ref)
            ok = False
    return ok


def main(argv=None):
    ap = _parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1 or (args.walkers is not None and args.walkers < args.threads):
        ap.error("need --walkers >= --threads >= 1")
    if not args.tau > 0:
        ap.error("--tau must be positive")
    if args.steps is not None and args.steps < 0:
        ap.error("--steps must be non-negative")
    if args.n is not None and args.command == "miniqmc":
        ap.error("--n applies to the kernel benchmarks; use --preset for miniqmc")
    if args.n is not None and args.n < 2:
        ap.error("--n must be at least 2")
    if args.command == "disttable" and args.report_memory and not args.preset:
        ap.error("--report-memory needs --preset")
    precision = _precision(args)
    try:
        if args.command == "miniqmc":
            report, ok = _miniqmc(args, precision)
        else:
            report, ok = _kernel(args, precision)
    except (QMCError, MemoryError, ValueError, np.linalg.LinAlgError) as exc:
        log.error("run failed: %s", exc)
        return EXIT_RUNTIME
    if args.out:
        write_json(report, args.out)
    if not args.quiet:
        _summary(report)
    if not ok:
        log.error("verification failed")
        return EXIT_VERIFY
    return EXIT_OK


def _summary(report):
    meta = report["meta"]
    print("%s  variant=%s precision=%s threads=%s" % (meta["command"], meta.get("variant"),
                                                     meta.get("precision"), meta.get("threads")))
    for key, val in report.get("stats", {}).items():
        if val is not None:
            print("  %-16s %s" % (key, val))
    if report.get("timers_normalized"):
        frac = sorted(report["timers_normalized"].items(), key=lambda kv: -kv[1])
        print("  hot spots: " + ", ".join("%s %.1f%%" % (k, 100 * v) for k, v in frac if v > 0))
    mem = report.get("memory")
    if mem:
        print("  per-walker bytes: %s" % mem["per_walker_bytes"])
        print("  model prediction: %d bytes" % mem["model"]["predicted_bytes"])
    for key, val in report.get("checksums", {}).items():
        print("  checksum %-8s %s" % (key, val))


if __name__ == "__main__":
    sys.exit(main())
