"""Benchmark the compiled kernels against the pure-Python fallback.

Two views:
  * microbenchmarks of the kernel entry points on the bundled six-user cell
    (direct imports of both backend modules, same inputs), and
  * an end-to-end budget sweep timed in a subprocess per backend, selected
    with the CELLALLOC_BACKEND environment variable.

Run from the repository root:

    python3 benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import importlib
import os
import subprocess
import sys
import time

import numpy as np


def _load_backends():
    backends = {}
    try:
        backends["compiled"] = importlib.import_module("cellalloc._kernels")
    except ImportError:
        print("compiled extension not importable; benchmarking fallback only")
    backends["python"] = importlib.import_module("cellalloc._kernels_py")
    return backends


def _reference_tables():
    from cellalloc import load_scenario

    return load_scenario("table1.scenario", budget=105.0).tables


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def micro(repeats):
    backends = _load_backends()
    t = _reference_tables()
    n_apps = len(t.kinds)
    prices = np.logspace(-6, 2, 2000)
    rates = np.linspace(0.1, 120.0, 2000)
    out = np.empty(n_apps)

    cases = {}
    for name, mod in backends.items():

        def scalar_slope(mod=mod):
            for r in rates:
                for j in range(n_apps):
                    mod.slope(t.kinds[j], t.p1[j], t.p2[j], r)

        def inverse(mod=mod):
            for p in prices:
                mod.slope_inverse(mod.SIGMOID, 3.0, 15.0, p)

        def demand(mod=mod):
            for p in prices:
                mod.demand_rates(t.kinds, t.p1, t.p2, t.weights, p, out)

        cases[name] = {
            "slope (24k calls)": scalar_slope,
            "slope_inverse (2k calls)": inverse,
            "demand_rates (2k x 12 apps)": demand,
        }

    names = list(cases["python"])
    print(f"{'kernel microbenchmark':36s}" + "".join(f"{b:>12s}" for b in cases))
    speedups = []
    for case in names:
        row = [_time(cases[b][case], repeats) for b in cases]
        line = f"{case:36s}" + "".join(f"{t_*1e3:10.2f}ms" for t_ in row)
        if len(row) == 2:
            speedups.append(row[1] / row[0])
            line += f"   x{row[1] / row[0]:.1f}"
        print(line)
    if speedups:
        print(f"{'geometric-mean speedup':36s}{'':12s}{'':12s}   "
              f"x{float(np.prod(speedups)) ** (1.0 / len(speedups)):.1f}")


def end_to_end(repeats):
    script = (
        "import time, cellalloc\n"
        "from cellalloc import load_scenario, run_sweep, SweepSpec\n"
        "s = load_scenario('table1.scenario', budget=105.0)\n"
        "spec = SweepSpec(mode='distributed')\n"
        "t0 = time.perf_counter()\n"
        "res = run_sweep(s, spec)\n"
        "dt = time.perf_counter() - t0\n"
        "print(cellalloc.BACKEND, dt)\n"
    )
    print()
    print("end-to-end: 39-budget distributed sweep, one process per backend")
    times = {}
    for backend in ("compiled", "python"):
        env = dict(os.environ, CELLALLOC_BACKEND=backend)
        best = float("inf")
        for _ in range(repeats):
            proc = subprocess.run([sys.executable, "-c", script], env=env,
                                  capture_output=True, text=True)
            if proc.returncode != 0:
                print(f"{backend}: failed\n{proc.stderr}")
                return
            got, dt = proc.stdout.split()
            assert got == backend, f"backend selection failed: {got}"
            best = min(best, float(dt))
        times[backend] = best
        print(f"{backend:36s}{best*1e3:10.2f}ms")
    print(f"{'speedup':36s}{'':10s}   x{times['python'] / times['compiled']:.1f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3,
                    help="take the best of N timings (default 3)")
    args = ap.parse_args()
    micro(args.repeats)
    end_to_end(args.repeats)


if __name__ == "__main__":
    main()
