"""Command line front end.

    cellalloc allocate --scenario table1.scenario --budget 200
    cellalloc sweep    --scenario table1.scenario --out sweep.csv
    cellalloc verify   --scenario table1.scenario --budget 200

Exit codes: 0 success, 1 verification failure, 2 usage / input errors,
3 solver or convergence failures.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .allocator import Scenario, centralized_allocate, verify_kkt
from .errors import CellallocError, ScenarioParseError, SolverError
from .protocol import (
    ExponentialDecay,
    RationalDecay,
    RunStatus,
    SimConfig,
    run_distributed,
)
from .scenario_io import (
    SweepResult,
    SweepSpec,
    emit_results,
    load_scenario,
    run_sweep,
    solve_point,
)

_EXIT_OK = 0
_EXIT_FAIL = 1
_EXIT_USAGE = 2
_EXIT_NO_CONVERGE = 3

# the distributed protocol matches the direct solve to well under this on
# abundant budgets; `verify` treats anything worse as a failure
_VERIFY_RTOL = 1e-2


def _parse_decay(text: str):
    if text == "none":
        return None
    try:
        if text.startswith("exp:"):
            l1, l2 = (float(v) for v in text[4:].split(","))
            return ExponentialDecay(l1=l1, l2=l2)
        if text.startswith("rational:"):
            return RationalDecay(l3=float(text[len("rational:"):]))
    except (ValueError, CellallocError):
        pass
    raise argparse.ArgumentTypeError(
        f"bad decay {text!r}: expected exp:L1,L2 or rational:L3 or none"
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellalloc",
        description="Utility-proportional-fair downlink rate allocation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_mode: bool = True) -> None:
        p.add_argument(
            "--scenario",
            required=True,
            help="scenario file path, or a bundled scenario name (table1.scenario)",
        )
        if with_mode:
            p.add_argument(
                "--mode",
                choices=("centralized", "distributed", "eura-basic"),
                default="centralized",
            )
        p.add_argument("--delta", type=float, default=1e-4,
                       help="bid termination threshold (protocol modes)")
        p.add_argument("--decay", type=_parse_decay, default=ExponentialDecay(),
                       metavar="exp:L1,L2|rational:L3|none",
                       help="bid-step decay envelope (default exp:10,100)")
        p.add_argument("--max-iters", type=int, default=5000)

    p_alloc = sub.add_parser("allocate", help="solve one budget point")
    add_common(p_alloc)
    p_alloc.add_argument("--budget", type=float, required=True)
    p_alloc.add_argument("--out", help="write the result as a one-row sweep CSV")
    p_alloc.add_argument("--trace", help="write the bid-loop trace CSV (protocol modes)")

    p_sweep = sub.add_parser("sweep", help="re-solve over a budget grid")
    add_common(p_sweep)
    p_sweep.add_argument("--r-min", type=float, default=10.0)
    p_sweep.add_argument("--r-max", type=float, default=200.0)
    p_sweep.add_argument("--r-step", type=float, default=5.0)
    p_sweep.add_argument("--out", help="output CSV path (default: stdout)")

    p_verify = sub.add_parser(
        "verify",
        help="cross-check distributed against centralized at one budget",
    )
    add_common(p_verify, with_mode=False)
    p_verify.add_argument("--budget", type=float, required=True)
    return parser


def _sim_config(args: argparse.Namespace) -> SimConfig:
    return SimConfig(delta=args.delta, max_iters=args.max_iters, decay=args.decay)


def _print_row(row, mode: str) -> None:
    print(f"mode={mode} status={row.status} iters={row.iterations} "
          f"p={row.price:.12g} total={sum(row.ue_rates):.12g}")
    for i, r in enumerate(row.ue_rates, start=1):
        if row.app_rates is not None:
            split = " ".join(f"{x:.12g}" for x in row.app_rates[i - 1])
            print(f"  ue{i}: r={r:.12g}  apps: {split}")
        else:
            print(f"  ue{i}: r={r:.12g}")


def _cmd_allocate(args: argparse.Namespace) -> int:
    s = load_scenario(args.scenario, budget=args.budget)
    cfg = _sim_config(args)
    if args.trace and args.mode == "centralized":
        print("--trace needs a protocol mode (distributed or eura-basic)",
              file=sys.stderr)
        return _EXIT_USAGE

    if args.trace:
        from .protocol import run_eura_basic
        from .scenario_io import row_from_outcome

        out = (run_distributed(s, cfg) if args.mode == "distributed"
               else run_eura_basic(s, cfg))
        emit_results(out.trace, args.trace)
        row = row_from_outcome(s.budget, out)
    else:
        row = solve_point(s, args.mode, cfg)
    _print_row(row, args.mode)
    if args.out:
        emit_results(SweepResult(mode=args.mode, rows=(row,)), args.out)
    if args.mode != "centralized" and row.status != RunStatus.CONVERGED.value:
        return _EXIT_NO_CONVERGE
    return _EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    s = load_scenario(args.scenario, budget=args.r_min)
    spec = SweepSpec(
        r_min=args.r_min,
        r_max=args.r_max,
        r_step=args.r_step,
        mode=args.mode,
        config=_sim_config(args),
    )
    res = run_sweep(s, spec)
    if args.out:
        emit_results(res, args.out)
        n_bad = sum(1 for r in res.rows if r.status != RunStatus.CONVERGED.value)
        print(f"wrote {args.out}: {len(res.rows)} budgets, mode={res.mode}, "
              f"{n_bad} non-converged")
    else:
        from .scenario_io import _sweep_lines

        sys.stdout.write("\n".join(_sweep_lines(res)) + "\n")
    return _EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    s = load_scenario(args.scenario, budget=args.budget)
    cfg = _sim_config(args)

    central, kkt_c = centralized_allocate(s)
    out = run_distributed(s, cfg)
    if out.status is not RunStatus.CONVERGED or out.allocation is None:
        print(f"distributed run did not converge: status={out.status.value} "
              f"iters={out.iterations}")
        return _EXIT_NO_CONVERGE

    worst = 0.0
    for rc, rd in zip(central.app_rates, out.allocation.app_rates):
        for a, b in zip(rc, rd):
            worst = max(worst, abs(a - b))
    kkt_d = verify_kkt(s, out.allocation)

    print(f"budget R = {s.budget:.12g}")
    print(f"centralized: p = {central.shadow_price:.12g}  "
          f"stationarity = {kkt_c.stationarity_residual:.3e}  "
          f"budget_residual = {kkt_c.budget_residual:.3e}")
    print(f"distributed: p = {out.final_price:.12g}  iters = {out.iterations}  "
          f"stationarity = {kkt_d.stationarity_residual:.3e}  "
          f"budget_residual = {kkt_d.budget_residual:.3e}")
    print(f"max per-app rate discrepancy = {worst:.6e} "
          f"({worst / s.budget:.3e} of budget)")
    if worst > _VERIFY_RTOL * s.budget:
        print(f"FAIL: discrepancy exceeds {_VERIFY_RTOL:g} of budget")
        return _EXIT_FAIL
    print("OK")
    return _EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "allocate":
            return _cmd_allocate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_verify(args)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return _EXIT_USAGE
    except ScenarioParseError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return _EXIT_NO_CONVERGE
    except CellallocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
