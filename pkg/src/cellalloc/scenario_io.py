"""Scenario files, the budget-sweep harness, and result serialization.

The scenario format is line oriented so configurations stay hand-editable
and diff-friendly:

    # downlink cell, two users
    budget = 50

    [ue]
    beta = 1
    app = sigmoid a=5 b=5 alpha=0.1
    app = log k=15 rmax=100 alpha=0.9

    [ue]
    app = sigmoid a=2 b=20 alpha=0.5
    app = log k=3 rmax=100 alpha=0.5

Blank lines and ``#`` comments are ignored. ``beta`` defaults to 1 and the
``budget`` line is optional (a budget passed by the caller wins over the
file). Alpha weights of each UE must sum to 1 within 1e-6; residuals smaller
than that are rescaled away so they do not leak into the solvers.

Sweeps re-solve one scenario over a grid of budgets and serialize to flat
comma-separated files with enough digits for exact float round-trips.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .allocator import (
    AppSpec,
    Scenario,
    UeSpec,
    centralized_allocate,
)
from .errors import CellallocError, ScenarioParseError
from .protocol import (
    ExponentialDecay,
    IterTrace,
    RunStatus,
    SimConfig,
    run_distributed,
    run_eura_basic,
)
from .utilities import LogarithmicUtility, SigmoidalUtility

_ALPHA_FILE_TOL = 1e-6
_MODES = ("centralized", "distributed", "eura-basic")

_KV_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(\S[^#]*?)\s*$")
_PARAM_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)=([^\s]+)$")


def _parse_float(token: str, what: str, lineno: int) -> float:
    try:
        x = float(token)
    except ValueError:
        raise ScenarioParseError(f"{what}: not a number: {token!r}", lineno) from None
    if not math.isfinite(x):
        raise ScenarioParseError(f"{what}: must be finite, got {token!r}", lineno)
    return x


def _parse_app(body: str, lineno: int) -> AppSpec:
    tokens = body.split()
    if not tokens:
        raise ScenarioParseError("app line is empty", lineno)
    kind = tokens[0]
    params: dict[str, float] = {}
    for tok in tokens[1:]:
        m = _PARAM_RE.match(tok)
        if m is None:
            raise ScenarioParseError(
                f"bad app parameter {tok!r} (expected key=value)", lineno
            )
        key = m.group(1)
        if key in params:
            raise ScenarioParseError(f"duplicate app parameter {key!r}", lineno)
        params[key] = _parse_float(m.group(2), f"app parameter {key}", lineno)

    def take(names: tuple[str, ...]) -> dict[str, float]:
        missing = [k for k in names if k not in params]
        extra = [k for k in params if k not in names]
        if missing:
            raise ScenarioParseError(
                f"{kind} app missing parameter(s): {', '.join(missing)}", lineno
            )
        if extra:
            raise ScenarioParseError(
                f"{kind} app has unknown parameter(s): {', '.join(extra)}", lineno
            )
        return params

    try:
        if kind == "sigmoid":
            take(("a", "b", "alpha"))
            return AppSpec(
                utility=SigmoidalUtility(a=params["a"], b=params["b"]),
                alpha=params["alpha"],
            )
        if kind == "log":
            take(("k", "rmax", "alpha"))
            return AppSpec(
                utility=LogarithmicUtility(k=params["k"], r_max=params["rmax"]),
                alpha=params["alpha"],
            )
    except CellallocError as exc:
        raise ScenarioParseError(str(exc), lineno) from None
    raise ScenarioParseError(
        f"unknown utility kind {kind!r} (expected 'sigmoid' or 'log')", lineno
    )


def _close_ue(apps: list[AppSpec], beta: float, lineno: int) -> UeSpec:
    if not apps:
        raise ScenarioParseError("UE section has no app lines", lineno)
    s = math.fsum(a.alpha for a in apps)
    if abs(s - 1.0) > _ALPHA_FILE_TOL:
        raise ScenarioParseError(f"alpha sum {s!r} != 1", lineno)
    if s != 1.0:
        # tiny decimal-to-binary residue: renormalize so downstream
        # invariants see an exact simplex weight vector
        apps = [replace(a, alpha=a.alpha / s) for a in apps]
    return UeSpec(apps=tuple(apps), beta=beta)


def parse_scenario(text: str, budget: Optional[float] = None) -> Scenario:
    """Parse scenario text into a Scenario.

    ``budget`` overrides any budget line in the document; one of the two must
    supply it. Raises ScenarioParseError naming the offending 1-based line.
    """
    file_budget: Optional[float] = None
    ues: list[UeSpec] = []
    in_ue = False
    apps: list[AppSpec] = []
    beta = 1.0
    beta_seen = False
    section_line = 0

    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[ue]":
            if in_ue:
                ues.append(_close_ue(apps, beta, section_line))
            in_ue = True
            apps, beta, beta_seen = [], 1.0, False
            section_line = lineno
            continue
        if line.startswith("[") and line.endswith("]"):
            raise ScenarioParseError(f"unknown section {line!r}", lineno)
        m = _KV_RE.match(line)
        if m is None:
            raise ScenarioParseError(f"cannot parse line {rawline.strip()!r}", lineno)
        key, val = m.group(1), m.group(2)
        if key == "budget":
            if in_ue:
                raise ScenarioParseError("budget must appear before UE sections", lineno)
            if file_budget is not None:
                raise ScenarioParseError("duplicate budget line", lineno)
            file_budget = _parse_float(val, "budget", lineno)
            if file_budget <= 0.0:
                raise ScenarioParseError(f"budget must be positive, got {val}", lineno)
        elif key == "beta":
            if not in_ue:
                raise ScenarioParseError("beta outside a [ue] section", lineno)
            if beta_seen:
                raise ScenarioParseError("duplicate beta line in UE section", lineno)
            beta = _parse_float(val, "beta", lineno)
            beta_seen = True
        elif key == "app":
            if not in_ue:
                raise ScenarioParseError("app outside a [ue] section", lineno)
            apps.append(_parse_app(val, lineno))
        else:
            raise ScenarioParseError(f"unknown key {key!r}", lineno)

    if in_ue:
        ues.append(_close_ue(apps, beta, section_line))
    if not ues:
        raise ScenarioParseError("no UEs in scenario")

    effective = budget if budget is not None else file_budget
    if effective is None:
        raise ScenarioParseError(
            "no budget: pass one explicitly or add a 'budget =' line"
        )
    try:
        return Scenario(ues=tuple(ues), budget=float(effective))
    except CellallocError as exc:
        raise ScenarioParseError(str(exc)) from None


def serialize_scenario(s: Scenario, include_budget: bool = True) -> str:
    """Render a Scenario back to text. repr() floats round-trip exactly, so
    parse_scenario(serialize_scenario(s)) reproduces s field for field."""
    out: list[str] = []
    if include_budget:
        out.append(f"budget = {s.budget!r}")
        out.append("")
    for ue in s.ues:
        out.append("[ue]")
        out.append(f"beta = {ue.beta!r}")
        for app in ue.apps:
            u = app.utility
            if isinstance(u, SigmoidalUtility):
                out.append(f"app = sigmoid a={u.a!r} b={u.b!r} alpha={app.alpha!r}")
            else:
                out.append(f"app = log k={u.k!r} rmax={u.r_max!r} alpha={app.alpha!r}")
        out.append("")
    return "\n".join(out)


def load_scenario(path: Union[str, Path], budget: Optional[float] = None) -> Scenario:
    """parse_scenario over a file, resolving bundled scenario names: a bare
    name that is not an existing file is looked up in the package data
    directory (so 'table1.scenario' works from anywhere)."""
    p = Path(path)
    if not p.exists():
        candidate = resources.files("cellalloc").joinpath("data", p.name)
        if p.name == str(path) and candidate.is_file():
            return parse_scenario(candidate.read_text(), budget=budget)
        raise FileNotFoundError(f"scenario file not found: {path}")
    return parse_scenario(p.read_text(), budget=budget)


# ----------------------------------------------------------------------------
# budget sweep
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """Budget grid and solve mode for a sweep. mode is one of 'centralized',
    'distributed', 'eura-basic'; config applies to the protocol modes."""

    r_min: float = 10.0
    r_max: float = 200.0
    r_step: float = 5.0
    mode: str = "centralized"
    config: SimConfig = SimConfig(decay=ExponentialDecay())

    def __post_init__(self) -> None:
        if not (math.isfinite(self.r_min) and self.r_min > 0.0):
            raise ScenarioParseError(f"r_min must be positive, got {self.r_min!r}")
        if not (math.isfinite(self.r_step) and self.r_step > 0.0):
            raise ScenarioParseError(f"r_step must be positive, got {self.r_step!r}")
        if not (math.isfinite(self.r_max) and self.r_max >= self.r_min):
            raise ScenarioParseError("r_max must be >= r_min")
        if self.mode not in _MODES:
            raise ScenarioParseError(
                f"mode must be one of {_MODES}, got {self.mode!r}"
            )

    @property
    def budgets(self) -> tuple[float, ...]:
        n = int(math.floor((self.r_max - self.r_min) / self.r_step + 1e-9)) + 1
        return tuple(self.r_min + k * self.r_step for k in range(n))


@dataclass(frozen=True)
class SweepRow:
    """One budget point. app_rates is None when the mode only resolves user
    totals (eura-basic, or a non-converged distributed stage)."""

    budget: float
    status: str
    iterations: int
    price: float
    ue_rates: tuple[float, ...]
    ue_bids: tuple[float, ...]
    app_rates: Optional[tuple[tuple[float, ...], ...]]


@dataclass(frozen=True)
class SweepResult:
    mode: str
    rows: tuple[SweepRow, ...]


def solve_point(s: Scenario, mode: str, cfg: SimConfig) -> SweepRow:
    """Solve one budget point in the given mode and flatten the outcome to a
    SweepRow. Protocol runs that stop without converging record the state
    where they halted (station-side provisional view) with their status."""
    if mode not in _MODES:
        raise ScenarioParseError(f"mode must be one of {_MODES}, got {mode!r}")
    if mode == "centralized":
        alloc, _ = centralized_allocate(s)
        p = alloc.shadow_price
        return SweepRow(
            budget=s.budget,
            status=RunStatus.CONVERGED.value,
            iterations=0,
            price=p,
            ue_rates=alloc.ue_totals,
            ue_bids=tuple(p * r for r in alloc.ue_totals),
            app_rates=alloc.app_rates,
        )
    if mode == "distributed":
        out = run_distributed(s, cfg)
    else:
        out = run_eura_basic(s, cfg)
    return row_from_outcome(s.budget, out)


def row_from_outcome(budget: float, out) -> SweepRow:
    """Flatten a protocol RunOutcome into a SweepRow."""
    if out.allocation is not None:
        ue_rates = out.allocation.ue_totals
        app_rates = out.allocation.app_rates
    else:
        ue_rates = out.last_provisional
        app_rates = None
    ue_bids = tuple(out.final_price * r for r in ue_rates)
    return SweepRow(
        budget=budget,
        status=out.status.value,
        iterations=out.iterations,
        price=out.final_price,
        ue_rates=ue_rates,
        ue_bids=ue_bids,
        app_rates=app_rates,
    )


def run_sweep(s: Scenario, spec: SweepSpec) -> SweepResult:
    """Re-solve the scenario at every budget in the grid, ascending. Rows for
    non-convergent protocol runs record their status; nothing is dropped."""
    rows = []
    for budget in spec.budgets:
        rows.append(solve_point(replace(s, budget=budget), spec.mode, spec.config))
    return SweepResult(mode=spec.mode, rows=tuple(rows))


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------


def _fmt(x: float) -> str:
    # shortest exact decimal; round-trips through float() bit for bit
    return repr(float(x))


def _sweep_lines(res: SweepResult) -> list[str]:
    lines = ["R,mode,status,iters,p,ue,app,rate,bid"]
    for row in res.rows:
        head = (
            f"{_fmt(row.budget)},{res.mode},{row.status},"
            f"{row.iterations},{_fmt(row.price)}"
        )
        if row.app_rates is not None:
            for i, rates in enumerate(row.app_rates, start=1):
                for j, r in enumerate(rates, start=1):
                    lines.append(f"{head},{i},{j},{_fmt(r)},{_fmt(row.price * r)}")
        else:
            # user-level only; app column 0 marks the per-UE aggregate
            for i, (r, w) in enumerate(zip(row.ue_rates, row.ue_bids), start=1):
                lines.append(f"{head},{i},0,{_fmt(r)},{_fmt(w)}")
    return lines


def _trace_lines(trace: IterTrace) -> list[str]:
    lines = ["n,p,ue,w,r"]
    if trace.bids.shape[0] != trace.n_iterations:
        raise CellallocError("trace has no recorded bids (record_trace was off)")
    for n in range(trace.n_iterations):
        p = trace.prices[n]
        for i in range(trace.bids.shape[1]):
            lines.append(
                f"{n + 1},{_fmt(p)},{i + 1},"
                f"{_fmt(trace.bids[n, i])},{_fmt(trace.provisional_rates[n, i])}"
            )
    return lines


def emit_results(res: Union[SweepResult, IterTrace], path: Union[str, Path]) -> Path:
    """Write a sweep or an iteration trace as comma-separated text. Identical
    inputs produce byte-identical files."""
    if isinstance(res, SweepResult):
        lines = _sweep_lines(res)
    elif isinstance(res, IterTrace):
        lines = _trace_lines(res)
    else:
        raise CellallocError(f"cannot serialize {type(res).__name__}")
    out = Path(path)
    out.write_text("\n".join(lines) + "\n")
    return out
