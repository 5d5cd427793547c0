"""Rate allocation solvers.

The optimization being solved, in one place: maximize over per-app rates

    sum_i beta_i * sum_j alpha_ij * ln U_ij(r_ij)    s.t.  sum_ij r_ij <= R

with every U strictly increasing in rate, so the budget binds. Stationarity
couples everything through a single shadow price p:

    beta_i * alpha_ij * slope_ij(r_ij) = p        for every app,

which makes each app's demanded rate slope_inverse(p / (beta_i * alpha_ij))
and reduces the whole problem to one scalar root-find on p: total demand
equals the budget. The same machinery solves the per-user subproblem (split
a granted user rate across that user's apps, alpha weights only).

``brute_force_oracle`` is a deliberately independent check: an exact search
over a simplex grid that never touches slopes or bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .errors import DomainError, OracleSizeError, SolverError
from .utilities import LogarithmicUtility, SigmoidalUtility, Utility

# demand-vs-target match required of the price root-finds, relative to target.
# One order tighter than the 1e-9 budget-exhaustion contract so rounding in
# the final segment sums cannot push an allocation over the line.
PRICE_SOLVE_RTOL = 1e-10

_ALPHA_SUM_TOL = 1e-9
# enough doublings/halvings to sweep the whole positive float64 range: a
# steep sigmoid's slope stays solvable down to prices near the subnormal
# floor, so the lower bracket must be able to reach it
_MAX_BRACKET_DOUBLINGS = 1200
_MAX_PRICE_BISECT = 300


@dataclass(frozen=True)
class AppSpec:
    """One application running on a user: a utility curve plus its weight
    ``alpha`` in that user's utility product."""

    utility: Utility
    alpha: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and 0.0 < self.alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha!r}")


@dataclass(frozen=True)
class UeSpec:
    """One user: its apps (alphas summing to 1) and its subscription weight beta."""

    apps: tuple[AppSpec, ...]
    beta: float = 1.0

    def __post_init__(self) -> None:
        if len(self.apps) == 0:
            raise DomainError("a UE needs at least one app")
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise DomainError(f"beta must be positive and finite, got {self.beta!r}")
        s = math.fsum(a.alpha for a in self.apps)
        if abs(s - 1.0) > _ALPHA_SUM_TOL:
            raise DomainError(f"alpha weights must sum to 1, got {s!r}")


@dataclass(frozen=True)
class Scenario:
    """A cell: the users sharing one downlink rate budget."""

    ues: tuple[UeSpec, ...]
    budget: float

    def __post_init__(self) -> None:
        if len(self.ues) == 0:
            raise DomainError("a scenario needs at least one UE")
        if not (math.isfinite(self.budget) and self.budget > 0.0):
            raise DomainError(f"budget must be positive and finite, got {self.budget!r}")

    @property
    def n_apps(self) -> int:
        return sum(len(u.apps) for u in self.ues)

    @cached_property
    def tables(self) -> "AppTables":
        return _build_tables(self.ues)


@dataclass(frozen=True)
class AppTables:
    """Flat per-app arrays in UE order, ready for the kernels.

    ``weights`` is beta_i * alpha_ij; ``starts`` holds the first app index of
    each UE (for np.add.reduceat-style segment sums).
    """

    kinds: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    alphas: np.ndarray
    weights: np.ndarray
    starts: np.ndarray
    ue_of_app: np.ndarray


def _build_tables(ues: tuple[UeSpec, ...]) -> AppTables:
    kinds, p1, p2, alphas, weights, starts, owner = [], [], [], [], [], [], []
    for i, ue in enumerate(ues):
        starts.append(len(kinds))
        for app in ue.apps:
            kind, a, b = app.utility._packed()
            kinds.append(kind)
            p1.append(a)
            p2.append(b)
            alphas.append(app.alpha)
            weights.append(ue.beta * app.alpha)
            owner.append(i)
    return AppTables(
        kinds=np.asarray(kinds, dtype=np.int64),
        p1=np.asarray(p1, dtype=np.float64),
        p2=np.asarray(p2, dtype=np.float64),
        alphas=np.asarray(alphas, dtype=np.float64),
        weights=np.asarray(weights, dtype=np.float64),
        starts=np.asarray(starts, dtype=np.int64),
        ue_of_app=np.asarray(owner, dtype=np.int64),
    )


@dataclass(frozen=True)
class Allocation:
    """Solved rates. ``app_rates`` is None for outcomes that only resolve
    user totals (the user-level protocol on its own); the per-app split then
    still awaits the per-user stage."""

    ue_totals: tuple[float, ...]
    shadow_price: float
    app_rates: tuple[tuple[float, ...], ...] | None = None

    @property
    def total_rate(self) -> float:
        return math.fsum(self.ue_totals)


@dataclass(frozen=True)
class KktReport:
    """Optimality check of an allocation against its shadow price."""

    stationarity_residual: float
    budget_residual: float
    budget_binding: bool


def app_demand(app: AppSpec, beta: float, price: float) -> float:
    """Rate the app asks for at a given shadow price: the rate at which its
    weighted marginal log-utility equals the price."""
    if not (math.isfinite(beta) and beta > 0.0):
        raise DomainError(f"beta must be positive and finite, got {beta!r}")
    if not (math.isfinite(price) and price > 0.0):
        raise DomainError(f"price must be positive and finite, got {price!r}")
    return app.utility.slope_inverse(price / (beta * app.alpha))


def ue_best_response(ue: UeSpec, price: float) -> tuple[float, np.ndarray]:
    """The rate a user requests at a given price, with its per-app split.

    Jointly maximizes beta * sum_j alpha_j ln U_j(r_j) - price * sum_j r_j,
    so every app in the split satisfies beta * alpha_j * slope_j = price.
    Returns (total, split).
    """
    if not (math.isfinite(price) and price > 0.0):
        raise DomainError(f"price must be positive and finite, got {price!r}")
    t = _build_tables((ue,))
    out = np.empty(len(t.kinds))
    kernels.demand_rates(t.kinds, t.p1, t.p2, t.weights, price, out)
    return float(out.sum()), out


def _solve_price(tables: AppTables, target: float, rtol: float = PRICE_SOLVE_RTOL):
    """Find price p with total demand equal to ``target``.

    Bracket by doubling/halving from [1e-12, 1], then geometric bisection
    until |demand - target| <= rtol * target. Demand is continuous and
    strictly decreasing in p until it saturates at the rate floor/cap, so
    failure to bracket means the target is outside the attainable range.
    """
    k, p1, p2, w = tables.kinds, tables.p1, tables.p2, tables.weights

    def demand(p: float) -> float:
        return kernels.total_demand(k, p1, p2, w, p)

    p_lo, p_hi = 1e-12, 1.0
    n = 0
    while demand(p_hi) >= target:
        p_hi *= 2.0
        n += 1
        if n > _MAX_BRACKET_DOUBLINGS:
            raise SolverError(
                f"cannot bracket price from above for target {target}; scenario degenerate"
            )
    n = 0
    while demand(p_lo) <= target:
        p_lo *= 0.5
        n += 1
        if p_lo == 0.0 or n > _MAX_BRACKET_DOUBLINGS:
            raise SolverError(
                f"target {target} exceeds the demand attainable at any positive price"
            )

    p = p_lo
    for _ in range(_MAX_PRICE_BISECT):
        p = math.sqrt(p_lo * p_hi)
        if p <= p_lo or p >= p_hi:
            break
        d = demand(p)
        if abs(d - target) <= rtol * target:
            break
        if d > target:
            p_lo = p
        else:
            p_hi = p
    else:
        raise SolverError(f"price bisection did not converge for target {target}")

    rates = np.empty(len(k))
    kernels.demand_rates(k, p1, p2, w, p, rates)
    total = float(rates.sum())
    if abs(total - target) > rtol * target:
        # The bracket collapsed to adjacent floats across a demand cliff: a
        # steep sigmoid's slope runs flat at machine precision, so demand
        # jumps by the plateau width within one ulp of price. The optimum is
        # then pinned by the budget rather than the price; place each rate
        # inside its one-ulp demand interval so the budget is spent exactly.
        # Every marginal utility stays within one price ulp of p.
        lo_rates = np.empty(len(k))
        hi_rates = np.empty(len(k))
        kernels.demand_rates(k, p1, p2, w, p_lo, lo_rates)
        kernels.demand_rates(k, p1, p2, w, p_hi, hi_rates)
        gaps = lo_rates - hi_rates
        gap_sum = float(gaps.sum())
        deficit = target - float(hi_rates.sum())
        if gap_sum > 0.0 and deficit > 0.0:
            frac = min(deficit / gap_sum, 1.0)
            rates = hi_rates + frac * gaps
            widest = int(np.argmax(gaps))
            rest = math.fsum(rates) - rates[widest]
            pinned = target - rest
            if hi_rates[widest] <= pinned <= lo_rates[widest]:
                rates[widest] = pinned
    return p, rates


def _per_ue(tables: AppTables, rates: np.ndarray):
    groups = np.split(rates, tables.starts[1:])
    app_rates = tuple(tuple(float(x) for x in g) for g in groups)
    totals = tuple(float(g.sum()) for g in groups)
    return totals, app_rates


def centralized_allocate(s: Scenario) -> tuple[Allocation, KktReport]:
    """Solve the whole cell in one shot. Returns the allocation and its own
    optimality report (stationarity should sit at solver precision)."""
    price, rates = _solve_price(s.tables, s.budget)
    totals, app_rates = _per_ue(s.tables, rates)
    alloc = Allocation(ue_totals=totals, shadow_price=price, app_rates=app_rates)
    return alloc, verify_kkt(s, alloc)


def iura_allocate(ue: UeSpec, r_opt: float) -> tuple[np.ndarray, float]:
    """Split a granted user rate across the user's apps.

    Maximizes sum_j alpha_j ln U_j(r_j) subject to sum_j r_j = r_opt; the
    returned internal price p_i satisfies alpha_j * slope_j(r_j) = p_i for
    every app. Returns (split, p_i).
    """
    n = len(ue.apps)
    if not (math.isfinite(r_opt) and r_opt > n * kernels.R_FLOOR):
        raise DomainError(f"r_opt must exceed the total rate floor, got {r_opt!r}")
    t = _build_tables((UeSpec(apps=ue.apps, beta=1.0),))
    price, rates = _solve_price(t, r_opt)
    return rates, price


def aggregated_slope(ue: UeSpec, r_i: float) -> float:
    """Summed weighted marginal log-utility of a user at rate r_i, evaluated
    at the optimal internal split: sum_j alpha_j * slope_j(r_j), which equals
    N_i * p_i there. Strictly decreasing in r_i."""
    _, price = iura_allocate(ue, r_i)
    return len(ue.apps) * price


def objective_value(s: Scenario, app_rates) -> float:
    """The allocation objective sum_i beta_i sum_j alpha_ij ln U_ij(r_ij).

    Rates at 0 contribute -inf (ln U(0)); useful for comparing candidate
    allocations, including grid points from the oracle.
    """
    total = 0.0
    for ue, rates in zip(s.ues, app_rates, strict=True):
        for app, r in zip(ue.apps, rates, strict=True):
            if r <= 0.0:
                return float("-inf")
            total += ue.beta * app.alpha * app.utility.log_value(float(r))
    return total


def verify_kkt(s: Scenario, alloc: Allocation) -> KktReport:
    """Check an allocation against first-order optimality at its shadow price.

    stationarity_residual = max_ij |beta_i alpha_ij slope_ij(r_ij) - p| / p
    budget_residual       = |sum r - R| / R
    """
    if alloc.app_rates is None:
        raise DomainError("verify_kkt needs per-app rates")
    if len(alloc.app_rates) != len(s.ues):
        raise DomainError("allocation shape does not match scenario")
    p = alloc.shadow_price
    if not (math.isfinite(p) and p > 0.0):
        raise DomainError(f"shadow price must be positive, got {p!r}")
    worst = 0.0
    total = 0.0
    for ue, rates in zip(s.ues, alloc.app_rates, strict=True):
        if len(rates) != len(ue.apps):
            raise DomainError("allocation shape does not match scenario")
        for app, r in zip(ue.apps, rates, strict=True):
            total += r
            marginal = ue.beta * app.alpha * app.utility.slope(float(r))
            worst = max(worst, abs(marginal - p) / p)
    budget_residual = abs(total - s.budget) / s.budget
    return KktReport(
        stationarity_residual=worst,
        budget_residual=budget_residual,
        budget_binding=budget_residual <= 1e-6,
    )


# ----------------------------------------------------------------------------
# independent grid oracle
# ----------------------------------------------------------------------------

_ORACLE_MAX_APPS = 4
_ORACLE_MAX_STEPS = 2000


def brute_force_oracle(s: Scenario, grid_step: float):
    """Exact argmax of the allocation objective over the simplex grid
    {0, h, 2h, ...} with the full budget spent (utilities increase, so the
    grid optimum uses every step it can).

    Small instances only: at most 4 apps and at most 2000 grid steps, else
    OracleSizeError. The search is an exact stage-wise max-plus sweep over
    the grid, equivalent to enumerating every grid allocation; it shares no
    code with the slope-based solvers on purpose.

    Returns (app_rates nested per UE like Allocation.app_rates, objective).
    """
    if not (math.isfinite(grid_step) and grid_step > 0.0):
        raise DomainError(f"grid_step must be positive, got {grid_step!r}")
    n = s.n_apps
    if n > _ORACLE_MAX_APPS:
        raise OracleSizeError(f"oracle limited to {_ORACLE_MAX_APPS} apps, got {n}")
    steps = int(math.floor(s.budget / grid_step + 1e-9))
    if steps > _ORACLE_MAX_STEPS:
        raise OracleSizeError(
            f"oracle limited to {_ORACLE_MAX_STEPS} grid steps, got {steps}"
        )
    if steps < n:
        raise OracleSizeError("budget too small for one grid step per app")

    grid = grid_step * np.arange(steps + 1)
    values = []
    for ue in s.ues:
        for app in ue.apps:
            v = np.empty(steps + 1)
            v[0] = -np.inf
            w = ue.beta * app.alpha
            for t in range(1, steps + 1):
                v[t] = w * app.utility.log_value(float(grid[t]))
            values.append(v)

    # best[s] = max objective over the first j apps using exactly s steps
    best = values[0].copy()
    choices = []
    for j in range(1, n):
        vj = values[j]
        new = np.full(steps + 1, -np.inf)
        arg = np.zeros(steps + 1, dtype=np.int64)
        for tot in range(1, steps + 1):
            cand = best[tot::-1] + vj[: tot + 1]
            t = int(np.argmax(cand))
            new[tot] = cand[t]
            arg[tot] = t
        best = new
        choices.append(arg)

    objective = float(best[steps])
    counts = np.zeros(n, dtype=np.int64)
    remaining = steps
    for j in range(n - 1, 0, -1):
        t = int(choices[j - 1][remaining])
        counts[j] = t
        remaining -= t
    counts[0] = remaining

    flat = [float(c * grid_step) for c in counts]
    nested = []
    pos = 0
    for ue in s.ues:
        nested.append(tuple(flat[pos : pos + len(ue.apps)]))
        pos += len(ue.apps)
    return tuple(nested), objective
