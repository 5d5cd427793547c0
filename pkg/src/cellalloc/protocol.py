"""Bid / shadow-price protocol simulator.

Synchronous rounds between one base station and M users:

    round n:  station receives bids w_i(n), posts price p(n) = sum_i w_i(n) / R,
              stops once every bid moved less than delta since the last round;
    then:     each user best-responds to p(n) with a rate request r_i and
              submits the next bid w_i = p(n) * r_i.

Round 1 bids are a configured constant (the previous-bid register starts at a
different constant so the very first difference check cannot trivially pass).
On convergence the station allocates r_i = w_i(n) / p(n), which exhausts the
budget exactly by construction.

The robust variant clamps each bid step to a decaying envelope dw(n); once
dw(n) sinks below delta the loop is guaranteed to stabilize, so "Converged"
for it means "stabilized" and closeness to the true optimum is a separate
question (see allocator.verify_kkt).

Everything here is deterministic: identical scenario and config give
bit-identical traces on the same build.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .allocator import (
    Allocation,
    KktReport,
    Scenario,
    centralized_allocate,
    iura_allocate,
)
from .errors import DomainError
from .utilities import SigmoidalUtility


@dataclass(frozen=True)
class ExponentialDecay:
    """Bid-step envelope dw(n) = l1 * exp(-n / l2)."""

    l1: float = 10.0
    l2: float = 100.0

    def __post_init__(self) -> None:
        if self.l1 <= 0.0 or self.l2 <= 0.0:
            raise DomainError("decay constants must be positive")

    def step_cap(self, n: int) -> float:
        return self.l1 * math.exp(-n / self.l2)


@dataclass(frozen=True)
class RationalDecay:
    """Bid-step envelope dw(n) = l3 / n."""

    l3: float = 10.0

    def __post_init__(self) -> None:
        if self.l3 <= 0.0:
            raise DomainError("decay constants must be positive")

    def step_cap(self, n: int) -> float:
        return self.l3 / n


DecaySpec = ExponentialDecay | RationalDecay


@dataclass(frozen=True)
class SimConfig:
    """Protocol knobs. Defaults reproduce the reference runs."""

    delta: float = 1e-4
    max_iters: int = 5000
    decay: Optional[DecaySpec] = None
    initial_bid: float = 1.0
    initial_prev_bid: float = 0.0
    oscillation_window: int = 50
    record_trace: bool = True
    record_messages: bool = False

    def __post_init__(self) -> None:
        if self.delta <= 0.0:
            raise DomainError("delta must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")
        if self.initial_bid <= 0.0:
            raise DomainError("initial_bid must be positive")
        if self.initial_prev_bid < 0.0:
            raise DomainError("initial_prev_bid must be >= 0")
        if self.oscillation_window < 1:
            raise DomainError("oscillation_window must be at least 1")


class RunStatus(enum.Enum):
    CONVERGED = "converged"
    OSCILLATING = "oscillating"
    MAX_ITERS = "max-iters"


# --- messages -----------------------------------------------------------------
# Small tagged records of what actually crosses the air interface. The numeric
# trace is the workhorse; these exist for the message-level view (and are only
# collected when SimConfig.record_messages is set, or by the one-shot upload
# protocol which is message-counted by nature). ``seq`` increases per sender.


@dataclass(frozen=True)
class BidMessage:
    ue: int
    value: float
    seq: int


@dataclass(frozen=True)
class PriceMessage:
    value: float
    seq: int


@dataclass(frozen=True)
class StopMessage:
    seq: int


@dataclass(frozen=True)
class ParamsUpload:
    ue: int
    kinds: tuple[int, ...]
    p1: tuple[float, ...]
    p2: tuple[float, ...]
    alphas: tuple[float, ...]
    beta: float
    seq: int


@dataclass(frozen=True)
class RateGrant:
    ue: int
    rates: tuple[float, ...]
    seq: int


Message = BidMessage | PriceMessage | StopMessage | ParamsUpload | RateGrant


@dataclass
class IterTrace:
    """Per-round protocol state, one row per station step.

    prices[n-1] is p(n) = sum_i bids[n-1, i] / R. responded_price is the price
    the round-n bids answered (NaN for the opening constant bids), raw_bids the
    pre-clamp bids, step_caps the clamp envelope in force (NaN when none).
    Provisional rates are the station-side view bids / price.
    """

    budget: float
    delta: float
    prices: np.ndarray
    bids: np.ndarray
    raw_bids: np.ndarray
    requested_rates: np.ndarray
    provisional_rates: np.ndarray
    responded_price: np.ndarray
    step_caps: np.ndarray

    @property
    def n_iterations(self) -> int:
        return len(self.prices)


class OscillationReport(NamedTuple):
    oscillating: bool
    amplitude: float


@dataclass(frozen=True)
class RunOutcome:
    status: RunStatus
    iterations: int
    final_price: float
    allocation: Optional[Allocation]
    trace: Optional[IterTrace]
    messages: tuple[Message, ...] = ()
    kkt: Optional[KktReport] = None
    internal_prices: Optional[tuple[float, ...]] = None
    # station-side provisional user rates at the last round; equals the
    # allocation totals on convergence, and is the where-it-halted view
    # otherwise (recorded even when the full trace is off)
    last_provisional: tuple[float, ...] = ()


def _run_bid_loop(s: Scenario, cfg: SimConfig, decay: Optional[DecaySpec]) -> RunOutcome:
    t = s.tables
    m = len(s.ues)
    budget = s.budget

    bids_prev = np.full(m, cfg.initial_prev_bid)
    bids = np.full(m, cfg.initial_bid)
    raw = bids.copy()
    requested = np.full(m, np.nan)
    responded = math.nan
    cap = math.nan

    prices_log: list[float] = []
    bids_log: list[np.ndarray] = []
    raw_log: list[np.ndarray] = []
    req_log: list[np.ndarray] = []
    prov_log: list[np.ndarray] = []
    resp_log: list[float] = []
    cap_log: list[float] = []
    messages: list[Message] = []

    app_rates_buf = np.empty(len(t.kinds))
    status = RunStatus.MAX_ITERS
    final_price = math.nan
    final_prov: Optional[np.ndarray] = None

    n = 1
    while True:
        price = float(bids.sum()) / budget
        prov = bids / price

        prices_log.append(price)
        resp_log.append(responded)
        cap_log.append(cap)
        if cfg.record_trace:
            bids_log.append(bids.copy())
            raw_log.append(raw.copy())
            req_log.append(requested.copy())
            prov_log.append(prov.copy())
        if cfg.record_messages:
            for i in range(m):
                messages.append(BidMessage(ue=i, value=float(bids[i]), seq=n))
            messages.append(PriceMessage(value=price, seq=n))

        if float(np.max(np.abs(bids - bids_prev))) < cfg.delta:
            status = RunStatus.CONVERGED
            final_price = price
            final_prov = prov
            if cfg.record_messages:
                messages.append(StopMessage(seq=n + 1))
            break
        if n >= cfg.max_iters:
            final_price = price
            final_prov = prov
            break

        # user side: best-respond to p(n), bid p(n) * request
        kernels.demand_rates(t.kinds, t.p1, t.p2, t.weights, price, app_rates_buf)
        requested = np.add.reduceat(app_rates_buf, t.starts)
        raw = price * requested
        new_bids = raw.copy()
        if decay is not None:
            cap = decay.step_cap(n + 1)
            step = raw - bids
            over = np.abs(step) > cap
            new_bids[over] = bids[over] + np.sign(step[over]) * cap
        else:
            cap = math.nan
        responded = price
        bids_prev = bids
        bids = new_bids
        n += 1

    trace = IterTrace(
        budget=budget,
        delta=cfg.delta,
        prices=np.asarray(prices_log),
        bids=np.asarray(bids_log) if cfg.record_trace else np.empty((0, m)),
        raw_bids=np.asarray(raw_log) if cfg.record_trace else np.empty((0, m)),
        requested_rates=np.asarray(req_log) if cfg.record_trace else np.empty((0, m)),
        provisional_rates=np.asarray(prov_log) if cfg.record_trace else np.empty((0, m)),
        responded_price=np.asarray(resp_log),
        step_caps=np.asarray(cap_log),
    )

    if status is not RunStatus.CONVERGED:
        osc = detect_oscillation(trace, cfg.oscillation_window) if (
            trace.n_iterations >= 2 * cfg.oscillation_window
        ) else OscillationReport(False, 0.0)
        if osc.oscillating:
            status = RunStatus.OSCILLATING

    allocation = None
    if status is RunStatus.CONVERGED:
        allocation = Allocation(
            ue_totals=tuple(float(x) for x in final_prov),
            shadow_price=final_price,
            app_rates=None,
        )
    return RunOutcome(
        status=status,
        iterations=trace.n_iterations,
        final_price=final_price,
        allocation=allocation,
        trace=trace,
        messages=tuple(messages),
        last_provisional=tuple(float(x) for x in final_prov),
    )


def run_eura_basic(s: Scenario, cfg: SimConfig = SimConfig()) -> RunOutcome:
    """User-level bid loop without step clamping. Converges on abundant
    budgets; on scarce ones the price hunts around a steep demand cliff and
    the run typically ends Oscillating."""
    return _run_bid_loop(s, cfg, None)


def run_eura_robust(s: Scenario, cfg: SimConfig) -> RunOutcome:
    """User-level bid loop with the decaying step clamp."""
    if cfg.decay is None:
        raise DomainError("run_eura_robust needs cfg.decay")
    return _run_bid_loop(s, cfg, cfg.decay)


def run_distributed(s: Scenario, cfg: SimConfig = SimConfig(decay=ExponentialDecay())) -> RunOutcome:
    """Two-stage distributed allocation: the bid loop fixes user totals, then
    each user splits its grant across its own apps. Stage one runs clamped
    when cfg.decay is set, plain otherwise. A non-convergent stage one is
    reported as-is, without per-app rates."""
    out = _run_bid_loop(s, cfg, cfg.decay)
    if out.status is not RunStatus.CONVERGED:
        return out
    app_rates = []
    internal_prices = []
    for ue, r_i in zip(s.ues, out.allocation.ue_totals, strict=True):
        split, p_i = iura_allocate(ue, r_i)
        app_rates.append(tuple(float(x) for x in split))
        internal_prices.append(p_i)
    alloc = replace(out.allocation, app_rates=tuple(app_rates))
    return replace(
        out,
        allocation=alloc,
        internal_prices=tuple(internal_prices),
    )


def run_centralized_protocol(s: Scenario) -> tuple[Allocation, tuple[Message, ...]]:
    """One-shot protocol: every user uploads its utility parameters, the
    station solves the whole cell, and grants per-app rates back. Exactly one
    upload and one grant per user."""
    messages: list[Message] = []
    for i, ue in enumerate(s.ues):
        kinds, p1, p2 = [], [], []
        for app in ue.apps:
            kind, x1, x2 = app.utility._packed()
            kinds.append(kind)
            p1.append(x1)
            p2.append(x2)
        messages.append(
            ParamsUpload(
                ue=i,
                kinds=tuple(kinds),
                p1=tuple(p1),
                p2=tuple(p2),
                alphas=tuple(a.alpha for a in ue.apps),
                beta=ue.beta,
                seq=1,
            )
        )
    alloc, _ = centralized_allocate(s)
    for i, rates in enumerate(alloc.app_rates):
        messages.append(RateGrant(ue=i, rates=rates, seq=i + 1))
    return alloc, tuple(messages)


def detect_oscillation(trace: IterTrace, window: int = 50) -> OscillationReport:
    """Look at the last 2*window posted prices: amplitude is max - min, and
    the run is flagged oscillating when the amplitude exceeds 10x the bid
    tolerance and at least window/2 adjacent price steps flip sign."""
    if window < 1:
        raise DomainError("window must be at least 1")
    if trace.n_iterations < 2 * window:
        raise DomainError(
            f"need at least {2 * window} iterations, trace has {trace.n_iterations}"
        )
    tail = trace.prices[-2 * window:]
    amplitude = float(tail.max() - tail.min())
    d = np.diff(tail)
    alternations = int(np.sum(d[:-1] * d[1:] < 0.0))
    flag = amplitude > 10.0 * trace.delta and alternations >= window / 2
    return OscillationReport(oscillating=flag, amplitude=amplitude)


def steady_state_price_bound(s: Scenario) -> float:
    """Upper bound on the converged shadow price when the budget covers every
    sigmoid's inflection rate: a*d/(1-d) + a/2 of the sigmoid with the largest
    inflection rate (first such app on ties)."""
    best = None
    for ue in s.ues:
        for app in ue.apps:
            u = app.utility
            if isinstance(u, SigmoidalUtility) and (best is None or u.b > best.b):
                best = u
    if best is None:
        raise DomainError("scenario has no sigmoidal app")
    return best.a * (best.d / (1.0 - best.d)) + 0.5 * best.a
