"""Bid-loop protocol simulators: convergence, trace identities, messages."""

import math

import numpy as np
import pytest

from cellalloc import (
    BidMessage,
    DomainError,
    ExponentialDecay,
    IterTrace,
    ParamsUpload,
    PriceMessage,
    RateGrant,
    RationalDecay,
    RunStatus,
    SimConfig,
    StopMessage,
    centralized_allocate,
    detect_oscillation,
    run_centralized_protocol,
    run_distributed,
    run_eura_basic,
    run_eura_robust,
    steady_state_price_bound,
)

from conftest import reference_scenario

# steady-state price bounds computed to 20 digits from a d/(1-d) + a/2
# (tools/gen_reference_values.py)
_REFERENCE_BOUND = 0.2500001529511602509129
_BOUND_A1_B25 = 0.500000000013887943865


def _quiet(**kw):
    return SimConfig(record_trace=False, **kw)


# ----------------------------------------------------------------------------
# plain bid loop
# ----------------------------------------------------------------------------


def test_basic_converges_on_abundant_budget():
    s = reference_scenario(200.0)
    out = run_eura_basic(s, _quiet())
    assert out.status is RunStatus.CONVERGED
    alloc, _ = centralized_allocate(s)
    worst = max(abs(a - b) for a, b in zip(out.allocation.ue_totals, alloc.ue_totals))
    assert worst <= 1e-3 * s.budget
    assert out.allocation.app_rates is None


def test_basic_oscillates_on_scarce_budget():
    s = reference_scenario(50.0)
    out = run_eura_basic(s)
    assert out.status is RunStatus.OSCILLATING
    assert out.iterations == 5000
    assert out.allocation is None
    report = detect_oscillation(out.trace)
    assert report.oscillating
    assert report.amplitude > 10.0 * out.trace.delta


def test_converged_runs_exhaust_budget():
    for budget in (60.0, 90.0, 200.0):
        s = reference_scenario(budget)
        out = run_eura_basic(s, _quiet())
        assert out.status is RunStatus.CONVERGED
        total = math.fsum(out.allocation.ue_totals)
        assert abs(total - budget) <= 1e-9 * budget
        assert out.allocation.shadow_price == out.final_price


def test_robust_converges_on_scarce_budget():
    s = reference_scenario(50.0)
    out = run_eura_robust(s, _quiet(decay=ExponentialDecay()))
    assert out.status is RunStatus.CONVERGED
    total = math.fsum(out.allocation.ue_totals)
    assert abs(total - 50.0) <= 1e-9 * 50.0
    alloc, _ = centralized_allocate(s)
    worst = max(abs(a - b) for a, b in zip(out.allocation.ue_totals, alloc.ue_totals))
    assert worst <= 1e-2 * s.budget


def test_robust_matches_basic_on_abundant_budget():
    s = reference_scenario(200.0)
    basic = run_eura_basic(s, _quiet())
    robust = run_eura_robust(s, _quiet(decay=ExponentialDecay()))
    assert robust.status is RunStatus.CONVERGED
    worst = max(
        abs(a - b)
        for a, b in zip(basic.allocation.ue_totals, robust.allocation.ue_totals)
    )
    assert worst <= 1e-3 * s.budget


def test_rational_decay_stabilizes_at_cap_crossing():
    # the l3/n envelope sinks below delta at n = l3/delta, forcing the stop
    # rule; with l3 = 1 and delta = 1e-4 that is round 10000
    s = reference_scenario(50.0)
    out = run_eura_robust(s, _quiet(decay=RationalDecay(l3=1.0), max_iters=10100))
    assert out.status is RunStatus.CONVERGED
    assert out.iterations <= 10001
    alloc, _ = centralized_allocate(s)
    worst = max(abs(a - b) for a, b in zip(out.allocation.ue_totals, alloc.ue_totals))
    assert worst <= 1e-2 * s.budget


def test_robust_requires_decay():
    with pytest.raises(DomainError):
        run_eura_robust(reference_scenario(50.0), SimConfig())


# ----------------------------------------------------------------------------
# trace identities
# ----------------------------------------------------------------------------


def test_trace_identities_and_clamp_exactness():
    s = reference_scenario(50.0)
    decay = ExponentialDecay()
    out = run_eura_robust(s, SimConfig(decay=decay))
    tr = out.trace
    n = tr.n_iterations
    assert tr.budget == 50.0
    assert tr.bids.shape == (n, 6)

    # opening round: constant bids, nothing responded to yet
    assert np.all(tr.bids[0] == 1.0)
    assert np.all(tr.raw_bids[0] == 1.0)
    assert np.all(np.isnan(tr.requested_rates[0]))
    assert math.isnan(tr.responded_price[0])
    assert math.isnan(tr.step_caps[0])

    clamped_any = False
    for i in range(n):
        # posted price is exactly the bid sum over the budget
        assert tr.prices[i] == float(tr.bids[i].sum()) / tr.budget
        assert np.array_equal(tr.provisional_rates[i], tr.bids[i] / tr.prices[i])
        if i == 0:
            continue
        # round i+1 bids answer the round-i price
        assert tr.responded_price[i] == tr.prices[i - 1]
        assert np.array_equal(tr.raw_bids[i], tr.responded_price[i] * tr.requested_rates[i])
        cap = tr.step_caps[i]
        assert cap == decay.step_cap(i + 1)
        step = tr.raw_bids[i] - tr.bids[i - 1]
        over = np.abs(step) > cap
        clamped_any = clamped_any or bool(over.any())
        assert np.array_equal(tr.bids[i][over], tr.bids[i - 1][over] + np.sign(step[over]) * cap)
        assert np.array_equal(tr.bids[i][~over], tr.raw_bids[i][~over])
    assert clamped_any


def test_unclamped_trace_has_nan_caps():
    out = run_eura_basic(reference_scenario(60.0))
    assert np.all(np.isnan(out.trace.step_caps))
    tr = out.trace
    for i in range(1, tr.n_iterations):
        assert np.array_equal(tr.bids[i], tr.raw_bids[i])


def test_runs_are_deterministic():
    s = reference_scenario(50.0)
    cfg = SimConfig(decay=ExponentialDecay())
    a = run_eura_robust(s, cfg)
    b = run_eura_robust(s, cfg)
    assert a.iterations == b.iterations
    assert a.final_price == b.final_price
    assert np.array_equal(a.trace.prices, b.trace.prices)
    assert np.array_equal(a.trace.bids, b.trace.bids)


def test_trace_disabled_keeps_prices_only():
    out = run_eura_basic(reference_scenario(60.0), SimConfig(record_trace=False))
    assert out.trace.bids.shape[0] == 0
    assert out.trace.n_iterations == out.iterations
    assert len(out.trace.prices) == out.iterations


# ----------------------------------------------------------------------------
# two-stage distributed allocation
# ----------------------------------------------------------------------------


def test_distributed_end_to_end():
    s = reference_scenario(200.0)
    out = run_distributed(s, _quiet(decay=ExponentialDecay()))
    assert out.status is RunStatus.CONVERGED
    alloc = out.allocation
    assert alloc.app_rates is not None
    assert len(out.internal_prices) == 6

    central, _ = centralized_allocate(s)
    for got_ue, want_ue in zip(alloc.app_rates, central.app_rates):
        for got, want in zip(got_ue, want_ue):
            assert abs(got - want) <= 1e-3 * s.budget

    # stage-2 splits add up to the stage-1 grants
    for rates, total in zip(alloc.app_rates, alloc.ue_totals):
        assert math.fsum(rates) == pytest.approx(total, rel=1e-9)

    # every real-time app ends beyond its inflection rate on this budget
    for ue, rates in zip(s.ues, alloc.app_rates):
        assert rates[0] > ue.apps[0].utility.b

    # cell price ~ beta * per-user internal price (within protocol tolerance)
    for ue, p_i in zip(s.ues, out.internal_prices):
        assert abs(out.final_price - ue.beta * p_i) <= 2e-3 * out.final_price


def test_distributed_passes_through_nonconvergence():
    s = reference_scenario(50.0)
    out = run_distributed(s, SimConfig(decay=None, record_trace=False, max_iters=400))
    assert out.status is not RunStatus.CONVERGED
    assert out.allocation is None
    assert out.internal_prices is None


# ----------------------------------------------------------------------------
# one-shot centralized protocol
# ----------------------------------------------------------------------------


def test_centralized_protocol_messages_and_rates():
    s = reference_scenario(105.0)
    alloc, messages = run_centralized_protocol(s)
    uploads = [m for m in messages if isinstance(m, ParamsUpload)]
    grants = [m for m in messages if isinstance(m, RateGrant)]
    assert len(messages) == 2 * len(s.ues)
    assert len(uploads) == 6 and len(grants) == 6
    assert [u.ue for u in uploads] == list(range(6))
    assert all(u.seq == 1 for u in uploads)
    assert [g.seq for g in grants] == list(range(1, 7))
    for u, ue in zip(uploads, s.ues):
        assert u.beta == ue.beta
        assert u.alphas == tuple(a.alpha for a in ue.apps)
    direct, _ = centralized_allocate(s)
    assert alloc.app_rates == direct.app_rates
    granted = math.fsum(r for g in grants for r in g.rates)
    assert granted == pytest.approx(105.0, rel=1e-6)


def test_bid_loop_message_stream():
    s = reference_scenario(200.0)
    out = run_eura_basic(s, SimConfig(record_trace=False, record_messages=True))
    assert out.status is RunStatus.CONVERGED
    bids = [m for m in out.messages if isinstance(m, BidMessage)]
    prices = [m for m in out.messages if isinstance(m, PriceMessage)]
    stops = [m for m in out.messages if isinstance(m, StopMessage)]
    n, m = out.iterations, len(s.ues)
    assert len(bids) == n * m
    assert len(prices) == n
    assert len(stops) == 1
    assert stops[0].seq == n + 1
    first_round = [x for x in bids if x.seq == 1]
    assert [x.ue for x in first_round] == list(range(m))
    assert all(x.value == 1.0 for x in first_round)
    assert [p.seq for p in prices] == list(range(1, n + 1))
    assert all(x.value > 0.0 for x in bids)


def test_messages_off_by_default():
    out = run_eura_basic(reference_scenario(60.0), _quiet())
    assert out.messages == ()


# ----------------------------------------------------------------------------
# oscillation detector
# ----------------------------------------------------------------------------


def _price_trace(prices, delta=1e-4):
    prices = np.asarray(prices, dtype=float)
    empty = np.empty((0, 0))
    return IterTrace(
        budget=1.0,
        delta=delta,
        prices=prices,
        bids=empty,
        raw_bids=empty,
        requested_rates=empty,
        provisional_rates=empty,
        responded_price=np.full(len(prices), np.nan),
        step_caps=np.full(len(prices), np.nan),
    )


def test_detect_oscillation_constant_prices():
    report = detect_oscillation(_price_trace(np.full(200, 5.0)), window=50)
    assert not report.oscillating
    assert report.amplitude == 0.0


def test_detect_oscillation_alternating_prices():
    prices = 5.0 + np.where(np.arange(200) % 2 == 0, 1.0, -1.0)
    report = detect_oscillation(_price_trace(prices), window=50)
    assert report.oscillating
    assert report.amplitude == pytest.approx(2.0)


def test_detect_oscillation_drift_is_not_oscillation():
    # monotone drift has amplitude but no sign alternation
    report = detect_oscillation(_price_trace(np.linspace(1.0, 2.0, 200)), window=50)
    assert not report.oscillating


def test_detect_oscillation_validation():
    with pytest.raises(DomainError):
        detect_oscillation(_price_trace(np.full(30, 1.0)), window=50)
    with pytest.raises(DomainError):
        detect_oscillation(_price_trace(np.full(200, 1.0)), window=0)


# ----------------------------------------------------------------------------
# steady-state price bound
# ----------------------------------------------------------------------------


def test_steady_state_price_bound_reference():
    s = reference_scenario(200.0)
    bound = steady_state_price_bound(s)
    assert bound == pytest.approx(_REFERENCE_BOUND, rel=1e-12)
    out = run_eura_basic(s, _quiet())
    assert out.final_price < bound


def test_steady_state_price_bound_single_sigmoid():
    from cellalloc import AppSpec, Scenario, SigmoidalUtility, UeSpec

    s = Scenario(
        ues=(UeSpec(apps=(AppSpec(SigmoidalUtility(a=1.0, b=25.0), alpha=1.0),)),),
        budget=100.0,
    )
    assert steady_state_price_bound(s) == pytest.approx(_BOUND_A1_B25, rel=1e-12)


def test_steady_state_price_bound_needs_sigmoid():
    from cellalloc import AppSpec, LogarithmicUtility, Scenario, UeSpec

    s = Scenario(
        ues=(UeSpec(apps=(AppSpec(LogarithmicUtility(k=3.0, r_max=100.0), alpha=1.0),)),),
        budget=100.0,
    )
    with pytest.raises(DomainError):
        steady_state_price_bound(s)


# ----------------------------------------------------------------------------
# configuration validation
# ----------------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(delta=0.0)
    with pytest.raises(DomainError):
        SimConfig(max_iters=0)
    with pytest.raises(DomainError):
        SimConfig(initial_bid=0.0)
    with pytest.raises(DomainError):
        SimConfig(initial_prev_bid=-1.0)
    with pytest.raises(DomainError):
        SimConfig(oscillation_window=0)
    with pytest.raises(DomainError):
        ExponentialDecay(l1=0.0)
    with pytest.raises(DomainError):
        ExponentialDecay(l2=-1.0)
    with pytest.raises(DomainError):
        RationalDecay(l3=0.0)


def test_decay_formulas():
    assert ExponentialDecay(l1=10.0, l2=100.0).step_cap(5) == 10.0 * math.exp(-0.05)
    assert RationalDecay(l3=7.0).step_cap(4) == 1.75
