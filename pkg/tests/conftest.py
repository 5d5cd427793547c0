"""Shared builders for the test suite.

The reference cell used throughout: six UEs, each pairing one sigmoidal
(real-time) app with one logarithmic (delay-tolerant) app. Sigmoid inflection
points sum to 105, so budgets well above that are "abundant" and budgets
below put one or more sigmoids on the wrong side of their inflection.
"""

import numpy as np
import pytest

from cellalloc import (
    AppSpec,
    LogarithmicUtility,
    Scenario,
    SigmoidalUtility,
    UeSpec,
)

# (a, b) of the sigmoid app, (k, r_max) of the log app, (alpha_sig, alpha_log)
REFERENCE_ROWS = [
    ((5.0, 5.0), (15.0, 100.0), (0.1, 0.9)),
    ((4.0, 10.0), (12.0, 100.0), (0.5, 0.5)),
    ((3.0, 15.0), (9.0, 100.0), (0.9, 0.1)),
    ((2.0, 20.0), (6.0, 100.0), (0.1, 0.9)),
    ((1.0, 25.0), (3.0, 100.0), (0.5, 0.5)),
    ((0.5, 30.0), (1.0, 100.0), (0.9, 0.1)),
]

SUM_INFLECTIONS = 105.0


def reference_ues(beta: float = 1.0) -> tuple[UeSpec, ...]:
    ues = []
    for (a, b), (k, rmax), (al_s, al_l) in REFERENCE_ROWS:
        ues.append(
            UeSpec(
                apps=(
                    AppSpec(SigmoidalUtility(a=a, b=b), alpha=al_s),
                    AppSpec(LogarithmicUtility(k=k, r_max=rmax), alpha=al_l),
                ),
                beta=beta,
            )
        )
    return tuple(ues)


def reference_scenario(budget: float) -> Scenario:
    return Scenario(ues=reference_ues(), budget=budget)


def all_reference_utilities():
    """The 12 utility curves of the reference cell."""
    out = []
    for (a, b), (k, rmax), _ in REFERENCE_ROWS:
        out.append(SigmoidalUtility(a=a, b=b))
        out.append(LogarithmicUtility(k=k, r_max=rmax))
    return out


def random_scenario(rng: np.random.Generator, abundant: bool = False) -> Scenario:
    """Small random mixed-traffic cell with reference-style parameter ranges.
    With ``abundant`` the budget clears every sigmoid inflection comfortably.

    Every cell carries at least one logarithmic (delay-tolerant) app. An
    all-sigmoid cell saturates once the budget clears every inflection, the
    shadow price collapses toward zero, and the optimum becomes numerically
    flat (float64 cannot distinguish allocations that shuffle rate between
    saturated apps), so such cells are outside the modeled population."""
    m = int(rng.integers(1, 5))
    ues = []
    sum_b = 0.0
    have_log = False
    for _ in range(m):
        n = int(rng.integers(1, 4))
        raw = rng.uniform(0.2, 1.0, size=n)
        alphas = raw / raw.sum()
        apps = []
        for j in range(n):
            if rng.random() < 0.5:
                a = float(rng.uniform(0.5, 5.0))
                b = float(rng.uniform(5.0, 30.0))
                apps.append(AppSpec(SigmoidalUtility(a=a, b=b), alpha=float(alphas[j])))
                sum_b += b
            else:
                k = float(rng.uniform(1.0, 15.0))
                apps.append(
                    AppSpec(LogarithmicUtility(k=k, r_max=100.0), alpha=float(alphas[j]))
                )
                have_log = True
        beta = float(rng.uniform(0.5, 2.0))
        ues.append(UeSpec(apps=tuple(apps), beta=beta))
    if not have_log:
        k = float(rng.uniform(1.0, 15.0))
        last = ues[-1]
        old = last.apps[-1]
        sum_b -= old.utility.b
        swapped = last.apps[:-1] + (
            AppSpec(LogarithmicUtility(k=k, r_max=100.0), alpha=old.alpha),
        )
        ues[-1] = UeSpec(apps=swapped, beta=last.beta)
    if abundant:
        budget = 1.5 * sum_b + float(rng.uniform(20.0, 80.0))
    else:
        budget = float(rng.uniform(5.0, max(10.0, 1.2 * sum_b)))
    return Scenario(ues=tuple(ues), budget=budget)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# ----------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion after the run
# ----------------------------------------------------------------------------

ACCEPTANCE_TITLES = {
    "test_criterion_01_utility_endpoints_and_slopes":
        "criterion 1: utility endpoints and finite-difference slopes",
    "test_criterion_02_concavity_and_slope_decrease":
        "criterion 2: ln-utility concavity and strict slope decrease",
    "test_criterion_03_centralized_optimality":
        "criterion 3: KKT residuals and grid-oracle dominance",
    "test_criterion_04_distributed_matches_centralized":
        "criterion 4: distributed allocation matches centralized",
    "test_criterion_05_budget_exhaustion_and_no_starvation":
        "criterion 5: budget exhausted, no user starved, full sweep",
    "test_criterion_06_price_curve_knees":
        "criterion 6: price nonincreasing, four largest drops at 15/25/85/105",
    "test_criterion_07_oscillation_and_damping":
        "criterion 7: undamped loop oscillates at R=50, damped loop converges",
    "test_criterion_08_steady_state_price_bound":
        "criterion 8: converged price below closed-form steady-state bound",
    "test_criterion_09_abundant_budget_clears_inflections":
        "criterion 9: abundant budget lifts every sigmoid past its inflection",
    "test_criterion_10_reproducibility":
        "criterion 10: exact round-trip and byte-identical sweep reruns",
}

_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if name in ACCEPTANCE_TITLES and report.when == "call":
        _acceptance_outcomes[name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, title in ACCEPTANCE_TITLES.items():
        if name in _acceptance_outcomes:
            mark = "PASS" if _acceptance_outcomes[name] == "passed" else "FAIL"
            terminalreporter.write_line(f"{mark}  {title}")
