"""Pure-Python numeric kernels.

Mirror of the compiled extension ``cellalloc._kernels``: same functions, same
semantics, same constants. Keep the two in sync; ``tests/test_backends.py``
cross-checks them when the extension is available.

A utility curve is passed around as a (kind, p1, p2) triple:

    kind 0 (sigmoid):      p1 = steepness a,   p2 = inflection point b
    kind 1 (logarithmic):  p1 = growth rate k, p2 = saturation rate r_max

All formulas are written in overflow-safe form so that a*b far beyond the
exponent range of float64 still evaluates correctly (the derived constants
degrade gracefully to their limit values).
"""

import math

SIGMOID = 0
LOG = 1

# Root-finding bracket for slope_inverse. Rates outside this range are
# saturated rather than reported as failures.
R_FLOOR = 1e-9
R_CAP = 1e9

_BRACKET_RTOL = 1e-14
_MAX_BISECT = 200
_LN2 = 0.6931471805599453

BACKEND_NAME = "python"


def _sigmoid(t):
    # logistic function, stable for any t
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _softplus(t):
    # log(1 + e^t), stable for any t
    if t > 0.0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


def _log1mexp(x):
    # log(1 - e^{-x}) for x > 0, accurate at both ends
    if x > _LN2:
        return math.log1p(-math.exp(-x))
    return math.log(-math.expm1(-x))


def value(kind, p1, p2, r):
    """Normalized utility U(r); U(0) = 0, sigmoid saturates at 1."""
    if kind == SIGMOID:
        return -math.expm1(-p1 * r) * _sigmoid(p1 * (r - p2))
    return math.log1p(p1 * r) / math.log1p(p1 * p2)


def log_value(kind, p1, p2, r):
    """ln U(r) for r > 0, computed without forming U (stable in the tails)."""
    if kind == SIGMOID:
        return _log1mexp(p1 * r) - _softplus(p1 * (p2 - r))
    return math.log(math.log1p(p1 * r)) - math.log(math.log1p(p1 * p2))


def slope(kind, p1, p2, r):
    """d ln U / dr at r > 0. Strictly positive and strictly decreasing
    (until it underflows to 0 deep in the sigmoid tail)."""
    if kind == SIGMOID:
        u = math.exp(-p1 * r)
        # 1/(e^{ar} - 1) + logistic(a*(b - r)), each term stable
        return p1 * (u / -math.expm1(-p1 * r) + _sigmoid(p1 * (p2 - r)))
    lk = math.log1p(p1 * r)
    return p1 / ((1.0 + p1 * r) * lk)


def slope_inverse(kind, p1, p2, price):
    """Rate r with slope(r) = price, by geometric bisection on
    [R_FLOOR, R_CAP]. Saturates at the bracket ends when price falls
    outside the attainable slope range."""
    lo = R_FLOOR
    hi = R_CAP
    if slope(kind, p1, p2, lo) <= price:
        return lo
    if slope(kind, p1, p2, hi) >= price:
        return hi
    for _ in range(_MAX_BISECT):
        mid = math.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if slope(kind, p1, p2, mid) > price:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BRACKET_RTOL * lo:
            break
    return 0.5 * (lo + hi)


def demand_rates(kinds, p1s, p2s, weights, price, out):
    """Per-app demanded rates at a shared price: out[j] = S_j^{-1}(price / w_j)."""
    for j in range(len(kinds)):
        out[j] = slope_inverse(kinds[j], p1s[j], p2s[j], price / weights[j])


def total_demand(kinds, p1s, p2s, weights, price):
    """Sum of demanded rates over all apps at a shared price."""
    acc = 0.0
    for j in range(len(kinds)):
        acc += slope_inverse(kinds[j], p1s[j], p2s[j], price / weights[j])
    return acc
