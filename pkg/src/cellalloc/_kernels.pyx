# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels.

Mirror of ``cellalloc._kernels_py``: same functions, same semantics, same
constants. The hot path is slope_inverse (a ~90-step geometric bisection per
app per posted price), so the scalar math lives in C.
"""

from libc.math cimport exp, expm1, log, log1p, sqrt
from libc.stdint cimport int64_t

import numpy as np

SIGMOID = 0
LOG = 1

R_FLOOR = 1e-9
R_CAP = 1e9

BACKEND_NAME = "compiled"

cdef double _R_FLOOR = 1e-9
cdef double _R_CAP = 1e9
cdef double _BRACKET_RTOL = 1e-14
cdef int _MAX_BISECT = 200
cdef double _LN2 = 0.6931471805599453

cdef int _SIG = 0


cdef inline double _sigmoid(double t) noexcept nogil:
    cdef double e
    if t >= 0.0:
        return 1.0 / (1.0 + exp(-t))
    e = exp(t)
    return e / (1.0 + e)


cdef inline double _softplus(double t) noexcept nogil:
    if t > 0.0:
        return t + log1p(exp(-t))
    return log1p(exp(t))


cdef inline double _log1mexp(double x) noexcept nogil:
    if x > _LN2:
        return log1p(-exp(-x))
    return log(-expm1(-x))


cdef inline double _value(int kind, double p1, double p2, double r) noexcept nogil:
    if kind == _SIG:
        return -expm1(-p1 * r) * _sigmoid(p1 * (r - p2))
    return log1p(p1 * r) / log1p(p1 * p2)


cdef inline double _log_value(int kind, double p1, double p2, double r) noexcept nogil:
    if kind == _SIG:
        return _log1mexp(p1 * r) - _softplus(p1 * (p2 - r))
    return log(log1p(p1 * r)) - log(log1p(p1 * p2))


cdef inline double _slope(int kind, double p1, double p2, double r) noexcept nogil:
    cdef double u, lk
    if kind == _SIG:
        u = exp(-p1 * r)
        return p1 * (u / -expm1(-p1 * r) + _sigmoid(p1 * (p2 - r)))
    lk = log1p(p1 * r)
    return p1 / ((1.0 + p1 * r) * lk)


cdef double _slope_inverse(int kind, double p1, double p2, double price) noexcept nogil:
    cdef double lo = _R_FLOOR
    cdef double hi = _R_CAP
    cdef double mid
    cdef int i
    if _slope(kind, p1, p2, lo) <= price:
        return lo
    if _slope(kind, p1, p2, hi) >= price:
        return hi
    for i in range(_MAX_BISECT):
        mid = sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if _slope(kind, p1, p2, mid) > price:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BRACKET_RTOL * lo:
            break
    return 0.5 * (lo + hi)


def value(kind, p1, p2, r):
    """Normalized utility U(r); U(0) = 0, sigmoid saturates at 1."""
    return _value(kind, p1, p2, r)


def log_value(kind, p1, p2, r):
    """ln U(r) for r > 0, computed without forming U (stable in the tails)."""
    return _log_value(kind, p1, p2, r)


def slope(kind, p1, p2, r):
    """d ln U / dr at r > 0. Strictly positive and strictly decreasing
    (until it underflows to 0 deep in the sigmoid tail)."""
    return _slope(kind, p1, p2, r)


def slope_inverse(kind, p1, p2, price):
    """Rate r with slope(r) = price, by geometric bisection on
    [R_FLOOR, R_CAP]. Saturates at the bracket ends when price falls
    outside the attainable slope range."""
    return _slope_inverse(kind, p1, p2, price)


def demand_rates(kinds, p1s, p2s, weights, price, out):
    """Per-app demanded rates at a shared price: out[j] = S_j^{-1}(price / w_j)."""
    cdef const int64_t[::1] kv = np.ascontiguousarray(kinds, dtype=np.int64)
    cdef const double[::1] av = np.ascontiguousarray(p1s)
    cdef const double[::1] bv = np.ascontiguousarray(p2s)
    cdef const double[::1] wv = np.ascontiguousarray(weights)
    cdef double[::1] ov = out
    cdef double p = price
    cdef Py_ssize_t j, n = kv.shape[0]
    with nogil:
        for j in range(n):
            ov[j] = _slope_inverse(<int> kv[j], av[j], bv[j], p / wv[j])


def total_demand(kinds, p1s, p2s, weights, price):
    """Sum of demanded rates over all apps at a shared price."""
    cdef const int64_t[::1] kv = np.ascontiguousarray(kinds, dtype=np.int64)
    cdef const double[::1] av = np.ascontiguousarray(p1s)
    cdef const double[::1] bv = np.ascontiguousarray(p2s)
    cdef const double[::1] wv = np.ascontiguousarray(weights)
    cdef double p = price
    cdef double acc = 0.0
    cdef Py_ssize_t j, n = kv.shape[0]
    with nogil:
        for j in range(n):
            acc += _slope_inverse(<int> kv[j], av[j], bv[j], p / wv[j])
    return acc
