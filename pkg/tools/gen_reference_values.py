"""Regenerate the high-precision reference constants frozen into the tests.

Every numeric literal in the test suite's reference tables comes from this
script: direct substitution into the closed forms with mpmath, working
precision scaled to the exponent range of each evaluation so that even
quantities like exp(-700) keep 60 significant digits, results printed to
20 significant digits (float64 carries under 17, so the rounding step in
the tests is exact).

Tables produced:
  * sigmoid/logarithmic utility values U, ln U, and marginal prices S at
    the probe rates used in tests/test_utilities.py
  * the derived sigmoid constants c = 1 + e^{-ab} and d = e^{-ab}/(1+e^{-ab})
  * the rate at which the k=15 logarithmic curve has unit marginal price
    (tests/test_allocator.py)
  * the steady-state price bounds a*d/(1-d) + a/2 for the reference cell
    and for an (a=1, b=25) largest-sigmoid variant (tests/test_protocol.py)

Run from the repository root:

    python3 tools/gen_reference_values.py
"""

import mpmath as mp

SIGMOIDS = [(5, 5), (4, 10), (3, 15), (2, 20), (1, 25), (0.5, 30)]
LOGS = [(15, 100), (12, 100), (9, 100), (6, 100), (3, 100), (1, 100)]


def _dps_for(exponent_range):
    # keep 60 significant digits after cancellation across the given
    # decimal-exponent span
    return int(60 + abs(exponent_range))


def sig_value(a, b, r):
    return -mp.expm1(-a * r) / (1 + mp.e ** (-a * (r - b)))


def sig_slope(a, b, r):
    u = mp.e ** (-a * r)
    return a * (u / -mp.expm1(-a * r) + 1 / (1 + mp.e ** (a * (r - b))))


def log_value(k, r_max, r):
    return mp.log1p(k * r) / mp.log1p(k * r_max)


def log_slope(k, r_max, r):
    return k / ((1 + k * r) * mp.log1p(k * r))


def _fmt(x):
    return mp.nstr(x, 20, strip_zeros=False)


def sigmoid_table():
    print("# (a, b, r, U, lnU, S)")
    print("SIGMOID_REFERENCE = [")
    for a, b in SIGMOIDS:
        mp.mp.dps = _dps_for(a * b)  # tail terms like e^{-ab} must survive
        for r in (b / 2, b, 1.5 * b):
            u = sig_value(a, b, r)
            row = (_fmt(u), _fmt(mp.log(u)), _fmt(sig_slope(a, b, r)))
            print(f"    ({a}, {b}, {float(r)}, {row[0]}, {row[1]}, {row[2]}),")
    print("]")


def log_table():
    mp.mp.dps = 60
    print("# (k, r_max, r, U, lnU, S)")
    print("LOG_REFERENCE = [")
    for k, r_max in LOGS:
        for r in (1.0, 50.0, 100.0):
            u = log_value(k, r_max, mp.mpf(r))
            row = (_fmt(u), _fmt(mp.log(u)), _fmt(log_slope(k, r_max, mp.mpf(r))))
            print(f"    ({k}, {r_max}, {r}, {row[0]}, {row[1]}, {row[2]}),")
    print("]")


def cd_table():
    print("# (a, b, c, d) for the six reference sigmoids")
    print("CD_REFERENCE = [")
    for a, b in SIGMOIDS:
        mp.mp.dps = _dps_for(a * b)
        e = mp.e ** (-mp.mpf(a) * b)
        print(f"    ({a}, {b}, {_fmt(1 + e)}, {_fmt(e / (1 + e))}),")
    print("]")


def unit_price_rate():
    mp.mp.dps = 60
    k = mp.mpf(15)
    r = mp.findroot(lambda r: log_slope(k, 100, r) - 1, mp.mpf("0.4"))
    print(f"_LOG15_UNIT_PRICE_RATE = {_fmt(r)}")


def price_bounds():
    for label, (a, b) in [("_REFERENCE_BOUND", (0.5, 30)),
                          ("_BOUND_A1_B25", (1, 25))]:
        mp.mp.dps = _dps_for(a * b)
        e = mp.e ** (-mp.mpf(a) * b)
        d = e / (1 + e)
        print(f"{label} = {_fmt(a * d / (1 - d) + mp.mpf(a) / 2)}")


if __name__ == "__main__":
    sigmoid_table()
    print()
    log_table()
    print()
    cd_table()
    print()
    unit_price_rate()
    price_bounds()
