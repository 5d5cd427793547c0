"""Kernel backend selection.

The hot numeric kernels exist twice: a Cython extension (``_kernels``) and a
pure-Python mirror (``_kernels_py``). The compiled one is picked at import
when present; set CELLALLOC_BACKEND=python to force the fallback (any other
value, or an unbuilt extension, falls back silently).

``benchmarks/bench_backends.py`` compares the two.
"""

import os

from . import _kernels_py

_choice = os.environ.get("CELLALLOC_BACKEND", "auto")

if _choice != "python":
    try:
        from . import _kernels as _impl
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _kernels_py
else:
    _impl = _kernels_py

BACKEND = _impl.BACKEND_NAME

SIGMOID = _impl.SIGMOID
LOG = _impl.LOG
R_FLOOR = _impl.R_FLOOR
R_CAP = _impl.R_CAP

value = _impl.value
log_value = _impl.log_value
slope = _impl.slope
slope_inverse = _impl.slope_inverse
demand_rates = _impl.demand_rates
total_demand = _impl.total_demand
