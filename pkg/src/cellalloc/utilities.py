"""Application utility curves.

Two families are supported, both normalized so U(0) = 0:

* ``SigmoidalUtility`` -- S-shaped satisfaction of a real-time application.
  U(r) = c*(1/(1 + e^{-a(r-b)}) - d) with c, d chosen so U(0) = 0 and
  U(inf) = 1. ``a`` controls steepness, ``b`` is the inflection point
  (roughly the rate the application needs before it becomes useful).

* ``LogarithmicUtility`` -- diminishing-returns satisfaction of a
  delay-tolerant application. U(r) = ln(1 + k*r) / ln(1 + k*r_max), equal to
  1 at ``r_max``. Evaluation beyond ``r_max`` is allowed and exceeds 1; the
  curve itself is what matters, clamping is the caller's business.

The interesting derived quantity is the slope of ln U, here just "slope":
it is strictly positive, strictly decreasing, and therefore invertible,
which is what every solver in this package leans on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels
from .errors import DomainError


def _require_positive_finite(name: str, x: float) -> None:
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"{name} must be positive and finite, got {x!r}")


@dataclass(frozen=True)
class SigmoidalUtility:
    """Sigmoid utility with steepness ``a`` and inflection rate ``b``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        _require_positive_finite("a", self.a)
        _require_positive_finite("b", self.b)

    @property
    def c(self) -> float:
        # normalization scale; equals (1 + e^{ab}) / e^{ab}, written so that
        # huge a*b degrades to the limit value 1 instead of overflowing
        return 1.0 + math.exp(-self.a * self.b)

    @property
    def d(self) -> float:
        # normalization offset; equals 1 / (1 + e^{ab}), limit e^{-ab}
        e = math.exp(-self.a * self.b)
        return e / (1.0 + e)

    def _packed(self):
        return kernels.SIGMOID, self.a, self.b

    def value(self, r: float) -> float:
        """U(r) for r >= 0. Exactly 0 at r = 0, saturates at 1."""
        if not (math.isfinite(r) and r >= 0.0):
            raise DomainError(f"rate must be finite and >= 0, got {r!r}")
        return kernels.value(kernels.SIGMOID, self.a, self.b, r)

    def log_value(self, r: float) -> float:
        """ln U(r) for r > 0, stable far into both tails."""
        _require_positive_finite("rate", r)
        return kernels.log_value(kernels.SIGMOID, self.a, self.b, r)

    def slope(self, r: float) -> float:
        """d ln U / dr at r > 0."""
        _require_positive_finite("rate", r)
        return kernels.slope(kernels.SIGMOID, self.a, self.b, r)

    def slope_inverse(self, price: float) -> float:
        """Rate at which the slope equals ``price``; saturates at the
        bracket ends [R_FLOOR, R_CAP] instead of failing."""
        _require_positive_finite("price", price)
        return kernels.slope_inverse(kernels.SIGMOID, self.a, self.b, price)

    def inflection(self) -> float:
        return self.b


@dataclass(frozen=True)
class LogarithmicUtility:
    """Logarithmic utility with growth rate ``k`` and saturation rate ``r_max``."""

    k: float
    r_max: float

    def __post_init__(self) -> None:
        _require_positive_finite("k", self.k)
        _require_positive_finite("r_max", self.r_max)

    def _packed(self):
        return kernels.LOG, self.k, self.r_max

    def value(self, r: float) -> float:
        if not (math.isfinite(r) and r >= 0.0):
            raise DomainError(f"rate must be finite and >= 0, got {r!r}")
        return kernels.value(kernels.LOG, self.k, self.r_max, r)

    def log_value(self, r: float) -> float:
        _require_positive_finite("rate", r)
        return kernels.log_value(kernels.LOG, self.k, self.r_max, r)

    def slope(self, r: float) -> float:
        _require_positive_finite("rate", r)
        return kernels.slope(kernels.LOG, self.k, self.r_max, r)

    def slope_inverse(self, price: float) -> float:
        _require_positive_finite("price", price)
        return kernels.slope_inverse(kernels.LOG, self.k, self.r_max, price)

    def inflection(self) -> float:
        # concave everywhere, so the inflection sits at the origin
        return 0.0


Utility = SigmoidalUtility | LogarithmicUtility
